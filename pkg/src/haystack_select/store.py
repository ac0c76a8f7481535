"""Embedding matrices, their on-disk format, and the class reference store.

On-disk layout (all little-endian):

* embedding file: magic ``EMB1`` (4 bytes), u32 version = 1, u64 row count
  ``n``, u64 feature dimension ``d``, then ``n * d`` IEEE-754 float32 values
  in row-major order;
* manifest: JSON array with one object per row, ``{"id": str,
  "class": str | null}``; an optional ``"augmentation"`` key tags rows
  produced by the augmentation tool (informational).

A reference store is an embedding file plus a manifest in which ``class`` is
mandatory for every row.

Matrices are immutable after construction and safe for concurrent reads.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatchError,
    DuplicateIdError,
    EmbeddingFormatError,
    ManifestError,
    NonFiniteValueError,
    UnknownClassError,
    ZeroNormRowError,
)

MAGIC = b"EMB1"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIQQ")

# Max allowed deviation of a unit row's Euclidean norm from 1.0.
NORM_TOLERANCE = 1e-5


@dataclass(frozen=True)
class EmbeddingMatrix:
    """An ``n x d`` float32 feature matrix with row ids and optional class labels."""

    data: np.ndarray
    ids: tuple[str, ...]
    classes: tuple[str | None, ...] | None = None
    normalized: bool = False
    augmentations: tuple[str | None, ...] | None = None

    def __post_init__(self) -> None:
        data = np.ascontiguousarray(self.data, dtype=np.float32)
        object.__setattr__(self, "data", data)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise DimensionMismatchError(
                f"embedding matrix must be 2-D with n >= 1 and d >= 1, got shape {data.shape}"
            )
        if len(self.ids) != data.shape[0]:
            raise ManifestError(
                f"{len(self.ids)} ids for {data.shape[0]} rows"
            )
        seen: dict[str, int] = {}
        for pos, item_id in enumerate(self.ids):
            if item_id in seen:
                raise DuplicateIdError(item_id, seen[item_id], pos)
            seen[item_id] = pos
        if self.classes is not None and len(self.classes) != data.shape[0]:
            raise ManifestError(
                f"{len(self.classes)} class labels for {data.shape[0]} rows"
            )
        if not np.isfinite(data).all():
            bad = np.argwhere(~np.isfinite(data))[0]
            raise NonFiniteValueError(
                f"non-finite value at row {bad[0]} (id {self.ids[bad[0]]!r}), column {bad[1]}"
            )
        if self.normalized:
            norms = np.linalg.norm(data.astype(np.float64), axis=1)
            worst = int(np.argmax(np.abs(norms - 1.0)))
            if abs(norms[worst] - 1.0) > NORM_TOLERANCE:
                raise DimensionMismatchError(
                    f"row {worst} (id {self.ids[worst]!r}) marked normalized "
                    f"but has norm {norms[worst]:.8f}"
                )

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    def index_of(self, item_id: str) -> int:
        try:
            return self.ids.index(item_id)
        except ValueError:
            raise KeyError(item_id) from None

    def take(self, rows) -> "EmbeddingMatrix":
        """New matrix holding the given rows, in the given order."""
        rows = np.asarray(rows, dtype=np.intp)
        return EmbeddingMatrix(
            data=self.data[rows],
            ids=tuple(self.ids[i] for i in rows),
            classes=None if self.classes is None else tuple(self.classes[i] for i in rows),
            normalized=self.normalized,
            augmentations=None
            if self.augmentations is None
            else tuple(self.augmentations[i] for i in rows),
        )


@dataclass(frozen=True)
class ReferenceStore:
    """Class label -> row indices into a dedicated reference embedding matrix."""

    matrix: EmbeddingMatrix
    by_class: dict[str, tuple[int, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.matrix.classes is None:
            raise ManifestError("reference store manifest must assign a class to every row")
        for label, indices in self.by_class.items():
            if len(indices) < 1:
                raise ManifestError(f"class {label!r} has no reference embeddings")
            for idx in indices:
                if not 0 <= idx < self.matrix.n:
                    raise IndexError(
                        f"reference index {idx} for class {label!r} out of range [0, {self.matrix.n})"
                    )

    @property
    def classes(self) -> list[str]:
        return list(self.by_class)

    @classmethod
    def from_matrix(cls, matrix: EmbeddingMatrix) -> "ReferenceStore":
        """Group rows by class label, preserving row order within each class."""
        if matrix.classes is None:
            raise ManifestError("reference store manifest must assign a class to every row")
        grouped: dict[str, list[int]] = {}
        for idx, label in enumerate(matrix.classes):
            if label is None:
                raise ManifestError(
                    f"reference row {idx} (id {matrix.ids[idx]!r}) has no class label"
                )
            grouped.setdefault(label, []).append(idx)
        return cls(matrix=matrix, by_class={k: tuple(v) for k, v in grouped.items()})


def load_embeddings(path: str | Path, manifest_path: str | Path) -> EmbeddingMatrix:
    """Read and validate an embedding file together with its manifest.

    Rows are returned as stored, not normalized. Raises
    :class:`EmbeddingFormatError` on a bad header or truncated payload,
    :class:`ManifestError` / :class:`DuplicateIdError` on manifest problems,
    and :class:`NonFiniteValueError` on NaN/Inf data.
    """
    path = Path(path)
    manifest_path = Path(manifest_path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise EmbeddingFormatError(
            f"file too short for header ({len(raw)} bytes)", path=str(path), offset=0
        )
    magic, version, n, d = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise EmbeddingFormatError(
            f"bad magic {magic!r}, expected {MAGIC!r}", path=str(path), offset=0
        )
    if version != FORMAT_VERSION:
        raise EmbeddingFormatError(
            f"unsupported version {version}, expected {FORMAT_VERSION}", path=str(path), offset=4
        )
    if n < 1 or d < 1:
        raise EmbeddingFormatError(
            f"header declares n={n}, d={d}; both must be >= 1", path=str(path), offset=8
        )
    expected = n * d * 4
    payload = raw[_HEADER.size:]
    if len(payload) != expected:
        raise EmbeddingFormatError(
            f"payload holds {len(payload) // 4} float32 values, header implies {n * d}",
            path=str(path),
            offset=_HEADER.size + min(len(payload), expected),
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(n, d)

    entries = _read_manifest(manifest_path)
    if len(entries) != n:
        raise ManifestError(
            f"manifest {manifest_path} has {len(entries)} entries, embedding file has {n} rows"
        )
    ids = tuple(e["id"] for e in entries)
    class_values = [e.get("class") for e in entries]
    classes = None if all(c is None for c in class_values) else tuple(class_values)
    aug_values = [e.get("augmentation") for e in entries]
    augmentations = None if all(a is None for a in aug_values) else tuple(aug_values)
    return EmbeddingMatrix(
        data=data.copy(), ids=ids, classes=classes, normalized=False, augmentations=augmentations
    )


def _read_manifest(manifest_path: Path) -> list[dict]:
    try:
        entries = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest {manifest_path} is not valid JSON: {exc}") from exc
    if not isinstance(entries, list):
        raise ManifestError(f"manifest {manifest_path} must be a JSON array")
    for pos, entry in enumerate(entries):
        if not isinstance(entry, dict) or not isinstance(entry.get("id"), str):
            raise ManifestError(f"manifest entry {pos} must be an object with a string 'id'")
        if entry.get("class") is not None and not isinstance(entry["class"], str):
            raise ManifestError(f"manifest entry {pos} has a non-string 'class'")
    return entries


def write_embeddings(matrix: EmbeddingMatrix, path: str | Path, manifest_path: str | Path) -> None:
    """Write the canonical on-disk form (header + float32 payload + manifest)."""
    path = Path(path)
    manifest_path = Path(manifest_path)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, matrix.n, matrix.d))
        fh.write(np.ascontiguousarray(matrix.data, dtype="<f4").tobytes())
    entries = []
    for idx in range(matrix.n):
        entry: dict = {"id": matrix.ids[idx]}
        entry["class"] = None if matrix.classes is None else matrix.classes[idx]
        if matrix.augmentations is not None and matrix.augmentations[idx] is not None:
            entry["augmentation"] = matrix.augmentations[idx]
        entries.append(entry)
    manifest_path.write_text(json.dumps(entries, separators=(",", ":")) + "\n")


def normalize_rows(matrix: EmbeddingMatrix) -> EmbeddingMatrix:
    """Divide each row by its Euclidean norm.

    Idempotent: a matrix already flagged normalized is returned unchanged.
    Zero-norm rows are hard errors; silently skipping them would desynchronize
    ids and row indices.
    """
    if matrix.normalized:
        return matrix
    norms = np.linalg.norm(matrix.data.astype(np.float64), axis=1)
    zero = np.flatnonzero(norms < 1e-30)
    if zero.size:
        idx = int(zero[0])
        raise ZeroNormRowError(idx, matrix.ids[idx])
    data = (matrix.data.astype(np.float64) / norms[:, None]).astype(np.float32)
    return EmbeddingMatrix(
        data=data,
        ids=matrix.ids,
        classes=matrix.classes,
        normalized=True,
        augmentations=matrix.augmentations,
    )


def lookup_references(store: ReferenceStore, class_label: str, count: int) -> list[int]:
    """First ``min(count, available)`` reference row indices for a class.

    Stored order is deterministic: the reference pool is frozen at load time.
    """
    if count < 1:
        raise ValueError(f"count must be positive, got {count}")
    if class_label not in store.by_class:
        raise UnknownClassError(class_label, store.classes)
    indices = store.by_class[class_label]
    return list(indices[: min(count, len(indices))])


def load_reference_store(path: str | Path, manifest_path: str | Path) -> ReferenceStore:
    """Load a reference store; every manifest row must carry a class label."""
    return ReferenceStore.from_matrix(normalize_rows(load_embeddings(path, manifest_path)))
