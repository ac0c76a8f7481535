"""Query template parsing and query-set assembly.

Queries follow a fixed two-slot template, e.g.
``"For the image with a Truck, is there a Dog?"``. The first slot (anchor)
names the object class that identifies the sought image; the second (target)
names the class the question asks about. Slot text is matched
case-insensitively, accepts either article "a" or "an", tolerates trailing
punctuation, and may contain internal spaces ("traffic light").
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, QueryParseError
from .store import EmbeddingMatrix, ReferenceStore, lookup_references, normalize_rows

QUERY_MODES = ("anchor", "target")

_TEMPLATE = "For the image with a(n) {anchor}, is there a(n) {target}?"
_QUERY_RE = re.compile(
    r"^\s*for\s+the\s+image\s+with\s+an?\s+(.+?)\s*,\s*is\s+there\s+an?\s+(.+?)\s*[?.!]*\s*$",
    re.IGNORECASE,
)

_ROW_NORM_TOL = 1e-5


def _canonical_label(text: str) -> str:
    return " ".join(text.split()).lower()


@dataclass(frozen=True)
class ParsedQuery:
    """Anchor and target class labels extracted from one query string."""

    anchor: str
    target: str
    raw: str

    def __post_init__(self) -> None:
        for name, value in (("anchor", self.anchor), ("target", self.target)):
            if not value or value != value.strip():
                raise QueryParseError(f"{name} slot is empty or has stray whitespace: {value!r}")


def parse_query(text: str) -> ParsedQuery:
    """Extract anchor and target classes from the query template.

    Raises :class:`QueryParseError` describing the expected template when the
    text does not match.
    """
    match = _QUERY_RE.match(text)
    if match is None:
        raise QueryParseError(
            f"query {text!r} does not match the template {_TEMPLATE!r}"
        )
    anchor = _canonical_label(match.group(1))
    target = _canonical_label(match.group(2))
    if not anchor or not target:
        raise QueryParseError(f"query {text!r} has an empty class slot")
    return ParsedQuery(anchor=anchor, target=target, raw=text)


def render_query(anchor: str, target: str) -> str:
    """Render the canonical query string for an anchor/target pair."""

    def article(word: str) -> str:
        return "an" if word[:1].lower() in "aeiou" else "a"

    anchor = _canonical_label(anchor)
    target = _canonical_label(target)
    return f"For the image with {article(anchor)} {anchor}, is there {article(target)} {target}?"


@dataclass(frozen=True)
class QuerySet:
    """Unit-normalized query embeddings plus their provenance.

    Rows are the chosen class's reference embeddings (stored order) followed
    by any augmented embeddings (file order).
    """

    embeddings: np.ndarray
    source_class: str
    mode: str
    reference_ids: tuple[str, ...]
    augmented_count: int = 0

    def __post_init__(self) -> None:
        emb = np.ascontiguousarray(self.embeddings, dtype=np.float32)
        object.__setattr__(self, "embeddings", emb)
        if self.mode not in QUERY_MODES:
            raise ValueError(f"mode must be one of {QUERY_MODES}, got {self.mode!r}")
        if emb.ndim != 2 or emb.shape[0] < 1:
            raise DimensionMismatchError(f"query embeddings must be q x d with q >= 1, got {emb.shape}")
        if self.augmented_count < 0:
            raise ValueError("augmented_count must be >= 0")
        if emb.shape[0] != len(self.reference_ids) + self.augmented_count:
            raise DimensionMismatchError(
                f"{emb.shape[0]} rows != {len(self.reference_ids)} references "
                f"+ {self.augmented_count} augmented"
            )
        norms = np.linalg.norm(emb.astype(np.float64), axis=1)
        if np.abs(norms - 1.0).max() > _ROW_NORM_TOL:
            worst = int(np.argmax(np.abs(norms - 1.0)))
            raise DimensionMismatchError(
                f"query row {worst} is not unit-normalized (norm {norms[worst]:.8f})"
            )

    @property
    def q(self) -> int:
        return self.embeddings.shape[0]

    @property
    def d(self) -> int:
        return self.embeddings.shape[1]


def build_query_set(
    parsed: ParsedQuery,
    mode: str,
    store: ReferenceStore,
    ref_count: int,
    augmented: EmbeddingMatrix | None = None,
) -> QuerySet:
    """Assemble the query embeddings for one parsed query.

    Picks the anchor or target class per ``mode``, takes up to ``ref_count``
    reference embeddings in stored order, and appends every augmented row.
    """
    if mode not in QUERY_MODES:
        raise ValueError(f"mode must be one of {QUERY_MODES}, got {mode!r}")
    label = parsed.anchor if mode == "anchor" else parsed.target
    indices = lookup_references(store, label, ref_count)
    rows = [store.matrix.data[indices]]
    reference_ids = tuple(store.matrix.ids[i] for i in indices)

    augmented_count = 0
    if augmented is not None and augmented.n > 0:
        if augmented.d != store.matrix.d:
            raise DimensionMismatchError(
                f"augmented rows have d={augmented.d}, references have d={store.matrix.d}"
            )
        rows.append(normalize_rows(augmented).data)
        augmented_count = augmented.n

    return QuerySet(
        embeddings=np.concatenate(rows, axis=0),
        source_class=label,
        mode=mode,
        reference_ids=reference_ids,
        augmented_count=augmented_count,
    )
