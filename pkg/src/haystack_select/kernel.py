"""Cosine similarity kernels over unit-normalized embeddings.

Two transforms are supported: ``raw`` keeps cosine values in [-1, 1],
``shifted`` maps them order-preservingly onto [0, 1] via (1 + c) / 2. Square
blocks get ``jitter`` added on the diagonal so downstream Cholesky
factorizations stay positive definite.

Ground-to-ground similarities for large sets are served by
:class:`GroundSimilarity`, which materializes the full float32 matrix only
up to a row cap and computes columns on demand above it. Both paths stage
the arithmetic in float32 before widening to float64, so callers see
identical values regardless of which path served them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DimensionMismatchError
from .querykit import QuerySet
from .store import EmbeddingMatrix

TRANSFORMS = ("raw", "shifted")
DEFAULT_JITTER = 1e-6
DEFAULT_GROUND_CAP = 20_000


@dataclass(frozen=True)
class KernelConfig:
    transform: str = "shifted"
    jitter: float = DEFAULT_JITTER

    def __post_init__(self) -> None:
        if self.transform not in TRANSFORMS:
            raise ConfigurationError(
                f"transform must be one of {TRANSFORMS}, got {self.transform!r}"
            )
        if not (self.jitter >= 0.0):
            raise ConfigurationError(f"jitter must be >= 0, got {self.jitter!r}")


def apply_transform(values: np.ndarray, transform: str) -> np.ndarray:
    """Clamp cosines to [-1, 1], then apply the configured transform."""
    clipped = np.clip(values, -1.0, 1.0)
    if transform == "raw":
        return clipped
    if transform == "shifted":
        return (1.0 + clipped) / 2.0
    raise ConfigurationError(f"unknown transform {transform!r}")


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity of two unit vectors, clamped to [-1, 1]."""
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if u.shape != v.shape:
        raise DimensionMismatchError(f"vector lengths differ: {u.shape[0]} vs {v.shape[0]}")
    return float(np.clip(u @ v, -1.0, 1.0))


def _require_normalized(matrix: EmbeddingMatrix, role: str) -> None:
    if not matrix.normalized:
        raise ConfigurationError(
            f"{role} embeddings must be normalized first (see normalize_rows)"
        )


@dataclass(frozen=True)
class QueryKernel:
    """Dense ground-to-query similarity block (n x q, float64)."""

    s_vq: np.ndarray
    config: KernelConfig

    @property
    def n(self) -> int:
        return self.s_vq.shape[0]

    @property
    def q(self) -> int:
        return self.s_vq.shape[1]


def build_query_kernel(
    ground: EmbeddingMatrix, queries: QuerySet, config: KernelConfig
) -> QueryKernel:
    """Similarities between every ground item and every query embedding."""
    _require_normalized(ground, "ground")
    if ground.d != queries.d:
        raise DimensionMismatchError(
            f"ground embeddings have d={ground.d}, queries have d={queries.d}"
        )
    sims = ground.data.astype(np.float64) @ queries.embeddings.astype(np.float64).T
    return QueryKernel(s_vq=apply_transform(sims, config.transform), config=config)


def kernel_block(
    ground: EmbeddingMatrix,
    rows: Sequence[int],
    cols: Sequence[int],
    config: KernelConfig,
) -> np.ndarray:
    """Similarity block between two index lists into the ground set.

    When ``rows`` and ``cols`` are the same list the result is symmetrized
    and gets ``jitter`` added on the diagonal, keeping it safely positive
    definite for factorization.
    """
    _require_normalized(ground, "ground")
    rows = np.asarray(rows, dtype=np.intp)
    cols = np.asarray(cols, dtype=np.intp)
    for name, idx in (("rows", rows), ("cols", cols)):
        if idx.size and (idx.min() < 0 or idx.max() >= ground.n):
            raise IndexError(f"{name} contain indices outside [0, {ground.n})")
    left = ground.data[rows].astype(np.float64)
    right = ground.data[cols].astype(np.float64)
    block = apply_transform(left @ right.T, config.transform)
    if rows.shape == cols.shape and np.array_equal(rows, cols):
        block = (block + block.T) / 2.0
        block[np.diag_indices_from(block)] += config.jitter
    return block


def gram_block(embeddings: np.ndarray, config: KernelConfig) -> np.ndarray:
    """Self-similarity Gram of raw unit rows, symmetrized, with jitter."""
    x = np.asarray(embeddings, dtype=np.float64)
    block = apply_transform(x @ x.T, config.transform)
    block = (block + block.T) / 2.0
    block[np.diag_indices_from(block)] += config.jitter
    return block


class GroundSimilarity:
    """Column access into the ground-to-ground similarity matrix.

    Results are float64 but staged in float32, matching the stored embedding
    precision, so the materialized and on-demand paths agree bit for bit.
    """

    def __init__(
        self,
        ground: EmbeddingMatrix,
        config: KernelConfig,
        cap: int = DEFAULT_GROUND_CAP,
    ) -> None:
        _require_normalized(ground, "ground")
        if cap < 0:
            raise ConfigurationError(f"cap must be >= 0, got {cap}")
        self._data = ground.data
        self._transform = config.transform
        self._full: np.ndarray | None = None
        if ground.n <= cap:
            sims = self._data @ self._data.T
            self._full = apply_transform(sims, self._transform).astype(np.float32)

    @property
    def n(self) -> int:
        return self._data.shape[0]

    @property
    def materialized(self) -> bool:
        return self._full is not None

    def columns(self, indices: np.ndarray) -> np.ndarray:
        """Similarities of every ground item to the indexed items (n x m)."""
        indices = np.asarray(indices, dtype=np.intp)
        if self._full is not None:
            return self._full[:, indices].astype(np.float64)
        sims = self._data @ self._data[indices].T
        return apply_transform(sims, self._transform).astype(np.float32).astype(np.float64)
