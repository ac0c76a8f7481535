"""Query-aware submodular objectives and their incremental evaluators.

Three instantiations over cosine kernels, plus a convex mixture:

- ``gcmi``: modular query-coverage score, ``2 * lambda * sum_{i in A, j in Q} s_ij``.
- ``flvmi``: saturated facility-location coverage. Every ground item v
  contributes ``min(max_{j in A} s_vj, eta * max_{j in Q} s_vj)``; the max
  over an empty selection is 0. Requires non-negative similarities.
- ``logdet``: ``logdet(S_A) - logdet(S_A - eta^2 S_AQ S_Q^{-1} S_QA)`` with
  jitter added to every square block's diagonal.
- ``mixture``: weighted sum of the above. Component gains live on wildly
  different scales, so each weight is divided by that component's singleton
  gain range on the instance before renormalizing; a pure weight vector such
  as (1, 0, 0) therefore reproduces the single objective exactly.

Each objective offers a from-scratch value function and an incremental
state with vectorized batch gains. The logdet state grows a pair of
Cholesky factors one row per accepted item, so a full greedy run costs
O(n k^2 + k^3) instead of the O(n k^4) that refactoring at every step
would take.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve, cholesky, solve_triangular

from .errors import ConfigurationError, NumericalError
from .kernel import (
    DEFAULT_GROUND_CAP,
    DEFAULT_JITTER,
    GroundSimilarity,
    KernelConfig,
    QueryKernel,
    apply_transform,
    build_query_kernel,
    gram_block,
    kernel_block,
)
from .querykit import QuerySet
from .store import EmbeddingMatrix

OBJECTIVE_KINDS = ("gcmi", "flvmi", "logdet", "mixture")

# Transform each objective is defined over unless the caller overrides it:
# the coverage objectives need non-negative similarities, logdet benefits
# from keeping raw cosine contrast.
PREFERRED_TRANSFORMS = {"gcmi": "shifted", "flvmi": "shifted", "logdet": "raw"}

MIXTURE_COMPONENTS = ("gcmi", "flvmi", "logdet")

_WEIGHT_TOL = 1e-9
_SCALE_FLOOR = 1e-9

# Cap on float64 elements held by one batched gain evaluation.
_GAIN_CHUNK_ELEMENTS = 8_000_000


@dataclass(frozen=True)
class ObjectiveSpec:
    """Which objective to maximize and its scalar knobs.

    ``weights`` orders the mixture components (gcmi, flvmi, logdet) and is
    normalized to sum to 1, so scaling all weights by a positive constant
    changes nothing.
    """

    kind: str
    lam: float = 1.0
    eta: float = 1.0
    weights: tuple[float, float, float] | None = None

    def __post_init__(self) -> None:
        if self.kind not in OBJECTIVE_KINDS:
            raise ConfigurationError(
                f"kind must be one of {OBJECTIVE_KINDS}, got {self.kind!r}"
            )
        if not (self.lam > 0.0):
            raise ConfigurationError(f"lambda must be > 0, got {self.lam!r}")
        if not (self.eta > 0.0):
            raise ConfigurationError(f"eta must be > 0, got {self.eta!r}")
        if self.kind == "mixture":
            if self.weights is None:
                raise ConfigurationError("mixture requires weights")
            w = tuple(float(x) for x in self.weights)
            if len(w) != len(MIXTURE_COMPONENTS):
                raise ConfigurationError(
                    f"weights must have {len(MIXTURE_COMPONENTS)} entries, got {len(w)}"
                )
            if any(x < 0.0 for x in w) or not all(np.isfinite(w)):
                raise ConfigurationError(f"weights must be finite and >= 0, got {w}")
            total = sum(w)
            if total <= 0.0:
                raise ConfigurationError("weights must not all be zero")
            object.__setattr__(self, "weights", tuple(x / total for x in w))
        elif self.weights is not None:
            raise ConfigurationError(f"weights only apply to mixture, not {self.kind!r}")

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind, "lambda": self.lam, "eta": self.eta}
        if self.weights is not None:
            out["weights"] = list(self.weights)
        return out


def _selected_array(selected: Sequence[int]) -> np.ndarray:
    idx = np.asarray(list(selected), dtype=np.intp)
    if idx.size != np.unique(idx).size:
        raise ValueError("selected indices must be distinct")
    return idx


def gcmi_value(selected: Sequence[int], query_sims: QueryKernel | np.ndarray, lam: float = 1.0) -> float:
    """From-scratch gcmi value of a selection."""
    sims = query_sims.s_vq if isinstance(query_sims, QueryKernel) else np.asarray(query_sims)
    idx = _selected_array(selected)
    if idx.size == 0:
        return 0.0
    return float(2.0 * lam * sims[idx].sum())


def flvmi_value(
    selected: Sequence[int],
    ground_sims: GroundSimilarity | np.ndarray,
    query_max: np.ndarray,
    eta: float = 1.0,
) -> float:
    """From-scratch flvmi value of a selection.

    ``query_max`` holds max_{j in Q} s_vj per ground item; ``eta`` scales it
    into the saturation ceiling.
    """
    query_max = np.asarray(query_max, dtype=np.float64)
    if query_max.min() < 0.0:
        raise ConfigurationError(
            "flvmi requires non-negative similarities; use the shifted transform"
        )
    idx = _selected_array(selected)
    ceil = eta * query_max
    if idx.size == 0:
        return 0.0
    if isinstance(ground_sims, GroundSimilarity):
        cols = ground_sims.columns(idx)
    else:
        cols = np.asarray(ground_sims, dtype=np.float64)[:, idx]
    if cols.min() < 0.0:
        raise ConfigurationError(
            "flvmi requires non-negative similarities; use the shifted transform"
        )
    return float(np.minimum(cols.max(axis=1), ceil).sum())


def logdetmi_value(
    selected: Sequence[int],
    ground: EmbeddingMatrix,
    queries: QuerySet,
    eta: float = 1.0,
    config: KernelConfig | None = None,
) -> float:
    """From-scratch logdet objective value via dense factorizations."""
    config = config or KernelConfig(transform="raw")
    idx = _selected_array(selected)
    if idx.size == 0:
        return 0.0
    s_a = kernel_block(ground, idx, idx, config)
    xq = queries.embeddings.astype(np.float64)
    xg = ground.data[idx].astype(np.float64)
    s_q = gram_block(xq, config)
    s_aq = apply_transform(xg @ xq.T, config.transform)

    factor = cho_factor(s_q, lower=True)
    deficit = s_a - (eta * eta) * (s_aq @ cho_solve(factor, s_aq.T))
    sign_a, logdet_a = np.linalg.slogdet(s_a)
    sign_d, logdet_d = np.linalg.slogdet(deficit)
    if sign_a <= 0.0 or sign_d <= 0.0:
        raise NumericalError(
            "logdet blocks are not positive definite; increase jitter or reduce eta"
        )
    return float(logdet_a - logdet_d)


def _gain_chunks(count: int, n: int) -> int:
    return max(1, _GAIN_CHUNK_ELEMENTS // max(1, n))


class _StateBase:
    """Shared single-candidate helper; subclasses provide batch gains."""

    selected: list[int]

    def gain(self, index: int) -> float:
        return float(self.gains(np.asarray([index], dtype=np.intp))[0])

    def gains(self, candidates: np.ndarray) -> np.ndarray:  # pragma: no cover
        raise NotImplementedError


class _GcmiState(_StateBase):
    def __init__(self, row_gain: np.ndarray) -> None:
        self._row_gain = row_gain
        self._value = 0.0
        self.selected: list[int] = []

    @property
    def value(self) -> float:
        return self._value

    def gains(self, candidates: np.ndarray) -> np.ndarray:
        return self._row_gain[candidates].copy()

    def accept(self, index: int) -> None:
        self._value += float(self._row_gain[index])
        self.selected.append(int(index))


class _FlvmiState(_StateBase):
    def __init__(self, provider: GroundSimilarity, ceil: np.ndarray) -> None:
        self._provider = provider
        self._ceil = ceil
        self._best = np.zeros(provider.n, dtype=np.float64)
        self._covered = 0.0
        self.selected: list[int] = []

    @property
    def value(self) -> float:
        return self._covered

    def _columns(self, indices: np.ndarray) -> np.ndarray:
        cols = self._provider.columns(indices)
        if cols.size and cols.min() < 0.0:
            raise ConfigurationError(
                "flvmi requires non-negative similarities; use the shifted transform"
            )
        return cols

    def gains(self, candidates: np.ndarray) -> np.ndarray:
        out = np.empty(candidates.size, dtype=np.float64)
        step = _gain_chunks(candidates.size, self._provider.n)
        for start in range(0, candidates.size, step):
            chunk = candidates[start : start + step]
            cols = self._columns(chunk)
            np.maximum(cols, self._best[:, None], out=cols)
            np.minimum(cols, self._ceil[:, None], out=cols)
            out[start : start + chunk.size] = cols.sum(axis=0) - self._covered
        return out

    def accept(self, index: int) -> None:
        col = self._columns(np.asarray([index], dtype=np.intp))[:, 0]
        np.maximum(self._best, col, out=self._best)
        self._covered = float(np.minimum(self._best, self._ceil).sum())
        self.selected.append(int(index))


class _LogDetInstance:
    """Shared per-problem arrays for the logdet states.

    ``u`` holds L_Q^{-1} S_Qv per ground item, so the deficit matrix entries
    are S_xy - eta^2 u_x . u_y without ever forming the n x n correction.
    """

    def __init__(
        self,
        ground: EmbeddingMatrix,
        queries: QuerySet,
        eta: float,
        config: KernelConfig,
    ) -> None:
        self.transform = config.transform
        self.jitter = config.jitter
        self.eta_sq = eta * eta
        self.xg = ground.data.astype(np.float64)
        xq = queries.embeddings.astype(np.float64)
        s_q = gram_block(xq, config)
        try:
            l_q = cholesky(s_q, lower=True)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - jitter prevents this
            raise NumericalError(f"query kernel is not positive definite: {exc}") from exc
        s_qv = apply_transform(xq @ self.xg.T, self.transform)
        self.u = solve_triangular(l_q, s_qv, lower=True)
        self_sim = apply_transform(np.einsum("ij,ij->i", self.xg, self.xg), self.transform)
        self.s_diag = self_sim + self.jitter
        self.d_diag = self.s_diag - self.eta_sq * np.square(self.u).sum(axis=0)
        if self.d_diag.min() <= 0.0:
            raise NumericalError(
                "logdet deficit diagonal is not positive "
                f"(min {self.d_diag.min():.3e}); increase jitter or reduce eta"
            )

    def cross(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        sims = self.xg[rows] @ self.xg[cols].T
        return apply_transform(sims, self.transform)


class _LogDetState(_StateBase):
    def __init__(self, instance: _LogDetInstance) -> None:
        self._inst = instance
        q = instance.u.shape[0]
        self._l_a = np.empty((0, 0), dtype=np.float64)
        self._l_d = np.empty((0, 0), dtype=np.float64)
        self._u_sel = np.empty((0, q), dtype=np.float64)
        self._logdet_a = 0.0
        self._logdet_d = 0.0
        self.selected: list[int] = []

    @property
    def value(self) -> float:
        return self._logdet_a - self._logdet_d

    def _residuals(self, candidates: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        inst = self._inst
        res_a = inst.s_diag[candidates].copy()
        res_d = inst.d_diag[candidates].copy()
        if self.selected:
            sel = np.asarray(self.selected, dtype=np.intp)
            s_sc = inst.cross(sel, candidates)
            w_a = solve_triangular(self._l_a, s_sc, lower=True)
            res_a -= np.square(w_a).sum(axis=0)
            d_sc = s_sc - inst.eta_sq * (self._u_sel @ inst.u[:, candidates])
            w_d = solve_triangular(self._l_d, d_sc, lower=True)
            res_d -= np.square(w_d).sum(axis=0)
        if res_a.size and (res_a.min() <= 0.0 or res_d.min() <= 0.0):
            worst = float(min(res_a.min(), res_d.min()))
            raise NumericalError(
                f"logdet residual dropped to {worst:.3e}; the kernel block is "
                "too ill-conditioned, increase jitter or reduce eta"
            )
        return res_a, res_d

    def gains(self, candidates: np.ndarray) -> np.ndarray:
        res_a, res_d = self._residuals(candidates)
        return np.log(res_a) - np.log(res_d)

    @staticmethod
    def _extend(factor: np.ndarray, row: np.ndarray, corner: float) -> np.ndarray:
        m = factor.shape[0]
        grown = np.zeros((m + 1, m + 1), dtype=np.float64)
        grown[:m, :m] = factor
        grown[m, :m] = row
        grown[m, m] = corner
        return grown

    def accept(self, index: int) -> None:
        inst = self._inst
        cand = np.asarray([index], dtype=np.intp)
        res_a = float(inst.s_diag[index])
        res_d = float(inst.d_diag[index])
        if self.selected:
            sel = np.asarray(self.selected, dtype=np.intp)
            s_col = inst.cross(sel, cand)[:, 0]
            w_a = solve_triangular(self._l_a, s_col, lower=True)
            res_a -= float(w_a @ w_a)
            d_col = s_col - inst.eta_sq * (self._u_sel @ inst.u[:, index])
            w_d = solve_triangular(self._l_d, d_col, lower=True)
            res_d -= float(w_d @ w_d)
        else:
            w_a = np.empty(0, dtype=np.float64)
            w_d = np.empty(0, dtype=np.float64)
        if res_a <= 0.0 or res_d <= 0.0:
            raise NumericalError(
                f"logdet residual dropped to {min(res_a, res_d):.3e} while "
                "accepting an item; increase jitter or reduce eta"
            )
        self._l_a = self._extend(self._l_a, w_a, float(np.sqrt(res_a)))
        self._l_d = self._extend(self._l_d, w_d, float(np.sqrt(res_d)))
        self._u_sel = np.vstack([self._u_sel, inst.u[:, index]])
        self._logdet_a += float(np.log(res_a))
        self._logdet_d += float(np.log(res_d))
        self.selected.append(int(index))


class _MixtureState(_StateBase):
    def __init__(self, parts: list[tuple[float, _StateBase]]) -> None:
        self._parts = parts
        self.selected: list[int] = []

    @property
    def value(self) -> float:
        return float(sum(w * part.value for w, part in self._parts))

    def gains(self, candidates: np.ndarray) -> np.ndarray:
        total = np.zeros(candidates.size, dtype=np.float64)
        for weight, part in self._parts:
            total += weight * part.gains(candidates)
        return total

    def accept(self, index: int) -> None:
        for _, part in self._parts:
            part.accept(index)
        self.selected.append(int(index))


def marginal_gain(state: _StateBase, index: int) -> float:
    """Gain of adding one item to the current selection."""
    if index in state.selected:
        raise ValueError(f"item {index} is already selected")
    return state.gain(index)


@dataclass(frozen=True)
class MixtureComponent:
    """One active mixture component with its instance-normalized weight."""

    kind: str
    weight: float
    scale: float
    effective_weight: float


class SelectionProblem:
    """One ground set, one query set, one objective, ready for greedy runs.

    Builds the similarity kernels a single time; ``new_state`` then hands out
    cheap incremental evaluators over them. ``value`` recomputes the
    objective from scratch as an independent check on the incremental path.
    """

    def __init__(
        self,
        ground: EmbeddingMatrix,
        queries: QuerySet,
        spec: ObjectiveSpec,
        kernel: KernelConfig | None = None,
        ground_cap: int = DEFAULT_GROUND_CAP,
        jitter: float | None = None,
    ) -> None:
        if jitter is not None and not (jitter >= 0.0):
            raise ConfigurationError(f"jitter must be >= 0, got {jitter!r}")
        self.ground = ground
        self.queries = queries
        self.spec = spec
        self._override = kernel
        if kernel is not None:
            self._jitter = kernel.jitter
        else:
            self._jitter = DEFAULT_JITTER if jitter is None else jitter
        self._ground_cap = ground_cap

        self._query_kernels: dict[str, QueryKernel] = {}
        self._ground_sims: dict[str, GroundSimilarity] = {}
        self._logdet_instances: dict[str, _LogDetInstance] = {}
        self._components: list[MixtureComponent] | None = None

        if spec.kind == "mixture":
            assert spec.weights is not None
            active = [
                (kind, weight)
                for kind, weight in zip(MIXTURE_COMPONENTS, spec.weights)
                if weight > 0.0
            ]
            scales = []
            for kind, weight in active:
                probe = self._component_state(kind)
                gains = probe.gains(np.arange(self.n, dtype=np.intp))
                spread = float(gains.max() - gains.min())
                scales.append(spread if spread > _SCALE_FLOOR else 1.0)
            raw_eff = [weight / scale for (_, weight), scale in zip(active, scales)]
            total = sum(raw_eff)
            self._components = [
                MixtureComponent(kind=kind, weight=weight, scale=scale, effective_weight=eff / total)
                for (kind, weight), scale, eff in zip(active, scales, raw_eff)
            ]
        else:
            self._component_state(spec.kind)  # build kernels eagerly

    @property
    def n(self) -> int:
        return self.ground.n

    def transform_for(self, kind: str) -> str:
        if self._override is not None:
            return self._override.transform
        return PREFERRED_TRANSFORMS[kind]

    def _kernel_config(self, kind: str) -> KernelConfig:
        return KernelConfig(transform=self.transform_for(kind), jitter=self._jitter)

    def _query_kernel(self, kind: str) -> QueryKernel:
        transform = self.transform_for(kind)
        if transform not in self._query_kernels:
            self._query_kernels[transform] = build_query_kernel(
                self.ground, self.queries, self._kernel_config(kind)
            )
        return self._query_kernels[transform]

    def _ground_similarity(self, kind: str) -> GroundSimilarity:
        transform = self.transform_for(kind)
        if transform not in self._ground_sims:
            self._ground_sims[transform] = GroundSimilarity(
                self.ground, self._kernel_config(kind), cap=self._ground_cap
            )
        return self._ground_sims[transform]

    def _logdet_instance(self, kind: str) -> _LogDetInstance:
        transform = self.transform_for(kind)
        if transform not in self._logdet_instances:
            self._logdet_instances[transform] = _LogDetInstance(
                self.ground, self.queries, self.spec.eta, self._kernel_config(kind)
            )
        return self._logdet_instances[transform]

    def _query_max(self, kind: str) -> np.ndarray:
        kernel = self._query_kernel(kind)
        if kernel.s_vq.min() < 0.0:
            raise ConfigurationError(
                "flvmi requires non-negative similarities; use the shifted transform"
            )
        return kernel.s_vq.max(axis=1)

    def _component_state(self, kind: str) -> _StateBase:
        if kind == "gcmi":
            row_gain = 2.0 * self.spec.lam * self._query_kernel(kind).s_vq.sum(axis=1)
            return _GcmiState(row_gain)
        if kind == "flvmi":
            ceil = self.spec.eta * self._query_max(kind)
            return _FlvmiState(self._ground_similarity(kind), ceil)
        if kind == "logdet":
            return _LogDetState(self._logdet_instance(kind))
        raise ConfigurationError(f"unknown objective kind {kind!r}")

    def new_state(self) -> _StateBase:
        if self.spec.kind == "mixture":
            assert self._components is not None
            parts = [
                (comp.effective_weight, self._component_state(comp.kind))
                for comp in self._components
            ]
            return _MixtureState(parts)
        return self._component_state(self.spec.kind)

    def mixture_components(self) -> list[MixtureComponent] | None:
        return list(self._components) if self._components is not None else None

    def value(self, selected: Sequence[int]) -> float:
        """Objective value of ``selected`` recomputed from scratch."""
        if self.spec.kind == "mixture":
            assert self._components is not None
            total = 0.0
            for comp in self._components:
                total += comp.effective_weight * self._pure_value(comp.kind, selected)
            return total
        return self._pure_value(self.spec.kind, selected)

    def _pure_value(self, kind: str, selected: Sequence[int]) -> float:
        if kind == "gcmi":
            return gcmi_value(selected, self._query_kernel(kind), self.spec.lam)
        if kind == "flvmi":
            return flvmi_value(
                selected, self._ground_similarity(kind), self._query_max(kind), self.spec.eta
            )
        if kind == "logdet":
            return logdetmi_value(
                selected, self.ground, self.queries, self.spec.eta, self._kernel_config(kind)
            )
        raise ConfigurationError(f"unknown objective kind {kind!r}")

    def describe(self) -> dict:
        """Echo of the effective configuration, for reports and CLI output."""
        out = self.spec.to_dict()
        out["jitter"] = self._jitter
        if self.spec.kind == "mixture":
            assert self._components is not None
            out["transform"] = {
                comp.kind: self.transform_for(comp.kind) for comp in self._components
            }
            out["components"] = [
                {
                    "kind": comp.kind,
                    "weight": comp.weight,
                    "scale": comp.scale,
                    "effective_weight": comp.effective_weight,
                }
                for comp in self._components
            ]
        else:
            out["transform"] = self.transform_for(self.spec.kind)
        return out
