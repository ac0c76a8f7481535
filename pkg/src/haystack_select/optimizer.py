"""Greedy maximization over an incremental objective state.

Two strategies produce provably identical selections for submodular
objectives:

- ``naive`` re-scores every remaining candidate each step and takes the
  first argmax, so ties break toward the lowest index.
- ``lazy`` keeps stale upper bounds in a max-heap; a popped candidate is
  accepted when its bound is fresh for the current step, or re-scored and
  accepted immediately if its fresh gain still beats the heap head. Heap
  entries are (-gain, index) tuples, so equal gains pop lowest index first,
  preserving the naive tie-break.

Both stop after k accepts (or when the ground set is exhausted, flagging
truncation). Runs are single-threaded and deterministic; callers that want
parallelism run independent problems on separate threads.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass

import numpy as np

from .objectives import SelectionProblem

STRATEGIES = ("naive", "lazy")


def subset_fraction_to_k(n: int, fraction: float) -> int:
    """Subset size for a fractional budget: round half away from zero, min 1.

    A small epsilon absorbs decimal fractions that are not exactly
    representable (0.1 * 500 is 49.999... in binary) before rounding.
    """
    if n < 1:
        raise ValueError(f"ground set size must be >= 1, got {n}")
    if not (0.0 < fraction <= 1.0):
        raise ValueError(f"fraction must be in (0, 1], got {fraction!r}")
    return max(1, math.floor(fraction * n + 0.5 + 1e-9))


@dataclass
class SelectionResult:
    """Outcome of one greedy run.

    ``selected`` is in acceptance order and ``gains`` aligns with it;
    ``evaluations`` counts marginal-gain computations, the work a lazy run
    saves. ``truncated`` flags a budget larger than the ground set.
    """

    selected: list[int]
    gains: list[float]
    final_value: float
    evaluations: int
    elapsed_seconds: float
    truncated: bool = False

    @property
    def k(self) -> int:
        return len(self.selected)

    def to_dict(self, include_timing: bool = True) -> dict:
        out = {
            "selected": list(self.selected),
            "gains": list(self.gains),
            "final_value": self.final_value,
            "evaluations": self.evaluations,
            "truncated": self.truncated,
        }
        if include_timing:
            out["elapsed_seconds"] = self.elapsed_seconds
        return out


def _greedy_naive(state, n: int, k: int) -> tuple[list[float], int]:
    gains: list[float] = []
    evaluations = 0
    remaining = np.arange(n, dtype=np.intp)
    for _ in range(k):
        batch = state.gains(remaining)
        evaluations += int(remaining.size)
        pos = int(np.argmax(batch))
        gains.append(float(batch[pos]))
        state.accept(int(remaining[pos]))
        remaining = np.delete(remaining, pos)
    return gains, evaluations


def _greedy_lazy(state, n: int, k: int) -> tuple[list[float], int]:
    initial = state.gains(np.arange(n, dtype=np.intp))
    evaluations = n
    heap = [(-float(initial[i]), i) for i in range(n)]
    heapq.heapify(heap)
    # Step at which each candidate's heap entry was scored; an entry is
    # fresh while no item has been accepted since.
    scored_at = np.zeros(n, dtype=np.intp)
    gains: list[float] = []
    for step in range(k):
        while True:
            neg_gain, index = heapq.heappop(heap)
            if scored_at[index] == step:
                state.accept(index)
                gains.append(-neg_gain)
                break
            fresh = state.gain(index)
            evaluations += 1
            scored_at[index] = step
            # Fresh but still ahead of every stale bound: accept without
            # another pass (gains only shrink under submodularity).
            if not heap or (-fresh, index) <= heap[0]:
                state.accept(index)
                gains.append(fresh)
                break
            heapq.heappush(heap, (-fresh, index))
    return gains, evaluations


def greedy_select(problem: SelectionProblem, k: int, strategy: str = "lazy") -> SelectionResult:
    """Select up to ``k`` items by greedy marginal-gain maximization."""
    if strategy not in STRATEGIES:
        raise ValueError(f"strategy must be one of {STRATEGIES}, got {strategy!r}")
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    n = problem.n
    budget = min(k, n)

    start = time.perf_counter()
    state = problem.new_state()
    if budget == 0:
        gains: list[float] = []
        evaluations = 0
    elif strategy == "naive":
        gains, evaluations = _greedy_naive(state, n, budget)
    else:
        gains, evaluations = _greedy_lazy(state, n, budget)
    elapsed = time.perf_counter() - start

    return SelectionResult(
        selected=list(state.selected),
        gains=gains,
        final_value=float(state.value),
        evaluations=evaluations,
        elapsed_seconds=elapsed,
        truncated=k > n,
    )
