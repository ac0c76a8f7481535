"""Independent reference implementations used to check the package.

Everything here is deliberately naive: pure-Python loops, dense
enumeration, textbook formulas. Nothing imports the package under test.
These stay frozen; when a test disagrees with an oracle, the package is
what gets fixed.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

# Two-sided 99% normal quantile for binomial confidence intervals.
Z_99 = 2.5758293035489004


def transform_sim(dot: float, transform: str) -> float:
    c = min(1.0, max(-1.0, dot))
    if transform == "raw":
        return c
    if transform == "shifted":
        return (1.0 + c) / 2.0
    raise ValueError(transform)


def dot_loop(u, v) -> float:
    total = 0.0
    for a, b in zip(u, v):
        total += float(a) * float(b)
    return total


def cosine_loop(u, v, transform: str = "raw") -> float:
    return transform_sim(dot_loop(u, v), transform)


def sim_matrix_loop(rows, cols, transform: str) -> np.ndarray:
    out = np.empty((len(rows), len(cols)), dtype=np.float64)
    for i, r in enumerate(rows):
        for j, c in enumerate(cols):
            out[i, j] = cosine_loop(r, c, transform)
    return out


def min_eigenvalue(matrix: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(np.asarray(matrix, dtype=np.float64)).min())


def brute_gcmi(selected, ground_rows, query_rows, lam: float, transform: str) -> float:
    total = 0.0
    for i in selected:
        for q in query_rows:
            total += cosine_loop(ground_rows[i], q, transform)
    return 2.0 * lam * total


def brute_flvmi(selected, ground_rows, query_rows, eta: float, transform: str) -> float:
    n = len(ground_rows)
    total = 0.0
    for v in range(n):
        best_sel = 0.0
        for i in selected:
            best_sel = max(best_sel, cosine_loop(ground_rows[v], ground_rows[i], transform))
        best_query = 0.0
        first = True
        for q in query_rows:
            s = cosine_loop(ground_rows[v], q, transform)
            best_query = s if first else max(best_query, s)
            first = False
        total += min(best_sel, eta * best_query)
    return total


def brute_logdetmi(
    selected, ground_rows, query_rows, eta: float, jitter: float, transform: str
) -> float:
    """Joint-matrix form: logdet S_A + logdet S_Q - logdet of the joint.

    The joint block matrix [[S_A, eta S_AQ], [eta S_QA, S_Q]] has the
    deficit matrix as its Schur complement, so this equals
    logdet S_A - logdet(S_A - eta^2 S_AQ S_Q^{-1} S_QA) without ever
    forming that deficit. Jitter lands on the diagonal of S_A and S_Q.
    """
    if len(selected) == 0:
        return 0.0
    sel_rows = [ground_rows[i] for i in selected]
    m, q = len(sel_rows), len(query_rows)
    s_a = sim_matrix_loop(sel_rows, sel_rows, transform)
    s_q = sim_matrix_loop(query_rows, query_rows, transform)
    s_aq = sim_matrix_loop(sel_rows, query_rows, transform)
    s_a = (s_a + s_a.T) / 2.0 + jitter * np.eye(m)
    s_q = (s_q + s_q.T) / 2.0 + jitter * np.eye(q)
    joint = np.zeros((m + q, m + q), dtype=np.float64)
    joint[:m, :m] = s_a
    joint[m:, m:] = s_q
    joint[:m, m:] = eta * s_aq
    joint[m:, :m] = eta * s_aq.T
    sign_a, ld_a = np.linalg.slogdet(s_a)
    sign_q, ld_q = np.linalg.slogdet(s_q)
    sign_j, ld_j = np.linalg.slogdet(joint)
    if min(sign_a, sign_q, sign_j) <= 0:
        raise ValueError("oracle blocks are not positive definite")
    return float(ld_a + ld_q - ld_j)


def reference_greedy(value_fn, n: int, k: int) -> list[int]:
    """Plain greedy: recompute f(A + i) - f(A) for every candidate, every
    step, lowest index wins ties."""
    selected: list[int] = []
    current = value_fn(selected)
    for _ in range(min(k, n)):
        best_gain, best_index = None, None
        for i in range(n):
            if i in selected:
                continue
            gain = value_fn(selected + [i]) - current
            if best_gain is None or gain > best_gain:
                best_gain, best_index = gain, i
        selected.append(best_index)
        current = value_fn(selected)
    return selected


def exhaustive_best(value_fn, n: int, k: int) -> float:
    """Optimal value over all subsets of size exactly min(k, n)."""
    best = -math.inf
    for combo in itertools.combinations(range(n), min(k, n)):
        best = max(best, value_fn(list(combo)))
    return best


def top_k_by_row_sum(sims: np.ndarray, k: int) -> list[int]:
    """Indices of the k largest query-similarity row sums, ties by index."""
    row_sums = [sum(float(x) for x in row) for row in sims]
    order = sorted(range(len(row_sums)), key=lambda i: (-row_sums[i], i))
    return order[:k]


def binomial_halfwidth(p: float, trials: int, z: float = Z_99) -> float:
    return z * math.sqrt(p * (1.0 - p) / trials)


def unit_rows(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    rows = rng.standard_normal((n, d))
    rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    return rows.astype(np.float32)


def clustered_unit_rows(
    rng: np.random.Generator, centers: np.ndarray, per_center: int, spread: float
) -> tuple[np.ndarray, np.ndarray]:
    """Rows drawn around unit centers, plus each row's center index."""
    rows, labels = [], []
    for c, center in enumerate(centers):
        for _ in range(per_center):
            vec = center + spread * rng.standard_normal(center.shape[0])
            rows.append(vec / np.linalg.norm(vec))
            labels.append(c)
    return np.asarray(rows, dtype=np.float32), np.asarray(labels)
