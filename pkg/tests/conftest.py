"""Shared instance builders and reporting hooks."""

from __future__ import annotations

import numpy as np
import pytest

from haystack_select import (
    EmbeddingMatrix,
    KernelConfig,
    ObjectiveSpec,
    QuerySet,
    ReferenceStore,
    SelectionProblem,
)

import oracles


def make_matrix(rows: np.ndarray, classes: list[str] | None = None, prefix: str = "item") -> EmbeddingMatrix:
    rows = np.asarray(rows, dtype=np.float32)
    return EmbeddingMatrix(
        data=rows,
        ids=tuple(f"{prefix}-{i:04d}" for i in range(rows.shape[0])),
        classes=tuple(classes) if classes is not None else None,
        normalized=True,
    )


def make_queryset(rows: np.ndarray, mode: str = "anchor", source_class: str = "probe") -> QuerySet:
    rows = np.asarray(rows, dtype=np.float32)
    return QuerySet(
        embeddings=rows,
        source_class=source_class,
        mode=mode,
        reference_ids=tuple(f"ref-{i:04d}" for i in range(rows.shape[0])),
    )


def make_problem(
    rng: np.random.Generator,
    kind: str,
    n: int,
    d: int = 16,
    q: int = 2,
    lam: float = 1.0,
    eta: float = 0.9,
    weights: tuple[float, float, float] | None = None,
    transform: str | None = None,
    jitter: float = 1e-6,
) -> SelectionProblem:
    ground = make_matrix(oracles.unit_rows(rng, n, d))
    queries = make_queryset(oracles.unit_rows(rng, q, d))
    if kind == "mixture" and weights is None:
        weights = (0.7, 0.2, 0.1)
    spec = ObjectiveSpec(kind=kind, lam=lam, eta=eta, weights=weights)
    kernel = KernelConfig(transform=transform, jitter=jitter) if transform is not None else None
    return SelectionProblem(ground, queries, spec, kernel=kernel)


def make_reference_store(rng: np.random.Generator, classes: list[str], per_class: int, d: int) -> ReferenceStore:
    labels = [label for label in classes for _ in range(per_class)]
    matrix = make_matrix(oracles.unit_rows(rng, len(labels), d), classes=labels, prefix="ref")
    return ReferenceStore.from_matrix(matrix)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260816)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    rows: list[tuple[str, str]] = []
    for status, label in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py" not in nodeid:
                continue
            if getattr(report, "when", "call") != "call" and label == "PASS":
                continue
            rows.append((nodeid.split("::")[-1], label))
    if not rows:
        return
    seen: dict[str, str] = {}
    for name, label in rows:
        if seen.get(name) != "FAIL":
            seen[name] = label
    terminalreporter.section("acceptance criteria")
    for name in sorted(seen):
        terminalreporter.write_line(f"{seen[name]}  {name}")
