"""Needle-in-haystack benchmark: synthetic worlds, trials, sweeps, reports.

A trial plants one item of a chosen class (the needle) among distractors
from other classes, builds the query set from reference embeddings, runs
greedy selection, and records whether the needle made the cut. A sweep
runs a grid of configurations and emits a deterministic report.

Seeding contract: trial ``i`` derives its seed from ``(master_seed, i)``
alone, shared by every cell in the sweep. Cells are therefore paired: the
same trial index sees the same needle, the same distractor pool order,
and the same query class everywhere, so comparisons across query modes,
reference counts, and haystack sizes difference out the haystack noise.
Distractors are a prefix of one pool permutation, which makes smaller
haystacks subsets of larger ones, and subset fractions are prefixes of a
single greedy order, which makes success exactly monotone in fraction.
Execution order never feeds the arithmetic, so reports are byte-identical
across thread counts.

The selector is needle-blind: selection sees only the haystack matrix and
the query set; the needle's position is used afterwards for scoring.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import ConfigurationError
from .kernel import DEFAULT_JITTER, KernelConfig, TRANSFORMS
from .objectives import OBJECTIVE_KINDS, ObjectiveSpec, SelectionProblem
from .optimizer import STRATEGIES, SelectionResult, greedy_select, subset_fraction_to_k
from .querykit import QUERY_MODES, build_query_set, parse_query, render_query
from .store import EmbeddingMatrix, ReferenceStore, load_embeddings, load_reference_store, normalize_rows

RANDOM_BASELINE = "random"

_AUG_KINDS = ("crop", "flip", "color", "blur")


@dataclass(frozen=True)
class SynthConfig:
    """Clustered-sphere world: class centroids on the unit sphere, items
    and held-out references drawn around them."""

    class_count: int
    dimension: int
    intra_class_spread: float = 0.3
    seed: int = 0
    items_per_class: int = 100
    refs_per_class: int = 8

    def __post_init__(self) -> None:
        if self.class_count < 2:
            raise ConfigurationError(f"class_count must be >= 2, got {self.class_count}")
        if self.dimension < 2:
            raise ConfigurationError(f"dimension must be >= 2, got {self.dimension}")
        if not (self.intra_class_spread > 0.0):
            raise ConfigurationError(f"intra_class_spread must be > 0, got {self.intra_class_spread!r}")
        if self.items_per_class < 1 or self.refs_per_class < 1:
            raise ConfigurationError("items_per_class and refs_per_class must be >= 1")

    def to_dict(self) -> dict:
        return {
            "kind": "synthetic",
            "class_count": self.class_count,
            "dimension": self.dimension,
            "intra_class_spread": self.intra_class_spread,
            "seed": self.seed,
            "items_per_class": self.items_per_class,
            "refs_per_class": self.refs_per_class,
        }


def gen_synthetic(cfg: SynthConfig) -> tuple[EmbeddingMatrix, ReferenceStore]:
    """Draw the synthetic world: returns (items, reference store).

    Everything comes from one seeded generator in a fixed order (centroids,
    then per-class item and reference noise), so equal seeds give
    byte-identical matrices. References are held out: they never appear
    among the items.
    """
    rng = np.random.default_rng(cfg.seed)
    centroids = rng.standard_normal((cfg.class_count, cfg.dimension))
    centroids /= np.linalg.norm(centroids, axis=1, keepdims=True)

    item_rows, item_ids, item_classes = [], [], []
    ref_rows, ref_ids, ref_classes = [], [], []
    per_class = cfg.items_per_class + cfg.refs_per_class
    for c in range(cfg.class_count):
        label = f"class-{c:03d}"
        noise = rng.standard_normal((per_class, cfg.dimension))
        block = centroids[c][None, :] + cfg.intra_class_spread * noise
        block /= np.linalg.norm(block, axis=1, keepdims=True)
        for j in range(cfg.items_per_class):
            item_rows.append(block[j])
            item_ids.append(f"item-{c:03d}-{j:04d}")
            item_classes.append(label)
        for j in range(cfg.refs_per_class):
            ref_rows.append(block[cfg.items_per_class + j])
            ref_ids.append(f"ref-{c:03d}-{j:04d}")
            ref_classes.append(label)

    items = EmbeddingMatrix(
        data=np.asarray(item_rows, dtype=np.float32),
        ids=tuple(item_ids),
        classes=tuple(item_classes),
        normalized=True,
    )
    refs = EmbeddingMatrix(
        data=np.asarray(ref_rows, dtype=np.float32),
        ids=tuple(ref_ids),
        classes=tuple(ref_classes),
        normalized=True,
    )
    return items, ReferenceStore.from_matrix(refs)


@dataclass(frozen=True)
class World:
    """Item pool plus reference store, ready to assemble haystacks from."""

    items: EmbeddingMatrix
    references: ReferenceStore
    aug_spread: float = 0.15
    description: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.items.classes is None:
            raise ConfigurationError("world items need class labels")
        if not self.items.normalized:
            raise ConfigurationError("world items must be normalized")
        by_class: dict[str, list[int]] = {}
        for i, label in enumerate(self.items.classes):
            by_class.setdefault(label, []).append(i)
        object.__setattr__(
            self, "_by_class", {k: np.asarray(v, dtype=np.intp) for k, v in by_class.items()}
        )

    @property
    def classes(self) -> list[str]:
        return list(self._by_class)

    def class_indices(self, label: str) -> np.ndarray:
        return self._by_class[label]


def make_world(cfg: SynthConfig) -> World:
    items, refs = gen_synthetic(cfg)
    return World(
        items=items,
        references=refs,
        aug_spread=cfg.intra_class_spread / 2.0,
        description=cfg.to_dict(),
    )


def load_world(
    embeddings_path,
    manifest_path,
    references_path,
    references_manifest_path,
    aug_spread: float = 0.15,
) -> World:
    items = normalize_rows(load_embeddings(embeddings_path, manifest_path))
    refs = load_reference_store(references_path, references_manifest_path)
    return World(
        items=items,
        references=refs,
        aug_spread=aug_spread,
        description={
            "kind": "files",
            "embeddings": str(embeddings_path),
            "manifest": str(manifest_path),
            "references": str(references_path),
            "references_manifest": str(references_manifest_path),
            "aug_spread": aug_spread,
        },
    )


@dataclass(frozen=True)
class TrialConfig:
    """One planted-needle selection trial."""

    haystack_size: int
    subset_fraction: float
    objective: ObjectiveSpec | str
    query_mode: str = "anchor"
    ref_count: int = 1
    augmented_count: int = 0
    needle_class: str | None = None
    distractor_classes: tuple[str, ...] | None = None
    seed: int = 0
    strategy: str = "lazy"
    transform: str | None = None
    jitter: float = DEFAULT_JITTER

    def __post_init__(self) -> None:
        if self.haystack_size < 2:
            raise ConfigurationError(f"haystack_size must be >= 2, got {self.haystack_size}")
        if not (0.0 < self.subset_fraction <= 1.0):
            raise ConfigurationError(
                f"subset_fraction must be in (0, 1], got {self.subset_fraction!r}"
            )
        if isinstance(self.objective, str):
            if self.objective != RANDOM_BASELINE:
                raise ConfigurationError(
                    f"objective must be an ObjectiveSpec or {RANDOM_BASELINE!r}, got {self.objective!r}"
                )
        if self.query_mode not in QUERY_MODES:
            raise ConfigurationError(f"query_mode must be one of {QUERY_MODES}")
        if self.ref_count < 1:
            raise ConfigurationError("ref_count must be >= 1")
        if self.augmented_count < 0:
            raise ConfigurationError("augmented_count must be >= 0")
        if self.strategy not in STRATEGIES:
            raise ConfigurationError(f"strategy must be one of {STRATEGIES}")
        if self.transform is not None and self.transform not in TRANSFORMS:
            raise ConfigurationError(f"transform must be one of {TRANSFORMS}")
        if (
            self.needle_class is not None
            and self.distractor_classes is not None
            and self.needle_class in self.distractor_classes
        ):
            raise ConfigurationError("needle_class must not appear among distractor_classes")


@dataclass
class TrialOutcome:
    needle_in_subset: bool
    selection: SelectionResult
    k: int
    needle_position: int
    needle_id: str
    needle_class: str
    target_class: str
    query_text: str
    haystack_indices: tuple[int, ...]
    mixture_components: list | None = None
    per_fraction: dict[float, bool] = field(default_factory=dict)
    per_fraction_value: dict[float, float] = field(default_factory=dict)


class TrialError(ConfigurationError):
    """A trial failed; carries the trial seed for reproduction."""

    def __init__(self, seed: int, cause: Exception) -> None:
        super().__init__(f"trial seed {seed}: {cause}")
        self.seed = seed
        self.cause = cause


def success_fraction(outcomes: Sequence[bool]) -> float:
    """Fraction of successful trials; exact ratio."""
    if len(outcomes) == 0:
        raise ValueError("success_fraction needs at least one outcome")
    return sum(bool(o) for o in outcomes) / len(outcomes)


def _plan_haystack(cfg: TrialConfig, world: World, rng: np.random.Generator):
    """Draws 1-4 of the trial: needle, target class, distractor permutation.

    Only (world, seed, needle/distractor config) feed these draws, never
    the haystack size, so trials pair up across every other sweep axis.
    """
    classes = world.classes
    if cfg.needle_class is not None:
        if cfg.needle_class not in world._by_class:
            raise ConfigurationError(f"needle_class {cfg.needle_class!r} not in world")
        needle_class = cfg.needle_class
    else:
        needle_class = classes[int(rng.integers(len(classes)))]

    needle_pool = world.class_indices(needle_class)
    needle_index = int(needle_pool[int(rng.integers(needle_pool.size))])

    if cfg.distractor_classes is not None:
        allowed = [c for c in cfg.distractor_classes if c != needle_class]
        missing = [c for c in allowed if c not in world._by_class]
        if missing:
            raise ConfigurationError(f"distractor classes not in world: {missing}")
    else:
        allowed = [c for c in classes if c != needle_class]
    if not allowed:
        raise ConfigurationError("no distractor classes available")

    target_class = allowed[int(rng.integers(len(allowed)))]
    pool = np.concatenate([world.class_indices(c) for c in allowed])
    pool.sort()
    permutation = rng.permutation(pool.size)
    return needle_class, needle_index, target_class, pool, permutation


def _assemble(cfg: TrialConfig, world: World, rng, plan, n: int):
    needle_class, needle_index, target_class, pool, permutation = plan
    if pool.size < n - 1:
        raise ConfigurationError(
            f"distractor pool has {pool.size} items, haystack of {n} needs {n - 1}"
        )
    distractors = pool[permutation[: n - 1]]
    combined = np.concatenate([[needle_index], distractors])
    positions = rng.permutation(n)
    haystack = combined[positions]
    needle_position = int(np.flatnonzero(positions == 0)[0])
    return haystack, needle_position, needle_class, target_class


def _query_for(cfg: TrialConfig, world: World, rng, needle_class: str, target_class: str):
    query_text = render_query(needle_class, target_class)
    parsed = parse_query(query_text)
    query_class = needle_class if cfg.query_mode == "anchor" else target_class

    augmented = None
    if cfg.augmented_count > 0:
        base_indices = world.references.by_class.get(query_class)
        if not base_indices:
            raise ConfigurationError(f"no references for class {query_class!r}")
        base = world.references.matrix.data[list(base_indices)].astype(np.float64)
        noise = rng.standard_normal((cfg.augmented_count, base.shape[1]))
        rows = np.empty((cfg.augmented_count, base.shape[1]), dtype=np.float64)
        for j in range(cfg.augmented_count):
            rows[j] = base[j % base.shape[0]] + world.aug_spread * noise[j]
        rows /= np.linalg.norm(rows, axis=1, keepdims=True)
        augmented = EmbeddingMatrix(
            data=rows.astype(np.float32),
            ids=tuple(f"aug-{j:04d}" for j in range(cfg.augmented_count)),
            augmentations=tuple(_AUG_KINDS[j % len(_AUG_KINDS)] for j in range(cfg.augmented_count)),
            normalized=True,
        )

    query_set = build_query_set(parsed, cfg.query_mode, world.references, cfg.ref_count, augmented)
    return query_text, query_set


def _run_trial_multi(cfg: TrialConfig, world: World, fractions: Sequence[float]) -> TrialOutcome:
    rng = np.random.default_rng(cfg.seed)
    n = cfg.haystack_size
    plan = _plan_haystack(cfg, world, rng)
    haystack, needle_position, needle_class, target_class = _assemble(cfg, world, rng, plan, n)

    ks = {f: subset_fraction_to_k(n, f) for f in fractions}
    k_max = max(ks.values())

    if isinstance(cfg.objective, str):
        order = rng.permutation(n)
        rank = int(np.flatnonzero(order == needle_position)[0])
        selection = SelectionResult(
            selected=[int(i) for i in order[:k_max]],
            gains=[0.0] * k_max,
            final_value=0.0,
            evaluations=0,
            elapsed_seconds=0.0,
        )
        query_text = ""
        per_fraction = {f: rank < k for f, k in ks.items()}
        per_value = {f: 0.0 for f in ks}
        components = None
    else:
        query_text, query_set = _query_for(cfg, world, rng, needle_class, target_class)
        matrix = world.items.take(haystack)
        kernel = (
            KernelConfig(transform=cfg.transform, jitter=cfg.jitter)
            if cfg.transform is not None
            else None
        )
        problem = SelectionProblem(matrix, query_set, cfg.objective, kernel=kernel, jitter=cfg.jitter)
        selection = greedy_select(problem, k_max, cfg.strategy)
        rank_map = {item: pos for pos, item in enumerate(selection.selected)}
        rank = rank_map.get(needle_position)
        prefix_values = np.cumsum(selection.gains)
        per_fraction = {f: rank is not None and rank < k for f, k in ks.items()}
        per_value = {f: float(prefix_values[k - 1]) for f, k in ks.items()}
        components = problem.mixture_components()

    primary = cfg.subset_fraction
    return TrialOutcome(
        needle_in_subset=per_fraction[primary],
        selection=selection,
        k=ks[primary],
        needle_position=needle_position,
        needle_id=world.items.ids[haystack[needle_position]],
        needle_class=needle_class,
        target_class=target_class,
        query_text=query_text,
        haystack_indices=tuple(int(i) for i in haystack),
        mixture_components=components,
        per_fraction=per_fraction,
        per_fraction_value=per_value,
    )


def run_trial(cfg: TrialConfig, world: World) -> TrialOutcome:
    """Run one trial; errors are re-raised tagged with the trial seed."""
    try:
        return _run_trial_multi(cfg, world, [cfg.subset_fraction])
    except TrialError:
        raise
    except Exception as exc:
        raise TrialError(cfg.seed, exc) from exc


def trial_seed(master_seed: int, trial_index: int) -> int:
    """Derived seed for trial ``trial_index``; shared across all cells."""
    return int(np.random.SeedSequence([master_seed, trial_index]).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class SweepGrid:
    """Cartesian grid of benchmark cells over one world."""

    haystack_sizes: tuple[int, ...] = (100, 500, 1000)
    fractions: tuple[float, ...] = (0.05, 0.1, 0.2, 0.5)
    objectives: tuple[ObjectiveSpec | str, ...] = (ObjectiveSpec(kind="gcmi"),)
    query_modes: tuple[str, ...] = ("anchor",)
    ref_counts: tuple[int, ...] = (1,)
    augmented_counts: tuple[int, ...] = (0,)
    trials_per_cell: int = 500
    master_seed: int = 0
    synth: SynthConfig | None = None
    world_files: dict | None = None
    strategy: str = "lazy"
    transform: str | None = None
    jitter: float = DEFAULT_JITTER
    needle_class: str | None = None
    distractor_classes: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        for name in ("haystack_sizes", "fractions", "objectives", "query_modes", "ref_counts", "augmented_counts"):
            if len(getattr(self, name)) == 0:
                raise ConfigurationError(f"{name} must not be empty")
        if self.trials_per_cell < 1:
            raise ConfigurationError("trials_per_cell must be >= 1")
        if self.synth is None and self.world_files is None:
            object.__setattr__(
                self, "synth", SynthConfig(class_count=20, dimension=64, intra_class_spread=0.3)
            )

    def to_dict(self) -> dict:
        objectives = [
            o if isinstance(o, str) else o.to_dict() for o in self.objectives
        ]
        return {
            "haystack_sizes": list(self.haystack_sizes),
            "fractions": list(self.fractions),
            "objectives": objectives,
            "query_modes": list(self.query_modes),
            "ref_counts": list(self.ref_counts),
            "augmented_counts": list(self.augmented_counts),
            "trials_per_cell": self.trials_per_cell,
            "master_seed": self.master_seed,
            "strategy": self.strategy,
            "transform": self.transform,
            "jitter": self.jitter,
            "needle_class": self.needle_class,
            "distractor_classes": list(self.distractor_classes) if self.distractor_classes else None,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "SweepGrid":
        known = {
            "haystack_sizes", "fractions", "objectives", "query_modes", "ref_counts",
            "augmented_counts", "trials_per_cell", "master_seed", "strategy",
            "transform", "jitter", "needle_class", "distractor_classes", "world",
        }
        unknown = set(raw) - known
        if unknown:
            raise ConfigurationError(f"unknown grid keys: {sorted(unknown)}")

        objectives: list[ObjectiveSpec | str] = []
        for entry in raw.get("objectives", [{"kind": "gcmi"}]):
            if isinstance(entry, str):
                if entry == RANDOM_BASELINE:
                    objectives.append(entry)
                elif entry in OBJECTIVE_KINDS:
                    objectives.append(ObjectiveSpec(kind=entry))
                else:
                    raise ConfigurationError(f"unknown objective {entry!r}")
            else:
                entry = dict(entry)
                kind = entry.pop("kind", None)
                spec = ObjectiveSpec(
                    kind=kind,
                    lam=float(entry.pop("lambda", 1.0)),
                    eta=float(entry.pop("eta", 1.0)),
                    weights=tuple(entry.pop("weights")) if "weights" in entry else None,
                )
                if entry:
                    raise ConfigurationError(f"unknown objective keys: {sorted(entry)}")
                objectives.append(spec)

        synth = None
        world_files = None
        world = raw.get("world")
        if world is not None:
            world = dict(world)
            kind = world.pop("kind", "synthetic")
            if kind == "synthetic":
                synth = SynthConfig(**world)
            elif kind == "files":
                world_files = world
            else:
                raise ConfigurationError(f"unknown world kind {kind!r}")

        kwargs: dict = {}
        for name in ("haystack_sizes", "fractions", "ref_counts", "augmented_counts"):
            if name in raw:
                kwargs[name] = tuple(raw[name])
        if "query_modes" in raw:
            kwargs["query_modes"] = tuple(raw["query_modes"])
        for name in ("trials_per_cell", "master_seed", "strategy", "transform", "jitter", "needle_class"):
            if name in raw and raw[name] is not None:
                kwargs[name] = raw[name]
        if raw.get("distractor_classes"):
            kwargs["distractor_classes"] = tuple(raw["distractor_classes"])
        return cls(objectives=tuple(objectives), synth=synth, world_files=world_files, **kwargs)


def _build_world(grid: SweepGrid) -> World:
    if grid.world_files is not None:
        return load_world(
            grid.world_files["embeddings"],
            grid.world_files["manifest"],
            grid.world_files["references"],
            grid.world_files["references_manifest"],
            aug_spread=float(grid.world_files.get("aug_spread", 0.15)),
        )
    synth = grid.synth
    assert synth is not None
    # scale the pool so the largest haystack can always be filled
    if grid.distractor_classes is not None:
        allowed = len(set(grid.distractor_classes) - {grid.needle_class})
    else:
        allowed = synth.class_count - 1
    need = max(grid.haystack_sizes) - 1
    per_class_needed = max(synth.items_per_class, math.ceil(need / max(1, allowed)))
    refs_needed = max(synth.refs_per_class, max(grid.ref_counts))
    if per_class_needed != synth.items_per_class or refs_needed != synth.refs_per_class:
        synth = replace(synth, items_per_class=per_class_needed, refs_per_class=refs_needed)
    return make_world(synth)


def _round6(value: float) -> float:
    return float(f"{value:.6g}")


def _cell_key(size, fraction, obj_idx, mode, refs, augs) -> tuple:
    return (size, fraction, obj_idx, mode, refs, augs)


@dataclass
class BenchReport:
    format_version: int
    master_seed: int
    world: dict
    grid: dict
    cells: list[dict]

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "master_seed": self.master_seed,
            "world": self.world,
            "grid": self.grid,
            "cells": self.cells,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        buffer = io.StringIO()
        columns = [
            "haystack_size", "fraction", "objective", "query_mode", "ref_count",
            "augmented_count", "trials", "successes", "success_fraction", "errors",
            "mean_final_value", "mean_selection_ms",
        ]
        writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for cell in self.cells:
            obj = cell["objective"]
            writer.writerow({
                "haystack_size": cell["haystack_size"],
                "fraction": cell["fraction"],
                "objective": obj if isinstance(obj, str) else obj["kind"],
                "query_mode": cell["query_mode"],
                "ref_count": cell["ref_count"],
                "augmented_count": cell["augmented_count"],
                "trials": cell["trials"],
                "successes": cell["successes"],
                "success_fraction": cell["success_fraction"],
                "errors": cell["errors"],
                "mean_final_value": cell.get("mean_final_value", ""),
                "mean_selection_ms": cell.get("mean_selection_ms", ""),
            })
        return buffer.getvalue()


def run_sweep(
    grid: SweepGrid,
    threads: int | None = None,
    include_timings: bool = False,
    unit_order: Sequence[int] | None = None,
) -> BenchReport:
    """Run the whole grid and assemble the report.

    ``threads`` bounds the worker pool (default: CPU count). ``unit_order``
    reorders work-unit execution and exists to demonstrate that results do
    not depend on it. ``include_timings`` adds mean_selection_ms per cell;
    it is off by default because wall-clock times are not reproducible.
    """
    import os

    world = _build_world(grid)
    threads = threads if threads and threads > 0 else (os.cpu_count() or 1)

    # one work unit = one trial of one (size, objective, mode, refs, augs)
    # group; every fraction is a prefix of the same greedy run
    groups = [
        (size, obj_idx, mode, refs, augs)
        for size in grid.haystack_sizes
        for obj_idx in range(len(grid.objectives))
        for mode in grid.query_modes
        for refs in grid.ref_counts
        for augs in grid.augmented_counts
    ]
    units = [
        (group_idx, trial_idx)
        for group_idx in range(len(groups))
        for trial_idx in range(grid.trials_per_cell)
    ]
    if unit_order is not None:
        if sorted(unit_order) != list(range(len(units))):
            raise ConfigurationError("unit_order must be a permutation of all work units")
        execution = [units[i] for i in unit_order]
    else:
        execution = units

    base_fraction = max(grid.fractions)

    def run_unit(unit: tuple[int, int]):
        group_idx, trial_idx = unit
        size, obj_idx, mode, refs, augs = groups[group_idx]
        cfg = TrialConfig(
            haystack_size=size,
            subset_fraction=base_fraction,
            objective=grid.objectives[obj_idx],
            query_mode=mode,
            ref_count=refs,
            augmented_count=augs,
            needle_class=grid.needle_class,
            distractor_classes=grid.distractor_classes,
            seed=trial_seed(grid.master_seed, trial_idx),
            strategy=grid.strategy,
            transform=grid.transform,
            jitter=grid.jitter,
        )
        try:
            outcome = _run_trial_multi(cfg, world, grid.fractions)
        except Exception as exc:
            return unit, None, f"{type(exc).__name__}: {exc}"
        scales = None
        if outcome.mixture_components:
            scales = [comp.scale for comp in outcome.mixture_components]
        record = (
            outcome.per_fraction,
            outcome.per_fraction_value,
            outcome.selection.elapsed_seconds,
            scales,
        )
        return unit, record, None

    results: dict[tuple[int, int], tuple] = {}
    errors: dict[tuple[int, int], str] = {}
    if threads == 1:
        iterator = map(run_unit, execution)
    else:
        pool = ThreadPoolExecutor(max_workers=threads)
        iterator = pool.map(run_unit, execution)
    try:
        for unit, record, error in iterator:
            if error is not None:
                errors[unit] = error
            else:
                results[unit] = record
    finally:
        if threads != 1:
            pool.shutdown()

    cells = []
    for group_idx, (size, obj_idx, mode, refs, augs) in enumerate(groups):
        for fraction in grid.fractions:
            successes = 0
            completed = 0
            values: list[float] = []
            elapsed: list[float] = []
            scale_rows: list[list[float]] = []
            first_error: str | None = None
            error_count = 0
            for trial_idx in range(grid.trials_per_cell):
                unit = (group_idx, trial_idx)
                if unit in errors:
                    error_count += 1
                    if first_error is None:
                        first_error = errors[unit]
                    continue
                per_fraction, per_value, seconds, scales = results[unit]
                completed += 1
                successes += bool(per_fraction[fraction])
                values.append(per_value[fraction])
                elapsed.append(seconds)
                if scales is not None:
                    scale_rows.append(scales)

            objective = grid.objectives[obj_idx]
            cell: dict = {
                "haystack_size": size,
                "fraction": _round6(fraction),
                "objective": objective if isinstance(objective, str) else objective.to_dict(),
                "query_mode": mode,
                "ref_count": refs,
                "augmented_count": augs,
                "trials": completed,
                "successes": successes,
                "success_fraction": _round6(successes / completed) if completed else None,
                "errors": error_count,
            }
            if not isinstance(objective, str):
                cell["mean_final_value"] = (
                    _round6(float(np.mean(values))) if values else None
                )
            if scale_rows:
                means = np.mean(np.asarray(scale_rows), axis=0)
                cell["mean_component_scales"] = [_round6(float(x)) for x in means]
            if first_error is not None:
                cell["first_error"] = first_error
            if include_timings:
                cell["mean_selection_ms"] = (
                    _round6(1000.0 * float(np.mean(elapsed))) if elapsed else None
                )
            cells.append(cell)

    grid_echo = grid.to_dict()
    grid_echo["fractions"] = [_round6(f) for f in grid_echo["fractions"]]
    return BenchReport(
        format_version=1,
        master_seed=grid.master_seed,
        world=world.description,
        grid=grid_echo,
        cells=cells,
    )
