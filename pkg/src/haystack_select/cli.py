"""Command-line interface: select, bench, gen-synth, parse-query.

Machine output is JSON on stdout (or a file via --out); failures print a
JSON error object to stderr and exit 1; flag misuse exits 2 with usage
text. Outputs carry no wall-clock fields, so equal inputs give equal
bytes.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click

from .bench import SweepGrid, SynthConfig, gen_synthetic, run_sweep
from .errors import HaystackSelectError
from .kernel import DEFAULT_JITTER, TRANSFORMS, KernelConfig
from .objectives import OBJECTIVE_KINDS, ObjectiveSpec, SelectionProblem
from .optimizer import STRATEGIES, greedy_select, subset_fraction_to_k
from .querykit import QUERY_MODES, QuerySet, build_query_set, parse_query
from .store import (
    EmbeddingMatrix,
    load_embeddings,
    load_reference_store,
    normalize_rows,
    write_embeddings,
)


def _manifest_for(path: str) -> str:
    """items.emb -> items.manifest.json; anything else gets the suffix appended."""
    p = Path(path)
    if p.suffix == ".emb":
        return str(p.with_suffix(".manifest.json"))
    return str(p) + ".manifest.json"


def _fail_json(exc: Exception) -> None:
    payload = {"error": {"type": type(exc).__name__, "message": str(exc)}}
    click.echo(json.dumps(payload, sort_keys=True), err=True)
    sys.exit(1)


def _runtime_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except (HaystackSelectError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
            _fail_json(exc)

    return wrapper


def _write_or_echo(text: str, out: str | None) -> None:
    if out is None:
        click.echo(text, nl=False)
    else:
        Path(out).write_text(text)


@click.group()
def main() -> None:
    """Query-aware subset selection over embedding haystacks."""


@main.command()
@click.option("--haystack", required=True, help="EMB1 embedding file for the ground set.")
@click.option("--haystack-manifest", default=None, help="Manifest path (default: derived).")
@click.option("--query", default=None, help='Query text, e.g. "For the image with a truck, is there a dog?".')
@click.option("--references", default=None, help="EMB1 reference store (required with --query).")
@click.option("--references-manifest", default=None, help="Manifest path (default: derived).")
@click.option("--query-file", default=None, help="EMB1 file holding query embeddings directly.")
@click.option("--mode", type=click.Choice(QUERY_MODES), default="anchor", show_default=True)
@click.option("--refs", type=int, default=1, show_default=True, help="References per query class.")
@click.option("--aug", default=None, help="EMB1 file of augmented query embeddings to append.")
@click.option("--objective", type=click.Choice(OBJECTIVE_KINDS), default="gcmi", show_default=True)
@click.option("--weights", default=None, help="Mixture weights, e.g. 0.7,0.2,0.1.")
@click.option("--lambda", "lam", type=float, default=1.0, show_default=True)
@click.option("--eta", type=float, default=1.0, show_default=True)
@click.option("--jitter", type=float, default=DEFAULT_JITTER, show_default=True)
@click.option("--transform", type=click.Choice(TRANSFORMS), default=None,
              help="Override the per-objective similarity transform.")
@click.option("--strategy", type=click.Choice(STRATEGIES), default="lazy", show_default=True)
@click.option("--fraction", type=float, default=None, help="Subset size as a fraction of n.")
@click.option("--k", type=int, default=None, help="Subset size as an absolute count.")
@click.option("--out", default=None, help="Write JSON here instead of stdout.")
@_runtime_errors
def select(haystack, haystack_manifest, query, references, references_manifest,
           query_file, mode, refs, aug, objective, weights, lam, eta, jitter,
           transform, strategy, fraction, k, out) -> None:
    """Greedy-select a subset of the haystack for a query."""
    if (fraction is None) == (k is None):
        raise click.UsageError("give exactly one of --fraction / --k")
    if (query is None) == (query_file is None):
        raise click.UsageError("give exactly one of --query / --query-file")
    if query is not None and references is None:
        raise click.UsageError("--query needs --references")

    ground = normalize_rows(load_embeddings(haystack, haystack_manifest or _manifest_for(haystack)))

    augmented = None
    if aug is not None:
        augmented = normalize_rows(load_embeddings(aug, _manifest_for(aug)))

    if query is not None:
        store = load_reference_store(references, references_manifest or _manifest_for(references))
        parsed = parse_query(query)
        queries = build_query_set(parsed, mode, store, refs, augmented)
    else:
        qmat = normalize_rows(load_embeddings(query_file, _manifest_for(query_file)))
        data = qmat.data
        ids = qmat.ids
        aug_count = 0
        if augmented is not None:
            import numpy as np

            data = np.vstack([data, augmented.data])
            aug_count = augmented.n
        source = (qmat.classes[0] if qmat.classes else "query")
        queries = QuerySet(embeddings=data, source_class=source, mode=mode,
                           reference_ids=ids, augmented_count=aug_count)

    spec_kwargs = {"kind": objective, "lam": lam, "eta": eta}
    if weights is not None:
        spec_kwargs["weights"] = tuple(float(w) for w in weights.split(","))
    spec = ObjectiveSpec(**spec_kwargs)

    kernel = KernelConfig(transform=transform, jitter=jitter) if transform else None
    problem = SelectionProblem(ground, queries, spec, kernel=kernel, jitter=jitter)
    budget = subset_fraction_to_k(ground.n, fraction) if fraction is not None else k
    result = greedy_select(problem, budget, strategy)

    payload = result.to_dict(include_timing=False)
    payload.update({
        "ids": [ground.ids[i] for i in result.selected],
        "n": ground.n,
        "objective": problem.describe(),
        "query": {
            "mode": queries.mode,
            "source_class": queries.source_class,
            "reference_ids": list(queries.reference_ids),
            "augmented_count": queries.augmented_count,
        },
    })
    _write_or_echo(json.dumps(payload, sort_keys=True, indent=2) + "\n", out)


def _summary_table(cells: list[dict]) -> str:
    header = f"{'size':>6} {'frac':>6} {'objective':>10} {'mode':>7} {'refs':>4} " \
             f"{'aug':>3} {'trials':>6} {'succ':>6} {'sf':>8} {'err':>4}"
    lines = [header, "-" * len(header)]
    for c in cells:
        obj = c["objective"] if isinstance(c["objective"], str) else c["objective"]["kind"]
        sf = "-" if c["success_fraction"] is None else f"{c['success_fraction']:.4f}"
        lines.append(
            f"{c['haystack_size']:>6} {c['fraction']:>6} {obj:>10} {c['query_mode']:>7} "
            f"{c['ref_count']:>4} {c['augmented_count']:>3} {c['trials']:>6} "
            f"{c['successes']:>6} {sf:>8} {c['errors']:>4}"
        )
    return "\n".join(lines)


@main.command()
@click.option("--grid", default=None, help="Sweep grid JSON file (default: built-in grid).")
@click.option("--out", default=None, help="Write the JSON report here.")
@click.option("--csv", "csv_out", default=None, help="Also write a CSV flattening here.")
@click.option("--seed", type=int, default=None, help="Override the grid's master seed.")
@click.option("--threads", type=int, default=None, envvar="HAYSTACK_SELECT_THREADS",
              help="Worker threads (env HAYSTACK_SELECT_THREADS).")
@click.option("--timings", is_flag=True, help="Include wall-clock stats (breaks byte determinism).")
@_runtime_errors
def bench(grid, out, csv_out, seed, threads, timings) -> None:
    """Run a benchmark sweep and emit its report."""
    if grid is not None:
        sweep = SweepGrid.from_dict(json.loads(Path(grid).read_text()))
    else:
        sweep = SweepGrid()
    if seed is not None:
        from dataclasses import replace

        sweep = replace(sweep, master_seed=seed)

    report = run_sweep(sweep, threads=threads, include_timings=timings)
    blob = report.to_json()
    if out is not None:
        Path(out).write_text(blob)
        click.echo(_summary_table(report.cells))
    else:
        click.echo(blob, nl=False)
    if csv_out is not None:
        Path(csv_out).write_text(report.to_csv())


@main.command("gen-synth")
@click.option("--classes", "class_count", type=int, required=True)
@click.option("--dim", type=int, required=True)
@click.option("--sigma", type=float, default=0.3, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--items-per-class", type=int, default=100, show_default=True)
@click.option("--refs-per-class", type=int, default=8, show_default=True)
@click.option("--out", required=True, help="Output path prefix.")
@_runtime_errors
def gen_synth(class_count, dim, sigma, seed, items_per_class, refs_per_class, out) -> None:
    """Generate a synthetic clustered world as EMB1 files."""
    cfg = SynthConfig(class_count=class_count, dimension=dim, intra_class_spread=sigma,
                      seed=seed, items_per_class=items_per_class,
                      refs_per_class=refs_per_class)
    items, store = gen_synthetic(cfg)
    paths = {
        "items": f"{out}.emb",
        "items_manifest": f"{out}.manifest.json",
        "references": f"{out}.refs.emb",
        "references_manifest": f"{out}.refs.manifest.json",
    }
    write_embeddings(items, paths["items"], paths["items_manifest"])
    write_embeddings(store.matrix, paths["references"], paths["references_manifest"])
    click.echo(json.dumps({"config": cfg.to_dict(), "files": paths}, sort_keys=True, indent=2))


@main.command("parse-query")
@click.argument("text")
@_runtime_errors
def parse_query_cmd(text) -> None:
    """Parse anchor/target slots out of a query template."""
    parsed = parse_query(text)
    click.echo(json.dumps(
        {"anchor": parsed.anchor, "target": parsed.target, "raw": parsed.raw},
        sort_keys=True, indent=2))


if __name__ == "__main__":
    main()
