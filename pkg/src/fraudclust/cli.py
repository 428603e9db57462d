"""Pipeline orchestration and command-line interface.

Subcommands: ``gen`` (synthetic data), ``cluster`` (cluster + metrics +
optional detection), ``weights-train`` (label-driven weights), ``grid-search``
and ``bench``.  A flat key=value config file can seed any run; every flag
overrides its config key.  Wall time is measured around the clustering call
only, excluding I/O.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import detect as detect_mod
from .agglo import Clustering
from .distance import DistanceParams, unit_weights
from .metrics import (
    GridSearchRow,
    MetricsReport,
    cfr,
    cfr_subset,
    clr,
    impurity,
    performance_score,
)
from .recagglo import RecAggloParams, rec_agglo
from .schema import (
    Dataset,
    Label,
    Record,
    default_schema,
    load_csv,
    load_schema,
    write_csv,
    write_schema,
)
from .synthgen import GeneratorConfig, generate, write_ground_truth
from .weights import cardinality_weights, label_weights, load_weights, save_weights

__all__ = ["PipelineConfig", "run_cluster", "run_grid_search", "run_scaling_bench", "main"]

DAY = 86400.0


@dataclass
class WindowSpec:
    """Select an unlabeled evaluation window plus a labeled fraud background."""

    ou_start: float
    ou_end: float
    of_span_days: float = 60.0
    label_delay_days: float = 1.0


@dataclass
class PipelineConfig:
    input_path: str
    output_dir: str
    schema_path: str | None = None
    weight_strategy: str = "unit"  # unit | cardinality | label | file
    weights_file: str | None = None
    params: RecAggloParams = field(default_factory=RecAggloParams)
    window: WindowSpec | None = None
    detect: bool = False
    null_marker: str = ""
    n_jobs: int = 1
    train_d_max: float = 0.56


class PipelineError(RuntimeError):
    """A pipeline stage failed; the message names the stage."""


def _stage(name: str):
    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and not isinstance(exc, PipelineError):
                raise PipelineError(f"stage {name}: {exc}") from exc
            return False

    return _Ctx()


def _load_input(cfg: PipelineConfig) -> Dataset:
    schema = load_schema(cfg.schema_path) if cfg.schema_path else default_schema()
    return load_csv(cfg.input_path, schema, cfg.null_marker)


def _select_window(
    data: Dataset, window: WindowSpec
) -> tuple[Dataset, list[int], list[Label]]:
    """Build the working set O_f + O_u.

    Returns (working dataset, positions of O_u records in it, ground-truth
    labels for the working dataset).  O_u records are relabeled unlabeled;
    O_f keeps its fraud labels.
    """
    of_end = min(window.ou_start, window.ou_end - window.label_delay_days * DAY)
    of_start = of_end - window.of_span_days * DAY
    working: list[Record] = []
    truth: list[Label] = []
    ou_positions: list[int] = []
    for rec in data.records:
        in_ou = window.ou_start <= rec.timestamp < window.ou_end
        in_of = (
            rec.label is Label.FRAUD and of_start <= rec.timestamp < of_end
        )
        if in_ou:
            ou_positions.append(len(working))
            working.append(replace(rec, label=Label.UNLABELED))
            truth.append(rec.label)
        elif in_of:
            working.append(rec)
            truth.append(rec.label)
    for pos, rec in enumerate(working):
        if pos not in set(ou_positions) and rec.timestamp >= window.ou_start:
            raise PipelineError(
                f"O_f record {rec.record_id} does not precede the O_u window"
            )
    return Dataset(data.schema, tuple(working)), ou_positions, truth


def _resolve_weights(cfg: PipelineConfig, data: Dataset) -> np.ndarray:
    if cfg.weight_strategy == "unit":
        return unit_weights(data.schema.d)
    if cfg.weight_strategy == "cardinality":
        return cardinality_weights(data)
    if cfg.weight_strategy == "label":
        w, _ = label_weights(data, cfg.params, train_d_max=cfg.train_d_max)
        return w
    if cfg.weight_strategy == "file":
        if not cfg.weights_file:
            raise PipelineError("weight_strategy=file requires weights_file")
        return load_weights(data.schema, cfg.weights_file)
    raise PipelineError(f"unknown weight strategy {cfg.weight_strategy!r}")


def _write_clusters(cl: Clustering, data: Dataset, path: Path) -> None:
    assignment = cl.assignment()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["record_id", "cluster_id"])
        for i, rec in enumerate(data.records):
            writer.writerow([rec.record_id, assignment[i]])


def run_cluster(cfg: PipelineConfig) -> tuple[Clustering, MetricsReport]:
    """Execute load -> weights -> clustering -> metrics -> optional detect,
    writing clusters.csv, metrics.txt and verdicts.csv to the output dir."""
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)

    with _stage("load"):
        data = _load_input(cfg)
        if cfg.window is not None:
            working, ou_positions, truth = _select_window(data, cfg.window)
        else:
            working, ou_positions, truth = data, [], data.labels()

    with _stage("weights"):
        weight_source = data if cfg.weight_strategy == "label" else working
        w = _resolve_weights(cfg, weight_source)
        if len(w) != working.schema.d:
            raise PipelineError("weight vector does not match schema")

    with _stage("cluster"):
        dist = DistanceParams(w, d_max=cfg.params.d_max, n_jobs=cfg.n_jobs)
        initial = Clustering.build([list(range(working.n))], "sample")
        t0 = time.perf_counter()
        cl = rec_agglo(initial, working, dist, cfg.params)
        wall = time.perf_counter() - t0

    with _stage("metrics"):
        report = MetricsReport(wall_time_s=wall)
        report.cluster_count = cl.n_clusters
        report.singleton_count = sum(1 for c in cl.clusters if len(c) == 1)
        if any(l is not Label.UNLABELED for l in truth):
            report.impurity = impurity(cl, truth)
            report.cfr = cfr(cl, truth)
            report.clr = clr(cl, truth)
        if ou_positions:
            report.cfr_u = cfr_subset(cl, truth, ou_positions)
        report.write(outdir / "metrics.txt")
        _write_clusters(cl, working, outdir / "clusters.csv")

    if cfg.detect:
        with _stage("detect"):
            verdicts = detect_mod.label_propagation(cl, working)
            detect_mod.write_verdicts(verdicts, outdir / "verdicts.csv")
            detect_mod.write_cluster_report(cl, working, outdir / "clusters_report.csv")
            if ou_positions:
                flagged_by_pos = {
                    rec_pos: v.flagged
                    for rec_pos, v in zip(
                        (i for i in range(working.n)
                         if working.records[i].label is Label.UNLABELED),
                        verdicts,
                    )
                }
                from .metrics import detection_metrics

                predicted = [flagged_by_pos.get(i, False) for i in ou_positions]
                scoped_truth = [truth[i] for i in ou_positions]
                rc, rf, prec, fpr = detection_metrics(
                    predicted, scoped_truth, cl, ou_positions
                )
                report.recall_clust = rc
                report.recall_final = rf
                report.precision = prec
                report.fpr = fpr
                report.write(outdir / "metrics.txt")

    return cl, report


def run_grid_search(
    cfg: PipelineConfig,
    rho_s_grid: list[float],
    rho_mc_grid: list[float],
    repetitions: int = 1,
) -> list[GridSearchRow]:
    """One clustering run per (rho_s, rho_mc) combination per repetition;
    metrics averaged, then scored (lower is better)."""
    if len(rho_s_grid) * len(rho_mc_grid) < 2:
        raise PipelineError("grid search needs at least two grid points")
    data = _load_input(cfg)
    truth = data.labels()
    w = _resolve_weights(cfg, data)
    rows = []
    for rho_mc in rho_mc_grid:
        for rho_s in rho_s_grid:
            imps, cfrs, times = [], [], []
            for rep in range(repetitions):
                params = replace(
                    cfg.params, rho_s=rho_s, rho_mc=rho_mc, seed=cfg.params.seed + rep
                )
                dist = DistanceParams(w, d_max=params.d_max, n_jobs=cfg.n_jobs)
                initial = Clustering.build([list(range(data.n))], "sample")
                t0 = time.perf_counter()
                cl = rec_agglo(initial, data, dist, params)
                times.append(time.perf_counter() - t0)
                imps.append(impurity(cl, truth))
                value = cfr(cl, truth)
                cfrs.append(0.0 if value is None else value)
            rows.append(
                GridSearchRow(
                    rho_mc,
                    rho_s,
                    float(np.mean(imps)),
                    float(np.mean(cfrs)),
                    float(np.mean(times)),
                )
            )
    scored = performance_score(rows)
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    best = min(range(len(scored)), key=lambda k: scored[k].score)
    with open(outdir / "grid.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rho_mc", "rho_s", "impurity", "cfr", "time_s", "score", "best"])
        for k, r in enumerate(scored):
            writer.writerow(
                [r.rho_mc, r.rho_s, r.impurity, r.cfr, r.time_s, r.score, int(k == best)]
            )
    return scored


def run_scaling_bench(
    sizes: list[int],
    cfg: PipelineConfig,
    repetitions: int = 5,
) -> list[tuple[int, float]]:
    """Average clustering wall time over repetitions for growing prefixes."""
    data = _load_input(cfg)
    if data.n < max(sizes):
        raise PipelineError(
            f"input has {data.n} rows, bench needs at least {max(sizes)}"
        )
    w = _resolve_weights(cfg, data)
    results = []
    for size in sizes:
        subset = Dataset(data.schema, data.records[:size])
        times = []
        for rep in range(repetitions):
            params = replace(cfg.params, seed=cfg.params.seed + rep)
            dist = DistanceParams(w, d_max=params.d_max, n_jobs=cfg.n_jobs)
            initial = Clustering.build([list(range(subset.n))], "sample")
            t0 = time.perf_counter()
            rec_agglo(initial, subset, dist, params)
            times.append(time.perf_counter() - t0)
        results.append((size, float(np.mean(times))))
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "bench.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["size", "mean_time_s", "growth_ratio"])
        prev = None
        for size, t in results:
            ratio = "" if prev is None or prev[1] == 0 else t / prev[1]
            writer.writerow([size, t, ratio])
            prev = (size, t)
    return results


# ---------------------------------------------------------------------------
# Command-line front end


def _read_config_file(path: str) -> dict[str, str]:
    out = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def _apply_config_defaults(args: argparse.Namespace, parser: argparse.ArgumentParser):
    if getattr(args, "config", None):
        file_values = _read_config_file(args.config)
        for key, value in file_values.items():
            attr = key.replace("-", "_")
            if hasattr(args, attr) and parser.get_default(attr) == getattr(args, attr):
                default = parser.get_default(attr)
                if isinstance(default, bool):
                    setattr(args, attr, value.lower() in ("1", "true", "yes"))
                elif isinstance(default, int):
                    setattr(args, attr, int(value))
                elif isinstance(default, float):
                    setattr(args, attr, float(value))
                else:
                    setattr(args, attr, value)


def _add_common_cluster_flags(sub: argparse.ArgumentParser):
    sub.add_argument("--config", help="flat key=value config file")
    sub.add_argument("--input", required=True, help="input CSV")
    sub.add_argument("--schema", default=None, help="schema file (default: built-in 37 attributes)")
    sub.add_argument("--out", required=True, help="output directory")
    sub.add_argument("--weights", default="unit", choices=["unit", "cardinality", "label", "file"])
    sub.add_argument("--weights-file", default=None)
    sub.add_argument("--delta-a", type=int, default=1000)
    sub.add_argument("--d-max", type=float, default=0.5)
    sub.add_argument("--rho-s", type=float, default=0.5)
    sub.add_argument("--rho-mc", type=float, default=6.0)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--jobs", type=int, default=1)
    sub.add_argument("--null-marker", default="")


def _pipeline_config(args: argparse.Namespace) -> PipelineConfig:
    params = RecAggloParams(
        delta_a=args.delta_a,
        d_max=args.d_max,
        rho_s=args.rho_s,
        rho_mc=args.rho_mc,
        seed=args.seed,
    )
    window = None
    if getattr(args, "ou_start", None) is not None:
        window = WindowSpec(
            ou_start=args.ou_start,
            ou_end=args.ou_end,
            of_span_days=args.of_span_days,
            label_delay_days=args.label_delay,
        )
    return PipelineConfig(
        input_path=args.input,
        output_dir=args.out,
        schema_path=args.schema,
        weight_strategy=args.weights,
        weights_file=args.weights_file,
        params=params,
        window=window,
        detect=getattr(args, "detect", False),
        null_marker=args.null_marker,
        n_jobs=args.jobs,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fraudclust")
    subs = parser.add_subparsers(dest="command", required=True)

    parser.command_parsers = {}

    def add_parser(name, **kwargs):
        sub = subs.add_parser(name, **kwargs)
        parser.command_parsers[name] = sub
        return sub

    gen = add_parser("gen", help="generate a synthetic labeled dataset")
    gen.add_argument("--config", help="flat key=value config file")
    gen.add_argument("--out", required=True, help="output directory")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--n-legit", type=int, default=10000)
    gen.add_argument("--n-fraud", type=int, default=5000)
    gen.add_argument("--n-campaigns", type=int, default=50)
    gen.add_argument(
        "--campaign-size-range",
        default="50,150",
        help="comma-separated min,max members per campaign",
    )

    cluster = add_parser("cluster", help="cluster a dataset and report metrics")
    _add_common_cluster_flags(cluster)
    cluster.add_argument("--detect", action="store_true", help="run label propagation")
    cluster.add_argument("--ou-start", type=float, default=None)
    cluster.add_argument("--ou-end", type=float, default=None)
    cluster.add_argument("--of-span-days", type=float, default=60.0)
    cluster.add_argument("--label-delay", type=float, default=1.0)

    wt = add_parser("weights-train", help="train label-driven weights")
    _add_common_cluster_flags(wt)
    wt.add_argument("--train-d-max", type=float, default=0.56)

    grid = add_parser("grid-search", help="hyperparameter grid search")
    _add_common_cluster_flags(grid)
    grid.add_argument("--rho-s-grid", default="0.25,0.5,1,2")
    grid.add_argument("--rho-mc-grid", default="1.01,1.5,2,3,4,6,10")
    grid.add_argument("--repetitions", type=int, default=1)

    bench = add_parser("bench", help="scalability benchmark")
    _add_common_cluster_flags(bench)
    bench.add_argument("--sizes", required=True, help="comma-separated sizes")
    bench.add_argument("--repetitions", type=int, default=5)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _apply_config_defaults(args, parser.command_parsers[args.command])
    try:
        if args.command == "gen":
            outdir = Path(args.out)
            outdir.mkdir(parents=True, exist_ok=True)
            schema = default_schema()
            lo, _, hi = args.campaign_size_range.partition(",")
            cfg = GeneratorConfig(
                seed=args.seed,
                n_legit=args.n_legit,
                n_fraud=args.n_fraud,
                n_campaigns=args.n_campaigns,
                campaign_size_range=(int(lo), int(hi)),
            )
            data, gt = generate(cfg, schema)
            write_csv(data, outdir / "data.csv")
            write_schema(schema, outdir / "schema.txt")
            write_ground_truth(data, gt, outdir / "ground_truth.csv")
        elif args.command == "cluster":
            run_cluster(_pipeline_config(args))
        elif args.command == "weights-train":
            cfg = _pipeline_config(args)
            data = _load_input(cfg)
            w, _ = label_weights(data, cfg.params, train_d_max=args.train_d_max)
            outdir = Path(cfg.output_dir)
            outdir.mkdir(parents=True, exist_ok=True)
            save_weights(w, data.schema, outdir / "weights.txt")
        elif args.command == "grid-search":
            cfg = _pipeline_config(args)
            rho_s_grid = [float(x) for x in args.rho_s_grid.split(",")]
            rho_mc_grid = [float(x) for x in args.rho_mc_grid.split(",")]
            run_grid_search(cfg, rho_s_grid, rho_mc_grid, args.repetitions)
        elif args.command == "bench":
            cfg = _pipeline_config(args)
            sizes = [int(x) for x in args.sizes.split(",")]
            run_scaling_bench(sizes, cfg, args.repetitions)
    except (PipelineError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
