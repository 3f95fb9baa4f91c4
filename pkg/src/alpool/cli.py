"""Command-line surface binding all phases into reproducible experiments.

Every command takes --seed and writes machine-readable JSON (plus a human
table on stdout) under --out, never mutating its inputs. Exit codes: 0
success, 2 usage, 3 data error, 4 numerical divergence. Artifacts are
byte-identical across reruns and across --jobs values.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import math
import os
import re
import sys
from pathlib import Path

import numpy as np

from . import alloop, cluster, embed_io, initsample
from .core import ALRunConfig, Strategy, l2_normalize_rows
from .distill import distill as fit_projection
from .distill import project, read_projection, write_projection
from .errors import AlpoolError, DataError, DivergenceError
from .model import TrainConfig

ALL_STRATEGIES = tuple(s.value for s in Strategy)


def _write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2, allow_nan=False)
        fh.write("\n")


def _json_safe(value):
    """NaN/inf are not JSON; undefined stats become null, infinities strings."""
    if isinstance(value, float):
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
    return value


def _slug(text: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", text.lower()).strip("-") or "category"


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------- commands


def cmd_gen_synthetic(args) -> int:
    prevalences = tuple(float(p) for p in args.prevalences.split(","))
    spec = embed_io.SyntheticSpec(
        n_classes=args.classes,
        n_samples=args.n,
        dim=args.dim,
        class_prevalences=prevalences,
        center_separation=args.separation,
        noise_sigma=args.sigma,
        seed=args.seed,
    )
    out = _out_dir(args)
    dataset, _ = embed_io.generate_synthetic(spec)
    embed_io.write_embeddings(out / "embeddings.aleb", dataset.embeddings)
    embed_io.write_labels(out / "labels.jsonl", dataset.records)
    counts = {c: 0 for c in dataset.categories()}
    for rec in dataset.records:
        for c in rec.categories:
            counts[c] += 1
    print(f"wrote {dataset.n} x {dataset.embeddings.dim} embeddings to {out}")
    for name in sorted(counts):
        print(f"  {name}: {counts[name]}")
    return 0


def cmd_distill(args) -> int:
    student = embed_io.read_embeddings(args.student)
    teacher = embed_io.read_embeddings(args.teacher)
    out = _out_dir(args)
    head, report = fit_projection(
        student, teacher, epochs=args.epochs, lr=args.lr, seed=args.seed
    )
    write_projection(out / "projection.alpj", head)
    _write_json(
        out / "distill_report.json",
        {
            "epochs": report.epochs,
            "final_holdout_mse": report.final_holdout_mse,
            "train_mse_per_epoch": list(report.train_mse_per_epoch),
        },
    )
    print(f"distilled {student.dim} -> {teacher.dim} over {report.epochs} epochs")
    print(f"  final holdout MSE: {report.final_holdout_mse:.6g}")
    return 0


def cmd_cluster(args) -> int:
    x = embed_io.read_embeddings(args.embeddings)
    if not args.no_normalize:
        x = l2_normalize_rows(x)
    out = _out_dir(args)
    result = cluster.kmeans(x, k=args.k, seed=args.seed, max_iters=args.max_iters, tol=args.tol)
    embed_io.write_clusters_json(out / "clusters.json", result)
    print(f"k={result.k} inertia={result.inertia:.6g} lloyd_iters={len(result.inertia_trace)}")
    return 0


def cmd_dunn(args) -> int:
    x = embed_io.read_embeddings(args.embeddings)
    if not args.no_normalize:
        x = l2_normalize_rows(x)
    with open(args.clusters, "r", encoding="utf-8") as fh:
        clusters_obj = json.load(fh)
    stats = cluster.dunn(x, clusters_obj["assignments"])
    out = _out_dir(args)
    _write_json(
        out / "dunn.json",
        {
            "global": _json_safe(stats.global_index),
            "per_cluster": [_json_safe(v) for v in stats.per_cluster],
        },
    )
    finite = [v for v in stats.per_cluster if math.isfinite(v)]
    print(f"global Dunn: {stats.global_index:.6g}")
    if finite:
        print(
            f"per-cluster (finite {len(finite)}/{len(stats.per_cluster)}): "
            f"min={min(finite):.4g} median={initsample.percentile(finite, 50):.4g} "
            f"max={max(finite):.4g}"
        )
    return 0


def _effort_stats_json(stats: initsample.EffortStats) -> dict:
    return {
        "pool_kind": stats.pool_kind,
        "trials": stats.trials,
        "success_count": stats.success_count,
        "median": _json_safe(stats.median),
        "p90": _json_safe(stats.p90),
    }


def cmd_simulate_initial(args) -> int:
    dataset = embed_io.read_dataset(args.embeddings, args.labels)
    pool_ids = dataset.split_ids(args.split) if args.split != "all" else list(range(dataset.n))
    out = _out_dir(args)
    common = dict(
        split=args.split, trials=args.trials,
        init_pos=args.init_pos, init_neg=args.init_neg, seed=args.seed,
    )

    stats: dict[str, initsample.EffortStats] = {}
    if args.pool in ("full", "both"):
        stats["full"] = initsample.simulate_effort_for_category(
            dataset, args.category, "full", **common
        )
    if args.pool in ("medoids", "both"):
        if args.clusters:
            with open(args.clusters, "r", encoding="utf-8") as fh:
                obj = json.load(fh)
            clustering = cluster.KMeansResult(
                k=obj["k"], seed=obj["seed"], centroids=np.empty((0, 0)),
                assignments=np.asarray(obj["assignments"], dtype=np.int64),
                inertia=obj["inertia"],
                medoid_ids=np.asarray(obj["medoid_ids"], dtype=np.int64),
                inertia_trace=(),
            )
        else:
            k = args.k or max(2, round(len(pool_ids) / 10))
            x = l2_normalize_rows(dataset.embeddings)
            clustering = cluster.kmeans(x, k=k, seed=args.seed, sample_ids=pool_ids)
        stats["medoids"] = initsample.simulate_effort_for_category(
            dataset, args.category, "medoids", kmeans_result=clustering, **common
        )

    obj = {"category": args.category, "pools": {k: _effort_stats_json(v) for k, v in stats.items()}}
    if len(stats) == 2:
        comparison = initsample.effort_comparison(stats["full"], stats["medoids"])
        obj["gain_percent"] = _json_safe(comparison["gain_percent"])
    _write_json(out / "effort.json", obj)

    header = f"{'category':<40} {'pool':<8} {'median':>8} {'90th %tile':>11} {'success':>9}"
    print(header)
    for kind in ("full", "medoids"):
        if kind in stats:
            s = stats[kind]
            print(
                f"{args.category:<40.40} {kind:<8} {s.median:>8.1f} {s.p90:>11.1f} "
                f"{s.success_count:>4}/{s.trials}"
            )
            if s.success_count < s.trials:
                print(f"  warning: {s.trials - s.success_count} trials failed in the {kind} pool")
    if "gain_percent" in obj and obj["gain_percent"] is not None:
        print(f"gain(%): {obj['gain_percent']:.1f}")
    return 0


_CONFIG_KEYS = {
    "student": str, "teacher": str, "projection": str, "labels": str, "clusters": str,
    "categories": str, "strategies": str, "iterations": int, "batch_size": int,
    "init_pos": int, "init_neg": int, "seeds": str, "seed": int, "k": int,
    "medoid_init": lambda v: v.lower() in ("1", "true", "yes"),
    "lr": float, "epochs": int, "patience": int, "hidden_dim": int,
    "dropout_rate": float, "mc_passes": int, "distill_epochs": int, "distill_lr": float,
    "jobs": int, "out_dir": str,
}

_CONFIG_PATH_KEYS = ("student", "teacher", "projection", "labels", "clusters")


def parse_experiment_config(path) -> dict:
    """Strict `key = value` experiment file; unknown keys are rejected up front."""
    values: dict[str, object] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, raw = line.partition("=")
            key = key.strip()
            raw = raw.strip()
            if key not in _CONFIG_KEYS:
                raise ValueError(
                    f"{path}:{lineno}: unknown key {key!r}; known keys: "
                    + ", ".join(sorted(_CONFIG_KEYS))
                )
            if key in values:
                raise ValueError(f"{path}:{lineno}: duplicate key {key!r}")
            try:
                values[key] = _CONFIG_KEYS[key](raw)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from exc
    for key in _CONFIG_PATH_KEYS:
        if key in values and not Path(str(values[key])).exists():
            raise DataError(f"{path}: {key} file not found: {values[key]}")
    return values


def _resolve(args, config: dict, key: str, default):
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    if key in config:
        return config[key]
    return default


def _run_one(task_args: tuple) -> tuple:
    """Worker for one (strategy, category, seed) run; reads inputs from files."""
    (student_path, labels_path, projection_path, clusters_path,
     strategy, category, seed, run_cfg_kw, model_cfg_kw) = task_args
    dataset = embed_io.read_dataset(student_path, labels_path)
    projection = read_projection(projection_path) if projection_path else None
    kmeans_result = None
    if clusters_path:
        with open(clusters_path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
        kmeans_result = cluster.KMeansResult(
            k=obj["k"], seed=obj["seed"], centroids=np.empty((0, 0)),
            assignments=np.asarray(obj["assignments"], dtype=np.int64),
            inertia=obj["inertia"],
            medoid_ids=np.asarray(obj["medoid_ids"], dtype=np.int64),
            inertia_trace=(),
        )
    config = ALRunConfig(strategy=Strategy(strategy), **run_cfg_kw)
    model_config = alloop.ModelConfig(
        hidden_dim=model_cfg_kw["hidden_dim"],
        dropout_rate=model_cfg_kw["dropout_rate"],
        train=TrainConfig(
            epochs=model_cfg_kw["epochs"],
            lr=model_cfg_kw["lr"],
            patience=model_cfg_kw["patience"],
        ),
        mc_passes=model_cfg_kw["mc_passes"],
    )
    records = alloop.run_al(
        dataset, category, config,
        projection=projection, seed=seed,
        kmeans_result=kmeans_result, model_config=model_config,
    )
    return strategy, category, seed, records


def cmd_run_al(args) -> int:
    config = parse_experiment_config(args.config) if args.config else {}
    student_path = _resolve(args, config, "student", None)
    labels_path = _resolve(args, config, "labels", None)
    if not student_path or not labels_path:
        raise ValueError("run-al needs --student and --labels (flags or config file)")
    for label, path in (("student", student_path), ("labels", labels_path)):
        if not Path(path).exists():
            raise DataError(f"{label} file not found: {path}")

    out = Path(_resolve(args, config, "out_dir", None) or args.out)
    out.mkdir(parents=True, exist_ok=True)
    seed = _resolve(args, config, "seed", 0)
    dataset = embed_io.read_dataset(student_path, labels_path)

    # optional distillation: a teacher file produces projection.alpj under --out
    projection_path = _resolve(args, config, "projection", None)
    teacher_path = _resolve(args, config, "teacher", None)
    if teacher_path and projection_path:
        raise ValueError("give either a teacher (to distill) or a projection, not both")
    if teacher_path:
        if not Path(teacher_path).exists():
            raise DataError(f"teacher file not found: {teacher_path}")
        teacher = embed_io.read_embeddings(teacher_path)
        head, _ = fit_projection(
            dataset.embeddings, teacher,
            epochs=_resolve(args, config, "distill_epochs", 300),
            lr=_resolve(args, config, "distill_lr", 1e-4),
            seed=seed,
        )
        projection_path = out / "projection.alpj"
        write_projection(projection_path, head)
    elif projection_path and not Path(projection_path).exists():
        raise DataError(f"projection file not found: {projection_path}")

    # optional medoid-based initial sampling
    clusters_path = _resolve(args, config, "clusters", None)
    medoid_init = bool(_resolve(args, config, "medoid_init", False))
    if medoid_init and not clusters_path:
        train_ids = dataset.split_ids("train")
        k = _resolve(args, config, "k", None) or max(2, round(len(train_ids) / 10))
        space = dataset.embeddings
        if projection_path:
            space = project(read_projection(projection_path), space)
        result = cluster.kmeans(l2_normalize_rows(space), k=k, seed=seed, sample_ids=train_ids)
        clusters_path = out / "clusters.json"
        embed_io.write_clusters_json(clusters_path, result)
    elif clusters_path and not Path(clusters_path).exists():
        raise DataError(f"clusters file not found: {clusters_path}")

    categories_arg = _resolve(args, config, "categories", "all")
    categories = dataset.categories() if categories_arg == "all" else [
        c.strip() for c in str(categories_arg).split(",") if c.strip()
    ]
    strategies_arg = _resolve(args, config, "strategies", "all")
    strategies = list(ALL_STRATEGIES) if strategies_arg == "all" else [
        s.strip() for s in str(strategies_arg).split(",") if s.strip()
    ]
    for s in strategies:
        if s not in ALL_STRATEGIES:
            raise ValueError(f"unknown strategy {s!r}; choose from {', '.join(ALL_STRATEGIES)}")
    seeds_arg = _resolve(args, config, "seeds", "0,1,2")
    seeds = [int(s) for s in str(seeds_arg).split(",") if s.strip()]

    run_cfg_kw = {
        "iterations": _resolve(args, config, "iterations", 5),
        "batch_size": _resolve(args, config, "batch_size", 10),
        "init_pos": _resolve(args, config, "init_pos", 5),
        "init_neg": _resolve(args, config, "init_neg", 5),
    }
    model_cfg_kw = {
        "hidden_dim": _resolve(args, config, "hidden_dim", 128),
        "dropout_rate": _resolve(args, config, "dropout_rate", 0.1),
        "epochs": _resolve(args, config, "epochs", 100),
        "lr": _resolve(args, config, "lr", 5e-5),
        "patience": _resolve(args, config, "patience", 10),
        "mc_passes": _resolve(args, config, "mc_passes", 10),
    }

    tasks = [
        (
            str(student_path), str(labels_path),
            str(projection_path) if projection_path else None,
            str(clusters_path) if clusters_path else None,
            strategy, category, run_seed, run_cfg_kw, model_cfg_kw,
        )
        for strategy in strategies
        for category in categories
        for run_seed in seeds
    ]
    jobs = _resolve(args, config, "jobs", os.cpu_count() or 1)
    if jobs and jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, tasks))
    else:
        results = [_run_one(t) for t in tasks]

    for strategy, category, run_seed, records in results:
        name = f"run_{strategy}_{_slug(category)}_seed{run_seed}.json"
        embed_io.write_run_json(out / name, strategy, run_seed, category, records)
    print(f"wrote {len(results)} run reports to {out}")
    for strategy, category, run_seed, records in results:
        final = records[-1]
        print(
            f"  {strategy:<20} {category:<30.30} seed={run_seed} "
            f"final n={final.n_labeled} test_f1={final.test_f1:.4f}"
        )
    return 0


def cmd_report(args) -> int:
    runs_dir = Path(args.runs)
    run_files = sorted(runs_dir.glob("run_*.json"))
    if not run_files:
        raise DataError(f"no run_*.json files under {runs_dir}")
    runs = []
    for path in run_files:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
        records = tuple(
            alloop.IterationRecord(
                iteration=i + 1,
                n_labeled=it["n_labeled"],
                selected_ids=tuple(it["selected_ids"]),
                dev_f1=it["f1_dev"],
                test_f1=it["f1_test"],
            )
            for i, it in enumerate(obj["iterations"])
        )
        runs.append(
            alloop.RunResult(
                strategy=Strategy(obj["strategy"]),
                category=obj["category"],
                seed=obj["seed"],
                records=records,
            )
        )
    curves = alloop.aggregate(runs)
    out = _out_dir(args)
    lines = ["strategy,n_labeled,mean_f1,std_f1"]
    for strategy in sorted(curves, key=lambda s: s.value):
        for point in curves[strategy]:
            std = float(np.std(np.asarray(point.per_seed_f1, dtype=np.float64)))
            lines.append(f"{strategy.value},{point.n_labeled},{point.mean_f1!r},{std!r}")
    (out / "aggregate.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"{'strategy':<22} {'n_labeled':>9} {'mean_f1':>9}")
    for strategy in sorted(curves, key=lambda s: s.value):
        for point in curves[strategy]:
            print(f"{strategy.value:<22} {point.n_labeled:>9} {point.mean_f1:>9.4f}")
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="alpool",
        description="Pool-based active-learning engine with cold-start medoid sampling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synthetic", help="generate a synthetic embedding dataset")
    p.add_argument("--n", type=int, required=True, help="number of samples")
    p.add_argument("--dim", type=int, required=True, help="embedding dimensionality")
    p.add_argument("--classes", type=int, required=True, help="number of classes")
    p.add_argument("--prevalences", required=True, help="comma list summing to 1")
    p.add_argument("--separation", type=float, default=4.0, help="min distance between class centers")
    p.add_argument("--sigma", type=float, default=0.5, help="per-coordinate noise scale")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen_synthetic)

    p = sub.add_parser("distill", help="fit the student-to-teacher projection")
    p.add_argument("--student", required=True)
    p.add_argument("--teacher", required=True)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_distill)

    p = sub.add_parser("cluster", help="k-means over (normalized) embeddings")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--no-normalize", action="store_true", help="skip row normalization")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("dunn", help="Dunn statistics for an existing clustering")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--clusters", required=True, help="clusters.json from the cluster command")
    p.add_argument("--no-normalize", action="store_true")
    p.add_argument("--seed", type=int, default=0, help="accepted for uniformity; dunn is deterministic")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dunn)

    p = sub.add_parser("simulate-initial", help="annotation-effort simulation")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--category", required=True)
    p.add_argument("--pool", choices=("full", "medoids", "both"), default="both")
    p.add_argument("--clusters", help="clusters.json supplying medoid ids")
    p.add_argument("--k", type=int, help="cluster count when clustering in-line")
    p.add_argument("--split", choices=("train", "dev", "test", "all"), default="train")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--init-pos", type=int, default=5, dest="init_pos")
    p.add_argument("--init-neg", type=int, default=5, dest="init_neg")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate_initial)

    p = sub.add_parser("run-al", help="full active-learning runs")
    p.add_argument("--config", help="key = value experiment file")
    p.add_argument("--student", help="embeddings file (.aleb)")
    p.add_argument("--teacher", help="teacher embeddings; triggers distillation")
    p.add_argument("--projection", help="pre-trained projection (.alpj)")
    p.add_argument("--labels")
    p.add_argument("--clusters", help="clusters.json for medoid initial sampling")
    p.add_argument("--medoid-init", action="store_const", const=True, default=None,
                   dest="medoid_init", help="cluster in-line and sample L1 from medoids")
    p.add_argument("--k", type=int, help="cluster count for --medoid-init")
    p.add_argument("--categories", help="comma list or 'all'")
    p.add_argument("--strategies", help=f"comma list from: {', '.join(ALL_STRATEGIES)}, or 'all'")
    p.add_argument("--iterations", type=int)
    p.add_argument("--batch", type=int, dest="batch_size")
    p.add_argument("--init-pos", type=int, dest="init_pos")
    p.add_argument("--init-neg", type=int, dest="init_neg")
    p.add_argument("--seeds", help="comma list of run seeds")
    p.add_argument("--seed", type=int, help="pipeline seed (distill/cluster)")
    p.add_argument("--lr", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--hidden-dim", type=int, dest="hidden_dim")
    p.add_argument("--dropout-rate", type=float, dest="dropout_rate")
    p.add_argument("--mc-passes", type=int, dest="mc_passes")
    p.add_argument("--distill-epochs", type=int, dest="distill_epochs")
    p.add_argument("--distill-lr", type=float, dest="distill_lr")
    p.add_argument("--jobs", type=int, help="parallel runs (results independent of value)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_run_al)

    p = sub.add_parser("report", help="aggregate run reports into a learning-curve CSV")
    p.add_argument("--runs", required=True, help="directory of run_*.json files")
    p.add_argument("--seed", type=int, default=0, help="accepted for uniformity; report is deterministic")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DivergenceError as exc:
        print(f"alpool: error: divergence: {exc}", file=sys.stderr)
        return 4
    except DataError as exc:
        print(f"alpool: error: data: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"alpool: error: data: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"alpool: error: usage: {exc}", file=sys.stderr)
        return 2
    except AlpoolError as exc:
        print(f"alpool: error: data: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
