"""Command-line front end.

Subcommands: `dpw dist`, `dpw align`, `synth gen`, `match run`, `eval topk`.
Runs are configured by a plain `key = value` text file plus `--set key=value`
overrides; unknown keys are rejected and every configured run logs the fully
resolved configuration.  All randomness flows from the single `seed` key.

Exit codes: 0 success, 1 I/O or format error, 2 validation error,
3 numerical divergence.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .adapter import TrainConfig, load_adapter, save_adapter
from .dpw import dpw, optimal_hipa
from .errors import DivergenceError, FormatError, ValidationError
from .evaluate import knn_baseline, match_topk, report_csv_lines, report_json
from .matrix import (
    Dataset,
    load_dataset,
    load_matrix,
    load_matrix_csv,
    save_dataset,
)
from .sloma import sloma_trace_csv_lines
from .swim import SwimConfig, run_swim, swim_trace_csv_lines
from .synth import SynthConfig, gen_task

# key -> (parser, default)
_SCHEMA = {
    "seed": (int, 0),
    "alpha": (int, 1),
    "eps": (float, 1e-3),
    "hidden": (int, 64),
    "dropout": (lambda s: s.lower() in ("1", "true", "yes", "on"), False),
    "dropout_p": (float, 0.2),
    "epochs": (int, 20),
    "learning_rate": (float, 1e-3),
    "schedule_decay": (float, 0.004),
    "lr_decay": (float, 0.0),
    "batch_size": (int, 0),  # 0 means automatic
    "max_sloma_iters": (int, 50),
    "n_classes": (int, 20),
    "height": (int, 10),
    "width": (int, 10),
    "channels": (int, 8),
    "warp": (float, 0.5),
    "map_kind": (str, "affine_sigmoid"),
    "map_gain": (float, 2.5),
    "noise_std": (float, 0.0),
    "topk": (int, 5),
}


def _parse_config_line(line, source):
    s = line.strip()
    if not s or s.startswith("#"):
        return None
    key, sep, value = s.partition("=")
    if not sep:
        raise ValidationError(f"{source}: expected 'key = value', got {s!r}")
    key = key.strip()
    value = value.strip()
    if key not in _SCHEMA:
        raise ValidationError(f"{source}: unknown config key {key!r}")
    parser, _ = _SCHEMA[key]
    try:
        return key, parser(value)
    except ValueError:
        raise ValidationError(f"{source}: bad value {value!r} for key {key!r}") from None


def load_run_config(path=None, overrides=()) -> dict:
    """Resolve defaults, then file values, then --set overrides."""
    cfg = {k: d for k, (_, d) in _SCHEMA.items()}
    if path is not None:
        with open(path, "r", encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                item = _parse_config_line(line, f"{path}:{lineno}")
                if item:
                    cfg[item[0]] = item[1]
    for ov in overrides:
        item = _parse_config_line(ov, f"--set {ov!r}")
        if item is None:
            raise ValidationError(f"--set {ov!r}: expected 'key=value'")
        cfg[item[0]] = item[1]
    return cfg


def resolved_config_lines(cfg: dict) -> list[str]:
    return [f"{k} = {cfg[k]}" for k in sorted(cfg)]


def _swim_config(cfg: dict) -> SwimConfig:
    train = TrainConfig(
        learning_rate=cfg["learning_rate"],
        schedule_decay=cfg["schedule_decay"],
        epochs=cfg["epochs"],
        batch_size=cfg["batch_size"] or None,
        dropout=cfg["dropout"],
        lr_decay=cfg["lr_decay"],
    )
    return SwimConfig(
        alpha=cfg["alpha"],
        eps=cfg["eps"],
        hidden=cfg["hidden"],
        dropout_p=cfg["dropout_p"],
        train=train,
        max_sloma_iters=cfg["max_sloma_iters"],
        seed=cfg["seed"],
    )


def _synth_config(cfg: dict) -> SynthConfig:
    return SynthConfig(
        n_classes=cfg["n_classes"],
        height=cfg["height"],
        width=cfg["width"],
        channels=cfg["channels"],
        warp=cfg["warp"],
        map_kind=cfg["map_kind"],
        map_gain=cfg["map_gain"],
        noise_std=cfg["noise_std"],
        seed=cfg["seed"],
    )


def _load_any_matrix(path):
    if str(path).lower().endswith(".csv"):
        return load_matrix_csv(path)
    return load_matrix(path)


def _workers(args) -> int:
    if getattr(args, "workers", None) is not None:
        return max(1, args.workers)
    return max(1, int(os.environ.get("WARPMATCH_WORKERS", "1")))


def _write_resolved(cfg: dict, outdir: Path) -> None:
    text = "\n".join(resolved_config_lines(cfg)) + "\n"
    (outdir / "config.resolved").write_text(text, encoding="utf-8")
    for line in resolved_config_lines(cfg):
        print(f"# {line}", file=sys.stderr)


# ---------------------------------------------------------------------------
# Commands

def cmd_dpw_dist(args) -> int:
    a = _load_any_matrix(args.matrix_a)
    b = _load_any_matrix(args.matrix_b)
    distance, _ = dpw(a, b)
    print(f"{distance:.12g}")
    return 0


def cmd_dpw_align(args) -> int:
    a = _load_any_matrix(args.matrix_a)
    b = _load_any_matrix(args.matrix_b)
    _, tables = dpw(a, b)
    hipa = optimal_hipa(a, b, tables)
    lines = ["hs,ws,he,we,cost"]
    for hs, ws, he, we in hipa.aligned_pairs():
        diff = a.data[hs - 1, ws - 1] - b.data[he - 1, we - 1]
        cost = float(np.sqrt(np.dot(diff, diff)))
        lines.append(f"{hs},{ws},{he},{we},{cost!r}")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {len(lines) - 1} aligned pairs to {out}")
    return 0


def cmd_synth_gen(args) -> int:
    cfg = load_run_config(args.config, args.set or ())
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    _write_resolved(cfg, outdir)
    seen, emerging, truth = gen_task(_synth_config(cfg))
    seen_manifest = save_dataset(seen, outdir)
    emerging_manifest = save_dataset(emerging, outdir)
    truth_lines = ["emerging_class_id,seen_class_id"]
    truth_lines += [f"{e},{s}" for e, s in sorted(truth.items())]
    (outdir / "truth.csv").write_text("\n".join(truth_lines) + "\n", encoding="utf-8")
    print(f"wrote {seen.size} classes to {seen_manifest} and {emerging_manifest}")
    return 0


def _index_truth(seen: Dataset, emerging: Dataset):
    """truth[l] = seen index with the same class id as emerging entry l."""
    by_class = {cid: i for i, cid in enumerate(seen.class_ids)}
    return [by_class[cid] for cid in emerging.class_ids]


def cmd_match_run(args) -> int:
    cfg = load_run_config(args.config, args.set or ())
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    _write_resolved(cfg, outdir)
    seen = load_dataset(args.seen)
    emerging = load_dataset(args.emerging)
    if set(seen.class_ids) != set(emerging.class_ids):
        raise ValidationError("seen and emerging datasets must share one class-id set")
    workers = _workers(args)
    truth = _index_truth(seen, emerging)
    assignment, params, steps = run_swim(
        seen.matrices, emerging.matrices, _swim_config(cfg),
        truth=truth, workers=workers)

    final = steps[-1]
    lines = ["emerging_id,seen_id,rank1_distance"]
    for (k, l), d in zip(final.pairs, final.pair_distances):
        lines.append(f"{emerging.class_ids[l]},{seen.class_ids[k]},{d!r}")
    (outdir / "assignment.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (outdir / "trace.csv").write_text(
        "\n".join(swim_trace_csv_lines(steps)) + "\n", encoding="utf-8")
    inner_lines = ["T,t,match_cost,train_loss,param_delta"]
    for step in steps:
        for row in sloma_trace_csv_lines(step.inner)[1:]:
            inner_lines.append(f"{step.iteration},{row}")
    (outdir / "sloma_trace.csv").write_text("\n".join(inner_lines) + "\n", encoding="utf-8")
    save_adapter(params, outdir / "adapter.lfa")

    report = match_topk(seen, emerging, params, k=cfg["topk"], workers=workers)
    (outdir / "report.json").write_text(report_json(report) + "\n", encoding="utf-8")
    (outdir / "report.csv").write_text(
        "\n".join(report_csv_lines(report)) + "\n", encoding="utf-8")
    if args.baseline == "knn":
        base = knn_baseline(seen, emerging, params, k=cfg["topk"])
        (outdir / "baseline_report.json").write_text(report_json(base) + "\n", encoding="utf-8")
        (outdir / "baseline_report.csv").write_text(
            "\n".join(report_csv_lines(base)) + "\n", encoding="utf-8")
    print(f"top1 {report.top1!r} top5 {report.top5!r} ({len(steps)} outer iterations)")
    return 0


def cmd_eval_topk(args) -> int:
    cfg = load_run_config(args.config, args.set or ())
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    _write_resolved(cfg, outdir)
    seen = load_dataset(args.seen)
    emerging = load_dataset(args.emerging)
    params = load_adapter(args.adapter, dropout_p=cfg["dropout_p"], seed=cfg["seed"])
    k = args.k if args.k is not None else cfg["topk"]
    report = match_topk(seen, emerging, params, k=k, workers=_workers(args))
    (outdir / "report.json").write_text(report_json(report) + "\n", encoding="utf-8")
    (outdir / "report.csv").write_text(
        "\n".join(report_csv_lines(report)) + "\n", encoding="utf-8")
    if args.baseline == "knn":
        base = knn_baseline(seen, emerging, params, k=k)
        (outdir / "baseline_report.json").write_text(report_json(base) + "\n", encoding="utf-8")
        (outdir / "baseline_report.csv").write_text(
            "\n".join(report_csv_lines(base)) + "\n", encoding="utf-8")
    print(f"top1 {report.top1!r} top5 {report.top5!r}")
    return 0


# ---------------------------------------------------------------------------
# Argument wiring

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="warpmatch",
        description="Order-preserving 2D alignment and self-reinforcing matching.")
    sub = p.add_subparsers(dest="group", required=True)

    dpw_p = sub.add_parser("dpw", help="alignment distance and paths")
    dpw_sub = dpw_p.add_subparsers(dest="command", required=True)
    dist = dpw_sub.add_parser("dist", help="print the alignment distance of two matrices")
    dist.add_argument("matrix_a")
    dist.add_argument("matrix_b")
    dist.set_defaults(func=cmd_dpw_dist)
    align = dpw_sub.add_parser("align", help="dump the optimal alignment as CSV lines")
    align.add_argument("matrix_a")
    align.add_argument("matrix_b")
    align.add_argument("-o", "--out", required=True)
    align.set_defaults(func=cmd_dpw_align)

    synth_p = sub.add_parser("synth", help="synthetic task generation")
    synth_sub = synth_p.add_subparsers(dest="command", required=True)
    gen = synth_sub.add_parser("gen", help="generate a paired task with ground truth")
    gen.add_argument("--config")
    gen.add_argument("--set", action="append", metavar="KEY=VALUE")
    gen.add_argument("--outdir", required=True)
    gen.set_defaults(func=cmd_synth_gen)

    match_p = sub.add_parser("match", help="full matching runs")
    match_sub = match_p.add_subparsers(dest="command", required=True)
    run = match_sub.add_parser("run", help="run the full self-reinforcing matcher")
    run.add_argument("--seen", required=True, help="seen-modality manifest")
    run.add_argument("--emerging", required=True, help="emerging-modality manifest")
    run.add_argument("--config")
    run.add_argument("--set", action="append", metavar="KEY=VALUE")
    run.add_argument("--outdir", required=True)
    run.add_argument("--baseline", choices=["knn"])
    run.add_argument("--workers", type=int, default=None,
                     help="distance-matrix workers (default WARPMATCH_WORKERS or 1)")
    run.set_defaults(func=cmd_match_run)

    eval_p = sub.add_parser("eval", help="evaluation reports")
    eval_sub = eval_p.add_subparsers(dest="command", required=True)
    topk = eval_sub.add_parser("topk", help="rank and score with a saved adapter")
    topk.add_argument("--seen", required=True)
    topk.add_argument("--emerging", required=True)
    topk.add_argument("--adapter", required=True)
    topk.add_argument("--k", type=int, default=None)
    topk.add_argument("--config")
    topk.add_argument("--set", action="append", metavar="KEY=VALUE")
    topk.add_argument("--outdir", required=True)
    topk.add_argument("--baseline", choices=["knn"])
    topk.add_argument("--workers", type=int, default=None)
    topk.set_defaults(func=cmd_eval_topk)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
