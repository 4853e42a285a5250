"""Command line entry points.

Exit codes: 0 success, 1 unreadable input, 2 invalid dataset or arguments,
3 infeasible synthetic graph configuration.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from isocal.aggregation import Strategy, calibrate
from isocal.evaluation import (
    GroupKey,
    evaluate_strategies,
    group_by,
    holdout_split,
    perturbation_study,
)
from isocal.io import (
    PER_PAPER_FIELDS,
    PLAN_FIELDS,
    SUMMARY_FIELDS,
    DatasetFormatError,
    atomic_write,
    csv_text,
    dump_dataset,
    json_text,
    load_dataset,
    per_paper_rows,
    plan_rows,
    summary_rows,
    write_table,
)
from isocal.model import validate_dataset
from isocal.policy import emergency_plan
from isocal.synthetic import (
    ExperimentKind,
    InfeasibleGraphError,
    default_config,
    generate_dataset,
    run_replications,
)

log = logging.getLogger("isocal")

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_INFEASIBLE = 0, 1, 2, 3


class _Exit(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def n_workers() -> int:
    raw = os.environ.get("ISOCAL_THREADS", "1").strip() or "1"
    try:
        n = int(raw)
    except ValueError:
        raise _Exit(EXIT_INVALID, f"ISOCAL_THREADS must be an integer, got {raw!r}")
    if n <= 0:
        return os.cpu_count() or 1
    return n


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _scale(text: str) -> float:
    v = float(text)
    if not 0.0 < v <= 1.0:
        raise argparse.ArgumentTypeError("scale must lie in (0, 1]")
    return v


def _load(path: str):
    try:
        d = load_dataset(path)
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as e:
        raise _Exit(EXIT_IO, f"cannot read {path}: {e}")
    except DatasetFormatError as e:
        raise _Exit(EXIT_INVALID, f"{path}: {e}")
    violations = validate_dataset(d)
    if violations:
        for v in violations:
            print(v, file=sys.stderr)
        raise _Exit(EXIT_INVALID, f"{path}: {len(violations)} violation(s)")
    return d


def _write_single(path: str, fields, rows, meta=None) -> None:
    text = json_text(fields, rows, meta) if path.endswith(".json") else csv_text(fields, rows)
    atomic_write(path, text)


def cmd_calibrate(args) -> int:
    d = _load(args.input)
    if args.scores == "mean":
        scores = d.mean_scores()
    else:
        scores = holdout_split(d, "one", args.seed).estimator
    result = calibrate(d, scores, args.strategy)
    rows = [
        {
            "paper_id": p,
            "raw": float(scores[p]),
            "isotonic": result.scores[p],
            "contributors": ";".join(result.contributors[p]),
            "seed": args.seed,
        }
        for p in sorted(scores)
    ]
    fields = ("paper_id", "raw", "isotonic", "contributors", "seed")
    _write_single(args.output, fields, rows, {"strategy": result.strategy.value, "scores": args.scores})
    return EXIT_OK


def cmd_evaluate(args) -> int:
    d = _load(args.input)
    ev = evaluate_strategies(
        d, args.mode, args.seeds, args.strategies, population=args.population, n_jobs=n_workers()
    )
    out = Path(args.output_dir)
    meta = {"mode": args.mode, "seeds": list(ev.seeds), "population": args.population}
    reports = [ev.reports[(s, seed)] for seed in ev.seeds for s in ev.pooled]
    reports += list(ev.pooled.values())
    write_table(out / "summary", SUMMARY_FIELDS, summary_rows(reports), meta)
    for name in ev.pooled:
        rows = [row for seed in ev.seeds for row in per_paper_rows(ev.reports[(name, seed)])]
        write_table(out / f"per_paper_{name}", PER_PAPER_FIELDS, rows, meta)
    group_rows = []
    for name, rep in ev.pooled.items():
        for key in GroupKey:
            for g in group_by(d, rep, key):
                group_rows.append({
                    "strategy": name, "group_by": key.value, "key": g.key, "n": g.n,
                    "raw_mse": g.raw_mse, "iso_mse": g.iso_mse, "mse_improvement_pct": g.mse_improvement,
                    "raw_mae": g.raw_mae, "iso_mae": g.iso_mae, "mae_improvement_pct": g.mae_improvement,
                })
    group_fields = ("strategy", "group_by", "key", "n", "raw_mse", "iso_mse", "mse_improvement_pct",
                    "raw_mae", "iso_mae", "mae_improvement_pct")
    write_table(out / "groups", group_fields, group_rows, meta)
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = default_config(args.kind, args.scale, seed=args.seed)
    seeds = [args.seed + i for i in range(args.replications)]
    try:
        dataset = generate_dataset(cfg, seed=args.seed)
        rep = run_replications(args.kind, cfg, seeds, n_jobs=n_workers())
    except InfeasibleGraphError as e:
        raise _Exit(EXIT_INFEASIBLE, f"{e}; realized tails {e.realized}")
    out = Path(args.output_dir)
    meta = {"kind": args.kind, "scale": args.scale, "seeds": seeds}
    dump_dataset(dataset, out / "dataset.json")
    reports = [run.reports[s] for run in rep.runs for s in rep.pooled] + list(rep.pooled.values())
    write_table(out / "summary", SUMMARY_FIELDS, summary_rows(reports), meta)
    for name in rep.pooled:
        rows = [row for run in rep.runs for row in per_paper_rows(run.reports[name])]
        write_table(out / f"per_paper_{name}", PER_PAPER_FIELDS, rows, meta)
    if rep.pooled_baseline is not None:
        base = [run.baseline[s] for run in rep.runs for s in rep.pooled] + list(rep.pooled_baseline.values())
        write_table(out / "baseline_summary", SUMMARY_FIELDS, summary_rows(base), meta)
    return EXIT_OK


def cmd_residuals(args) -> int:
    d = _load(args.input)
    plan = emergency_plan(d, args.strategy)
    _write_single(args.output, PLAN_FIELDS, plan_rows(plan), {"strategy": args.strategy})
    return EXIT_OK


def cmd_perturb(args) -> int:
    d = _load(args.input)
    try:
        rows = perturbation_study(d, args.fractions, args.k, args.seeds, args.strategy)
    except ValueError as e:
        raise _Exit(EXIT_INVALID, str(e))
    fields = ("fraction", "k", "mean_overlap", "sd_overlap", "seeds", "overlaps")
    out = [
        {
            "fraction": r.fraction, "k": r.k, "mean_overlap": r.mean, "sd_overlap": r.sd,
            "seeds": ";".join(map(str, r.seeds)), "overlaps": ";".join(map(str, r.overlaps)),
        }
        for r in rows
    ]
    _write_single(args.output, fields, out, {"strategy": args.strategy})
    return EXIT_OK


def cmd_validate(args) -> int:
    d = _load(args.input)
    print(f"{args.input}: {len(d.papers)} papers, {len(d.authors)} authors, valid")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    strategies = [s.value for s in Strategy]
    parser = argparse.ArgumentParser(prog="isocal", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="calibrate review scores with author rankings")
    p.add_argument("--input", required=True)
    p.add_argument("--strategy", choices=strategies, default="simple")
    p.add_argument("--scores", choices=["holdout", "mean"], default="mean")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("evaluate", help="holdout evaluation against held-out reviews")
    p.add_argument("--input", required=True)
    p.add_argument("--mode", choices=["one", "two"], default="one")
    p.add_argument("--seeds", type=_int_list, default=[0])
    p.add_argument("--strategies", type=lambda s: s.split(","), default=strategies)
    p.add_argument("--population", choices=["ranked", "all"], default="ranked")
    p.add_argument("--output-dir", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("simulate", help="run a synthetic experiment")
    p.add_argument("--kind", choices=[k.value for k in ExperimentKind], required=True)
    p.add_argument("--scale", type=_scale, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replications", type=int, default=1)
    p.add_argument("--output-dir", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("residuals", help="emergency-reviewer plan from isotonic residuals")
    p.add_argument("--input", required=True)
    p.add_argument("--strategy", choices=strategies, default="simple")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_residuals)

    p = sub.add_parser("perturb", help="top-k overlap under reversed rankings")
    p.add_argument("--input", required=True)
    p.add_argument("--fractions", type=_float_list, default=[0.0])
    p.add_argument("--seeds", type=_int_list, default=[0])
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--strategy", choices=strategies, default="greedy")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("validate", help="check a dataset file")
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except _Exit as e:
        print(f"isocal: {e}", file=sys.stderr)
        return e.code


if __name__ == "__main__":
    sys.exit(main())
