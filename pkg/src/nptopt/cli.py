"""Command line interface.

Exit codes: 0 success, 2 configuration error, 3 truncation or numerical
error, 4 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import os
import sys
from typing import Optional, Sequence

import numpy as np

from .config import SweepConfig, load_config
from .criteria import enumerate_specs, label, named_catalog, parse_spec
from .exceptions import ConfigError, DegenerateError, NPTError
from .noise import NoiseModel
from .sampler import MonteCarloExperiment, write_transcript
from .search import (CSV_COLUMNS, build_states, candidate_specs, execute, make_state,
                     report_rows, run_sweep, step1_filter, step2_evaluate)
from .stats import error_budget, optimal_allocation

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


def _table(records: list[dict], columns: Sequence[str], fmt: str) -> str:
    if fmt == "json":
        return json.dumps([{c: r[c] for c in columns} for r in records], indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in records:
        w.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in columns])
    return buf.getvalue()


def _emit(text: str, args, stem: str) -> None:
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, f"{stem}.{args.format}")
        with open(path, "w", newline="") as fh:
            fh.write(text)
        print(path)
    else:
        sys.stdout.write(text)


def _config(args, required: bool = True) -> Optional[SweepConfig]:
    if args.config is None:
        if required:
            raise ConfigError(f"'{args.command}' needs --config")
        return None
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    return cfg


def cmd_catalog(args) -> int:
    recs = [{"name": c.name, "spec": str(c.spec), "d": c.spec.d, "n": c.spec.n, "note": c.note}
            for c in named_catalog()]
    _emit(_table(recs, ["name", "spec", "d", "n", "note"], args.format), args, "catalog")
    return EXIT_OK


def cmd_enumerate(args) -> int:
    cfg = _config(args, required=False)
    if cfg is not None:
        b = cfg.bounds
        d_min, d_max, n_max, cross = b.d_min, b.d_max, b.n_max, b.cross_mode_only
    else:
        d_min, d_max, n_max, cross = args.d_min, args.d_max, args.n_max, args.cross_mode_only
    if min(d_min, d_max, n_max) < 1 or d_max < d_min:
        raise ConfigError("bounds must satisfy 1 <= d_min <= d_max and n_max >= 1")
    specs = enumerate_specs(d_max, n_max, d_min, cross)
    recs = [{"criterion": label(s), "spec": str(s), "d": s.d, "n": s.n} for s in specs]
    _emit(_table(recs, ["criterion", "spec", "d", "n"], args.format), args, "enumerate")
    return EXIT_OK


def cmd_filter(args) -> int:
    cfg = _config(args)
    states = [s for _, s in build_states(cfg, args.threads)]
    specs = step1_filter(states, candidate_specs(cfg), args.threads)
    recs = [{"criterion": label(s), "spec": str(s), "d": s.d, "n": s.n} for s in specs]
    _emit(_table(recs, ["criterion", "spec", "d", "n"], args.format), args, "filter")
    return EXIT_OK


def _specs_for(cfg: SweepConfig, states, threads: int):
    explicit = cfg.explicit_specs()
    if explicit is not None:
        return explicit
    return step1_filter([s for _, s in states], candidate_specs(cfg), threads)


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    states = build_states(cfg, args.threads)
    specs = _specs_for(cfg, states, args.threads)
    rows = step2_evaluate(states, specs, cfg.etas, cfg.n_bars, cfg.m_tots,
                          cfg.confidence_threshold, args.threads)
    recs = [{"param": r.param, "eta": r.eta, "n_bar": r.n_bar, "m_tot": r.m_tot,
             "criterion": label(r.spec), "spec": str(r.spec), "d": r.spec.d, "n": r.spec.n,
             "det": r.det_value, "gamma": r.gamma, "delta_det": r.delta_det,
             "confidence": r.confidence, "decision": r.decision} for r in rows]
    _emit(_table(recs, list(CSV_COLUMNS[:-2]), args.format), args, "evaluate")
    return EXIT_OK


def cmd_rank(args) -> int:
    cfg = _config(args)
    result = execute(cfg, args.threads)
    recs = report_rows(result)
    verdicts = {p.point: p.verdict for p in result.report.points}
    for r in recs:
        r["verdict"] = verdicts[(r["param"], r["eta"], r["n_bar"], r["m_tot"])]
    empty = [p for p in result.report.points if not p.entries]
    for p in empty:
        recs.append({"param": p.point[0], "eta": p.point[1], "n_bar": p.point[2],
                     "m_tot": p.point[3], **{c: "" for c in CSV_COLUMNS[4:]},
                     "verdict": p.verdict})
    _emit(_table(recs, list(CSV_COLUMNS) + ["verdict"], args.format), args, "rank")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config(args)
    out = args.out or "."
    for path in run_sweep(cfg, out, args.threads, args.format):
        print(path)
    return EXIT_OK


def cmd_montecarlo(args) -> int:
    cfg = _config(args)
    spec = parse_spec(cfg.montecarlo.criterion)
    recs = []
    run = 0
    for param in cfg.state.params:
        state = make_state(cfg.state, param)
        for eta in cfg.etas:
            for n_bar in cfg.n_bars:
                noise = NoiseModel(eta, n_bar)
                budget = error_budget(state, spec, noise)
                for m_tot in cfg.m_tots:
                    try:
                        plan = optimal_allocation(budget, m_tot)
                    except DegenerateError:
                        continue
                    seed = cfg.seed + run
                    trials = MonteCarloExperiment(state, plan, noise).run(
                        cfg.montecarlo.trials, seed, args.threads)
                    dets = np.array([t.det_value for t in trials])
                    predicted = plan.gamma / np.sqrt(m_tot)
                    recs.append({
                        "param": param, "eta": eta, "n_bar": n_bar, "m_tot": m_tot,
                        "criterion": label(spec), "trials": len(trials), "seed": seed,
                        "det": budget.det_value, "mc_mean": float(dets.mean()),
                        "mc_std": float(dets.std(ddof=1)), "delta_det": float(predicted),
                        "std_ratio": float(dets.std(ddof=1) / predicted),
                        "mc_fraction_negative": float(np.mean(dets < 0)),
                    })
                    if args.out:
                        os.makedirs(args.out, exist_ok=True)
                        write_transcript(trials, os.path.join(
                            args.out, f"{cfg.name}.mc.{run:04d}.csv"), seed)
                    run += 1
    cols = ["param", "eta", "n_bar", "m_tot", "criterion", "trials", "seed", "det", "mc_mean",
            "mc_std", "delta_det", "std_ratio", "mc_fraction_negative"]
    _emit(_table(recs, cols, args.format), args, f"{cfg.name}.montecarlo")
    return EXIT_OK


COMMANDS = {
    "enumerate": (cmd_enumerate, "list criteria within the search bounds"),
    "filter": (cmd_filter, "keep criteria negative on the ideal state grid"),
    "evaluate": (cmd_evaluate, "determinant, Gamma and confidence under loss and budget"),
    "rank": (cmd_rank, "rank deduplicated criteria at every grid point"),
    "sweep": (cmd_sweep, "full pipeline to CSV/JSON plus a run manifest"),
    "montecarlo": (cmd_montecarlo, "simulate measurement records and compare spreads"),
    "catalog": (cmd_catalog, "print the named criteria"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML sweep configuration")
    common.add_argument("--out", metavar="DIR", help="output directory (default: stdout)")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--threads", type=int, default=1, metavar="N")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    parser = argparse.ArgumentParser(
        prog="nptopt", description="Rank moment-matrix entanglement criteria under loss and "
                                   "finite measurement budgets.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        if name == "enumerate":
            p.add_argument("--d-min", type=int, default=1)
            p.add_argument("--d-max", type=int, default=2)
            p.add_argument("--n-max", type=int, default=2)
            p.add_argument("--cross-mode-only", action="store_true")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command][0](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except np.linalg.LinAlgError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (KeyError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NPTError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
