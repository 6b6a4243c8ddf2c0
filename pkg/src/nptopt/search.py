"""Three-step criterion search: filter, evaluate under noise and budget, rank.

1. Keep the criteria whose ideal determinant is negative at any grid point.
2. For every grid point, noise setting and budget compute det, Gamma,
   the standard error and the optimal allocation.
3. Group criteria with identical (det, Gamma) and rank the groups by
   confidence.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .config import StateGrid, SweepConfig
from .criteria import (CriterionSpec, MomentTable, build_matrix, determinant,
                       enumerate_specs, is_negative, label, parse_spec)
from .exceptions import DegenerateError, TruncationError
from .fock import (FockConfig, TwoModeState, default_config, prepare_subtracted_tmsv,
                   prepare_tmsv, prepare_two_mode_cat)
from .noise import NoiseModel
from .sampler import MonteCarloExperiment, write_transcript
from .stats import confidence, error_budget, optimal_allocation

DEDUP_TOL = 1e-10

CSV_COLUMNS = ("param", "eta", "n_bar", "m_tot", "criterion", "spec", "d", "n", "det",
               "gamma", "delta_det", "confidence", "decision", "rank", "group")


def make_state(grid: StateGrid, param: float) -> TwoModeState:
    """State of the configured family at one grid value (``zeta`` or ``alpha``)."""
    config = None
    if grid.dim is not None:
        config = FockConfig.square(grid.dim, grid.tail_tolerance)
    if grid.family == "tmsv":
        if config is None:
            config = default_config("tmsv", zeta=param, tail_tolerance=grid.tail_tolerance)
        return prepare_tmsv(param, config)
    if grid.family == "subtracted_tmsv":
        if config is None:
            config = default_config("subtracted_tmsv", zeta=param, n_sub=grid.n_sub,
                                    m_sub=grid.m_sub, tail_tolerance=grid.tail_tolerance)
        return prepare_subtracted_tmsv(param, grid.n_sub, grid.m_sub, config)
    if grid.family == "cat":
        if config is None:
            config = default_config("cat", alpha=param, tail_tolerance=grid.tail_tolerance)
        return prepare_two_mode_cat(param, config)
    raise ValueError(f"unknown family {grid.family!r}")


def _pmap(fn, items, threads: int) -> list:
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def negative_specs(state: TwoModeState, specs: Sequence[CriterionSpec],
                   noise: Optional[NoiseModel] = None) -> list[CriterionSpec]:
    """Criteria whose determinant on ``state`` is negative beyond round-off."""
    table = MomentTable(state, noise)
    out = []
    for spec in specs:
        try:
            m = build_matrix(state, spec, table=table)
        except TruncationError as exc:
            raise TruncationError(f"criterion {label(spec)}: {exc}") from exc
        if is_negative(m, determinant(m)):
            out.append(spec)
    return out


def step1_filter(states: Sequence[TwoModeState], specs: Sequence[CriterionSpec],
                 threads: int = 1) -> list[CriterionSpec]:
    """Keep criteria negative on at least one state (no loss, exact moments)."""
    hits = _pmap(lambda s: set(negative_specs(s, specs)), states, threads)
    keep = set().union(*hits) if hits else set()
    return [s for s in specs if s in keep]


@dataclass(frozen=True)
class EvaluationRow:
    param: float
    eta: float
    n_bar: float
    m_tot: float
    spec: CriterionSpec
    det_value: float
    gamma: float
    delta_det: float
    confidence: float
    decision: str
    deterministic: bool
    counts: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def point(self) -> tuple:
        return (self.param, self.eta, self.n_bar, self.m_tot)

    @property
    def z_score(self) -> float:
        """``-det sqrt(M) / Gamma``; monotone in confidence but free of saturation."""
        if self.gamma == 0.0:
            return -math.copysign(math.inf, self.det_value) if self.det_value else 0.0
        return -self.det_value * math.sqrt(self.m_tot) / self.gamma


def evaluate_point(state: TwoModeState, param: float, specs: Sequence[CriterionSpec],
                   noise: NoiseModel, m_tots: Sequence[float],
                   threshold: float = 0.95) -> list[EvaluationRow]:
    table = MomentTable(state, noise)
    rows = []
    for spec in specs:
        budget = error_budget(state, spec, noise, table=table)
        for m_tot in m_tots:
            try:
                plan = optimal_allocation(budget, m_tot)
                gamma, counts = plan.gamma, dict(plan.counts)
            except DegenerateError:
                gamma, counts = 0.0, {k: 0.0 for k in budget.variances}
            try:
                res = confidence(budget.det_value, gamma, m_tot, threshold)
                conf, dd, decision, det_flag = res.confidence, res.delta_det, res.decision, res.deterministic
            except DegenerateError:
                conf, dd, decision, det_flag = 0.5, 0.0, "insufficient_evidence", True
            rows.append(EvaluationRow(param, noise.eta, noise.n_bar, float(m_tot), spec,
                                      budget.det_value, gamma, dd, conf, decision, det_flag,
                                      counts))
    return rows


def step2_evaluate(states: Sequence[tuple[float, TwoModeState]], specs: Sequence[CriterionSpec],
                   etas: Sequence[float], n_bars: Sequence[float], m_tots: Sequence[float],
                   threshold: float = 0.95, threads: int = 1) -> list[EvaluationRow]:
    """Evaluation table in grid order: param, eta, n_bar, spec, m_tot."""
    if not specs:
        return []
    jobs = [(param, state, NoiseModel(eta, n_bar))
            for param, state in states for eta in etas for n_bar in n_bars]
    chunks = _pmap(lambda job: evaluate_point(job[1], job[0], specs, job[2], m_tots, threshold),
                   jobs, threads)
    return [row for chunk in chunks for row in chunk]


@dataclass(frozen=True)
class RankedEntry:
    rank: int
    group: str
    members: tuple[CriterionSpec, ...]
    row: EvaluationRow


@dataclass(frozen=True)
class PointReport:
    point: tuple
    entries: tuple[RankedEntry, ...]
    verdict: str

    @property
    def best(self) -> Optional[RankedEntry]:
        return self.entries[0] if self.entries else None


@dataclass(frozen=True)
class RankedReport:
    points: tuple[PointReport, ...]

    def at(self, point: tuple) -> PointReport:
        for p in self.points:
            if p.point == point:
                return p
        raise KeyError(point)


def _group(rows: Sequence[EvaluationRow], tol: float) -> list[list[EvaluationRow]]:
    groups: list[list[EvaluationRow]] = []
    for row in sorted(rows, key=lambda r: r.spec.sort_key):
        for g in groups:
            if all(abs(row.det_value - r.det_value) < tol and abs(row.gamma - r.gamma) < tol
                   for r in g):
                g.append(row)
                break
        else:
            groups.append([row])
    return groups


def rank_point(point: tuple, rows: Sequence[EvaluationRow], threshold: float = 0.95,
               tol: float = DEDUP_TOL) -> PointReport:
    """Rank one grid point; identical criteria collapse onto their smallest member."""
    groups = _group(rows, tol)
    groups.sort(key=lambda g: (-g[0].z_score, g[0].spec.sort_key))
    entries = tuple(
        RankedEntry(k + 1, "=".join(label(r.spec) for r in g), tuple(r.spec for r in g), g[0])
        for k, g in enumerate(groups))
    verdict = "insufficient_evidence"
    if entries and entries[0].row.confidence >= threshold:
        verdict = "reject_H0"
    return PointReport(point, entries, verdict)


def step3_rank(rows: Sequence[EvaluationRow], threshold: float = 0.95,
               tol: float = DEDUP_TOL, points: Optional[Sequence[tuple]] = None) -> RankedReport:
    """Per grid point ranking by confidence; ties broken on ``(d, indices)``.

    ``points`` lists grid points to report even when they have no rows.
    """
    by_point: dict[tuple, list[EvaluationRow]] = {}
    for r in rows:
        by_point.setdefault(r.point, []).append(r)
    order = list(points) if points is not None else list(by_point)
    return RankedReport(tuple(rank_point(p, by_point.get(p, []), threshold, tol) for p in order))


# Orchestration -------------------------------------------------------------

@dataclass
class SweepResult:
    specs: list[CriterionSpec]
    rows: list[EvaluationRow]
    report: RankedReport
    truncations: dict


def _points(config: SweepConfig) -> list[tuple]:
    return [(p, e, n, m) for p in config.state.params for e in config.etas
            for n in config.n_bars for m in config.m_tots]


def build_states(config: SweepConfig, threads: int = 1) -> list[tuple[float, TwoModeState]]:
    params = list(config.state.params)
    return list(zip(params, _pmap(lambda p: make_state(config.state, p), params, threads)))


def candidate_specs(config: SweepConfig) -> list[CriterionSpec]:
    b = config.bounds
    return enumerate_specs(b.d_max, b.n_max, b.d_min, b.cross_mode_only)


def execute(config: SweepConfig, threads: int = 1,
            states: Optional[list] = None) -> SweepResult:
    """Full pipeline in memory."""
    if states is None:
        states = build_states(config, threads)
    explicit = config.explicit_specs()
    if explicit is not None:
        specs = explicit
    else:
        specs = step1_filter([s for _, s in states], candidate_specs(config), threads)
    rows = step2_evaluate(states, specs, config.etas, config.n_bars, config.m_tots,
                          config.confidence_threshold, threads)
    report = step3_rank(rows, config.confidence_threshold, points=_points(config))
    truncations = {repr(p): [s.config.dim_a, s.config.dim_b] for p, s in states}
    return SweepResult(specs, rows, report, truncations)


def _fmt(x: float) -> str:
    return repr(float(x))


def report_rows(result: SweepResult) -> list[dict]:
    """Flat records in the fixed CSV column order, one per evaluated criterion."""
    lookup = {(r.point, r.spec): r for r in result.rows}
    out = []
    for pr in result.report.points:
        for entry in pr.entries:
            for spec in entry.members:
                row = lookup[(pr.point, spec)]
                out.append({
                    "param": row.param, "eta": row.eta, "n_bar": row.n_bar, "m_tot": row.m_tot,
                    "criterion": label(spec), "spec": str(spec), "d": spec.d, "n": spec.n,
                    "det": row.det_value, "gamma": row.gamma, "delta_det": row.delta_det,
                    "confidence": row.confidence, "decision": row.decision,
                    "rank": entry.rank, "group": entry.group,
                })
    return out


def to_csv(records: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rec in records:
        writer.writerow([_fmt(rec[c]) if isinstance(rec[c], float) else rec[c] for c in CSV_COLUMNS])
    return buf.getvalue()


def to_json(records: Sequence[dict]) -> str:
    return json.dumps(list(records), indent=1, sort_keys=False) + "\n"


def manifest(config: SweepConfig, result: SweepResult, wall_time: float, extra: dict) -> dict:
    return {
        "tool": "nptopt",
        "version": __version__,
        "config": config.to_dict(),
        "seed": config.seed,
        "surviving_criteria": [label(s) for s in result.specs],
        "truncations": result.truncations,
        "csv_columns": list(CSV_COLUMNS),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "wall_time_s": wall_time,
        **extra,
    }


def run_sweep(config: SweepConfig, out_dir, threads: int = 1, fmt: str = "csv") -> list[str]:
    """Run the pipeline and write results plus a JSON manifest into ``out_dir``.

    Files written by a failed run are removed before the error propagates.
    """
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    t0 = time.perf_counter()
    result = execute(config, threads)
    records = report_rows(result)
    os.makedirs(out_dir, exist_ok=True)
    written: list[str] = []
    try:
        data_path = os.path.join(out_dir, f"{config.name}.{fmt}")
        written.append(data_path)
        with open(data_path, "w", newline="") as fh:
            fh.write(to_csv(records) if fmt == "csv" else to_json(records))
        extra: dict = {"files": [os.path.basename(data_path)]}
        if config.montecarlo.enabled:
            extra["files"] += _montecarlo_files(config, out_dir, written)
        man_path = os.path.join(out_dir, f"{config.name}.manifest.json")
        written.append(man_path)
        with open(man_path, "w") as fh:
            json.dump(manifest(config, result, time.perf_counter() - t0, extra), fh, indent=1)
            fh.write("\n")
    except BaseException:
        for path in written:
            try:
                os.remove(path)
            except OSError:
                pass
        raise
    return written


def _montecarlo_files(config: SweepConfig, out_dir, written: list) -> list[str]:
    """Trial transcripts for the configured criterion at every grid point."""
    spec = parse_spec(config.montecarlo.criterion)
    names = []
    for param in config.state.params:
        state = make_state(config.state, param)
        for eta in config.etas:
            for n_bar in config.n_bars:
                noise = NoiseModel(eta, n_bar)
                budget = error_budget(state, spec, noise)
                for m_tot in config.m_tots:
                    try:
                        plan = optimal_allocation(budget, m_tot)
                    except DegenerateError:
                        continue
                    seed = config.seed + len(names)
                    records = MonteCarloExperiment(state, plan, noise).run(config.montecarlo.trials, seed)
                    name = f"{config.name}.mc.{len(names):04d}.csv"
                    path = os.path.join(out_dir, name)
                    written.append(path)
                    write_transcript(records, path, seed)
                    names.append(name)
    return names
