"""Monte Carlo simulation of the measurement record behind a criterion.

Each Hermitian part is measured projectively in its eigenbasis on the
post-loss state, one observable per shot.  Operators are represented in a
Fock space padded by the word length so that the sampled distribution has
exactly the analytic mean and variance.  Every trial and every observable
owns an independent random stream spawned from one seed.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .criteria import CriterionMatrix, CriterionSpec, adjugate, determinant
from .exceptions import InsufficientSamplesError, NumericalError
from .fock import FockConfig, TwoModeState, apply_thermal_loss_channel
from .moments import HermitianPart
from .noise import IDEAL, NoiseModel
from .stats import (AllocationPlan, ErrorBudget, OperatorKey, delta_det_general,
                    operator_part, round_counts)
from .words import mode_matrix

DEGENERACY_TOL = 1e-9
PROB_TOL = 1e-9


@dataclass(frozen=True)
class SpectralDistribution:
    """Distinct eigenvalues of an observable and their Born probabilities."""

    values: np.ndarray
    probs: np.ndarray

    def draw(self, rng: np.random.Generator, count: int) -> np.ndarray:
        if count == 0:
            return np.empty(0)
        return self.values[rng.choice(len(self.values), size=count, p=self.probs)]

    @property
    def mean(self) -> float:
        return float(self.values @ self.probs)

    @property
    def variance(self) -> float:
        return float(((self.values - self.mean) ** 2) @ self.probs)


def _padded_operator(part: HermitianPart, dim_a: int, dim_b: int) -> tuple[np.ndarray, int, int]:
    pad_a = dim_a + len(part.word.a)
    pad_b = dim_b + len(part.word.b)
    op = np.zeros((pad_a * pad_b, pad_a * pad_b), dtype=complex)
    for coef, word in part.polynomial():
        if coef != 0:
            op += coef * np.kron(mode_matrix(word.a, pad_a), mode_matrix(word.b, pad_b))
    return op, pad_a, pad_b


def _embed(rho: np.ndarray, dims: tuple[int, int], pads: tuple[int, int]) -> np.ndarray:
    da, db = dims
    pa, pb = pads
    r4 = np.zeros((pa, pb, pa, pb), dtype=complex)
    r4[:da, :db, :da, :db] = rho.reshape(da, db, da, db)
    return r4.reshape(pa * pb, pa * pb)


def spectral_distribution(state: TwoModeState, part: HermitianPart) -> SpectralDistribution:
    """Outcome distribution of measuring ``part`` on ``state``.

    Eigenvalues closer than a small relative tolerance are merged so the
    distribution depends only on the spectral projectors.
    """
    if part.is_constant:
        value = part.polynomial()[0][0].real
        return SpectralDistribution(np.array([value]), np.array([1.0]))
    da, db = state.config.dim_a, state.config.dim_b
    op, pa, pb = _padded_operator(part, da, db)
    evals, evecs = np.linalg.eigh(op)
    rho = _embed(state.rho, (da, db), (pa, pb))
    probs = np.real(np.einsum("ik,ij,jk->k", evecs.conj(), rho, evecs))
    probs = np.clip(probs, 0.0, None)
    total = probs.sum()
    if abs(total - 1.0) > PROB_TOL:
        raise NumericalError(f"Born probabilities sum to {total}")
    probs = probs / total
    scale = max(1.0, float(np.max(np.abs(evals))))
    values, weights = [], []
    for lam, p in zip(evals, probs):
        if values and abs(lam - values[-1][-1]) <= DEGENERACY_TOL * scale:
            values[-1].append(lam)
            weights[-1] += p
        else:
            values.append([lam])
            weights.append(p)
    vals = np.array([np.mean(v) for v in values])
    w = np.array(weights)
    keep = w > 0
    return SpectralDistribution(vals[keep], w[keep] / w[keep].sum())


@dataclass(frozen=True)
class SampleSet:
    key: OperatorKey
    outcomes: np.ndarray

    @property
    def count(self) -> int:
        return len(self.outcomes)

    @property
    def mean(self) -> float:
        return float(np.mean(self.outcomes))

    @property
    def variance(self) -> float:
        """Unbiased sample variance (divisor ``count - 1``)."""
        if self.count < 2:
            raise InsufficientSamplesError(f"{self.key}: {self.count} sample(s), need 2")
        return float(np.var(self.outcomes, ddof=1))


def sample_operator(state: TwoModeState, part: HermitianPart, count: int, seed,
                    key: OperatorKey = (0, 0, 0)) -> SampleSet:
    """``count`` independent projective outcomes of ``part`` on ``state``."""
    if count < 2:
        raise InsufficientSamplesError("count must be >= 2")
    rng = np.random.default_rng(seed)
    return SampleSet(key, spectral_distribution(state, part).draw(rng, count))


@dataclass(frozen=True)
class EmpiricalMatrix:
    """Criterion matrix assembled from sample means.

    Entries with no samples take the values in ``fixed`` (known constants or
    zero-weight observables).
    """

    spec: CriterionSpec
    sample_sets: Mapping[OperatorKey, SampleSet]
    fixed: Mapping[OperatorKey, float]

    def value(self, key: OperatorKey) -> float:
        s = self.sample_sets.get(key)
        return s.mean if s is not None and s.count else self.fixed[key]

    @property
    def matrix(self) -> CriterionMatrix:
        idx = self.spec.retained_indices
        d = len(idx)
        out = np.empty((d, d), dtype=complex)
        for a, i in enumerate(idx):
            out[a, a] = self.value((i, i, 0))
            for b in range(a + 1, d):
                j = idx[b]
                v = self.value((i, j, 0)) + 1j * self.value((i, j, 1))
                out[a, b] = v
                out[b, a] = np.conj(v)
        return CriterionMatrix(self.spec, out)


def empirical_budget(em: EmpiricalMatrix) -> ErrorBudget:
    """Variances from the samples alone; unsampled entries count as exact."""
    variances = {}
    for key in em.fixed:
        s = em.sample_sets.get(key)
        variances[key] = s.variance if s is not None and s.count else 0.0
    matrix = em.matrix
    return ErrorBudget(em.spec, matrix, determinant(matrix), variances, adjugate(matrix))


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    counts: Mapping[OperatorKey, int]
    means: Mapping[OperatorKey, float]
    variances: Mapping[OperatorKey, float]
    det_value: float
    delta_det: float


class MonteCarloExperiment:
    """Repeated simulated experiments for one criterion, state, noise and plan.

    The post-loss state is produced once with the numeric channel, and the
    spectral distribution of each observable is cached.
    """

    def __init__(self, state: TwoModeState, plan: AllocationPlan,
                 noise: Optional[NoiseModel] = None, minimum: int = 2):
        self.noise = IDEAL if noise is None else noise
        self.plan = plan
        self.budget = plan.budget
        self.spec = self.budget.spec
        self.state = apply_thermal_loss_channel(state, self.noise)
        self.counts = round_counts(plan, minimum)
        self.keys = sorted(self.counts)
        self.fixed = {k: self.budget.mean(k) for k in self.keys}
        self.distributions = {k: spectral_distribution(self.state, operator_part(k))
                              for k in self.keys if self.counts[k] > 0}

    def trial(self, seed_seq: np.random.SeedSequence, index: int = 0) -> TrialRecord:
        # stateless equivalent of seed_seq.spawn(): repeat calls give the same streams
        streams = [np.random.SeedSequence(seed_seq.entropy, spawn_key=seed_seq.spawn_key + (k,))
                   for k in range(len(self.keys))]
        sets = {}
        for key, ss in zip(self.keys, streams):
            n = self.counts[key]
            if n:
                sets[key] = SampleSet(key, self.distributions[key].draw(np.random.default_rng(ss), n))
        em = EmpiricalMatrix(self.spec, sets, self.fixed)
        budget = empirical_budget(em)
        return TrialRecord(index, dict(self.counts),
                           {k: em.value(k) for k in self.keys},
                           dict(budget.variances), budget.det_value,
                           delta_det_general(budget, self.counts))

    def run(self, n_trials: int, seed: int = 0, threads: int = 1) -> list[TrialRecord]:
        children = np.random.SeedSequence(seed).spawn(n_trials)
        if threads <= 1:
            return [self.trial(ss, i) for i, ss in enumerate(children)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(self.trial, children, range(n_trials)))


def empirical_determinant_trial(state: TwoModeState, plan: AllocationPlan,
                                noise: Optional[NoiseModel] = None,
                                seed=0) -> tuple[float, float]:
    """One simulated experiment: empirical determinant and its empirical standard error."""
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    rec = MonteCarloExperiment(state, plan, noise).trial(seq)
    return rec.det_value, rec.delta_det


def write_transcript(records: Sequence[TrialRecord], path, seed: int) -> None:
    """CSV audit trail: one row per trial with per-observable counts, means, variances."""
    if not records:
        raise ValueError("no trials to write")
    keys = sorted(records[0].counts)
    tag = lambda k: f"{k[0]}_{k[1]}_{'im' if k[2] else 're'}"
    header = ["trial", "seed"]
    for k in keys:
        header += [f"count_{tag(k)}", f"mean_{tag(k)}", f"var_{tag(k)}"]
    header += ["det", "delta_det"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for r in records:
            row = [r.trial, seed]
            for k in keys:
                row += [r.counts[k], repr(r.means[k]), repr(r.variances[k])]
            row += [repr(r.det_value), repr(r.delta_det)]
            writer.writerow(row)
