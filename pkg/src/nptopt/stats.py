"""Standard error of criterion determinants, optimal measurement allocation, confidence.

Each upper-triangle element ``A_ij`` is estimated from the Hermitian parts
``B_ij0`` (real) and ``B_ij1`` (imaginary).  To first order the determinant's
variance is ``sum_k w_k**2 Var_k / M_k`` with weights ``|adj_ii|`` on the
diagonal and ``2|Re adj_ij|``, ``2|Im adj_ij|`` off it.  Minimizing under a
fixed budget gives ``M_k ∝ w_k sigma_k`` and a standard error
``Gamma / sqrt(M_tot)`` with ``Gamma = sum_k w_k sigma_k``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .criteria import (CriterionMatrix, CriterionSpec, MomentTable, adjugate,
                       build_matrix, determinant)
from .exceptions import AllocationError, DegenerateError
from .fock import TwoModeState
from .moments import HermitianPart, matrix_element_word, variance_of_part
from .noise import IDEAL, NoiseModel

OperatorKey = tuple[int, int, int]  # (i, j, p) with ordinals i <= j and part p


def operator_keys(spec: CriterionSpec) -> list[OperatorKey]:
    """Measured observables: ``p = 0`` on the diagonal, both parts above it."""
    idx = spec.retained_indices
    keys = []
    for a, i in enumerate(idx):
        keys.append((i, i, 0))
        for j in idx[a + 1:]:
            keys.append((i, j, 0))
            keys.append((i, j, 1))
    return keys


def operator_part(key: OperatorKey) -> HermitianPart:
    i, j, p = key
    return HermitianPart(matrix_element_word(i, j), p)


@dataclass(frozen=True)
class ErrorBudget:
    spec: CriterionSpec
    matrix: CriterionMatrix
    det_value: float
    variances: Mapping[OperatorKey, float]
    adjugate: np.ndarray

    def weight(self, key: OperatorKey) -> float:
        i, j, p = key
        pos = self.spec.retained_indices.index
        adj = self.adjugate[pos(i), pos(j)]
        if i == j:
            return abs(adj.real)
        return 2.0 * abs(adj.imag if p else adj.real)

    def keys(self) -> list[OperatorKey]:
        return list(self.variances)

    def gamma(self) -> float:
        return float(sum(self.weight(k) * math.sqrt(v) for k, v in self.variances.items()))

    def mean(self, key: OperatorKey) -> float:
        """Analytic expectation of the Hermitian part (post-loss)."""
        i, j, p = key
        pos = self.spec.retained_indices.index
        value = self.matrix.entries[pos(i), pos(j)]
        return float(value.imag if p else value.real)


def error_budget(state: TwoModeState, spec: CriterionSpec,
                 noise: Optional[NoiseModel] = None,
                 table: Optional[MomentTable] = None) -> ErrorBudget:
    """Variances of every measured observable after loss, plus the adjugate."""
    noise = IDEAL if noise is None else noise
    matrix = build_matrix(state, spec, noise, table=table)
    variances = {key: variance_of_part(state, operator_part(key), noise)
                 for key in operator_keys(spec)}
    return ErrorBudget(spec, matrix, determinant(matrix), variances, adjugate(matrix))


@dataclass(frozen=True)
class AllocationPlan:
    counts: Mapping[OperatorKey, float]
    m_tot: float
    gamma: float
    budget: ErrorBudget = field(repr=False)


def optimal_allocation(budget: ErrorBudget, m_tot: float) -> AllocationPlan:
    """Budget split ``M_k = M_tot w_k sigma_k / Gamma``; constants get nothing."""
    if not m_tot > 0:
        raise ValueError(f"m_tot must be positive, got {m_tot}")
    if all(v == 0.0 for v in budget.variances.values()):
        raise DegenerateError("all variances vanish; the determinant is deterministic")
    terms = {k: budget.weight(k) * math.sqrt(v) for k, v in budget.variances.items()}
    gamma = float(sum(terms.values()))
    if gamma == 0.0:
        raise DegenerateError("every fluctuating observable has zero adjugate weight")
    counts = {k: m_tot * t / gamma for k, t in terms.items()}
    return AllocationPlan(counts, float(m_tot), gamma, budget)


def delta_det(plan: AllocationPlan) -> float:
    return plan.gamma / math.sqrt(plan.m_tot)


def delta_det_general(budget: ErrorBudget, counts: Mapping[OperatorKey, float]) -> float:
    """Propagated standard error of the determinant for an arbitrary allocation."""
    total = 0.0
    for key, var in budget.variances.items():
        w = budget.weight(key)
        if w == 0.0 or var == 0.0:
            continue
        m = counts.get(key, 0.0)
        if not m > 0:
            raise AllocationError(f"observable {key} has variance {var:.3g} but no measurements")
        total += w * w * var / m
    return math.sqrt(total)


def round_counts(plan: AllocationPlan, minimum: int = 2) -> dict[OperatorKey, int]:
    """Integer counts by largest remainder, at least ``minimum`` per fluctuating observable."""
    m_tot = int(round(plan.m_tot))
    need = [k for k, c in plan.counts.items() if c > 0]
    if m_tot < minimum * len(need):
        raise AllocationError(f"budget {m_tot} cannot give {minimum} shots to {len(need)} observables")
    out = {k: int(math.floor(c)) for k, c in plan.counts.items()}
    spare = m_tot - sum(out.values())
    by_remainder = sorted(plan.counts, key=lambda k: (-(plan.counts[k] - out[k]), k))
    for k in by_remainder[:spare]:
        out[k] += 1
    for k in need:
        while out[k] < minimum:
            donor = max((d for d in need if out[d] > minimum), key=lambda d: (out[d], d))
            out[donor] -= 1
            out[k] += 1
    return out


def normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


@dataclass(frozen=True)
class HypothesisResult:
    det_value: float
    delta_det: float
    confidence: float
    decision: str
    confidence_threshold: float = 0.95
    deterministic: bool = False


REJECT = "reject_H0"
INSUFFICIENT = "insufficient_evidence"


def confidence(det_value: float, gamma: float, m_tot: float,
               threshold: float = 0.95) -> HypothesisResult:
    """Probability that the determinant is negative given the normal sampling model.

    Equals ``Phi(-det sqrt(M_tot) / Gamma)``: 0.5 at ``det = 0`` and above 0.5
    for negative determinants.
    """
    if gamma < 0 or not m_tot > 0:
        raise ValueError("gamma must be >= 0 and m_tot > 0")
    if gamma == 0.0:
        if det_value == 0.0:
            raise DegenerateError("zero determinant with zero spread has no confidence level")
        conf = 1.0 if det_value < 0 else 0.0
        return HypothesisResult(det_value, 0.0, conf, REJECT if conf >= threshold else INSUFFICIENT,
                                threshold, deterministic=True)
    spread = gamma / math.sqrt(m_tot)
    conf = normal_cdf(-det_value / spread)
    return HypothesisResult(det_value, spread, conf,
                            REJECT if conf >= threshold else INSUFFICIENT, threshold)


@dataclass(frozen=True)
class CriterionEvaluation:
    spec: CriterionSpec
    det_value: float
    gamma: float
    result: HypothesisResult
    plan: Optional[AllocationPlan]


def evaluate_criterion(state: TwoModeState, spec: CriterionSpec,
                       noise: Optional[NoiseModel] = None, m_tot: float = 1000.0,
                       threshold: float = 0.95,
                       table: Optional[MomentTable] = None) -> CriterionEvaluation:
    """Determinant, Gamma, optimal plan and confidence for one criterion."""
    budget = error_budget(state, spec, noise, table=table)
    try:
        plan = optimal_allocation(budget, m_tot)
        gamma = plan.gamma
    except DegenerateError:
        plan, gamma = None, 0.0
    result = confidence(budget.det_value, gamma, m_tot, threshold)
    return CriterionEvaluation(spec, budget.det_value, gamma, result, plan)
