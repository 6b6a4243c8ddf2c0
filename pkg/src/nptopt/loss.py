"""Analytic propagation of moments through thermal beam-splitter loss.

Each ladder operator is replaced by ``sqrt(eta) x0 + sqrt(1 - eta) xE`` where
``xE`` belongs to an independent thermal bath of occupation ``n_bar``.  A word
then expands into system words times bath strings; the bath strings are
normal ordered and evaluated with ``<e^dag^p e^q> = delta_pq p! n_bar^p``.

Per mode, the expansion is kept symbolic with integer coefficients:
``coef * eta^(s/2) * (1-eta)^(e/2) * poly(n_bar)``, and only turned into a
float when a noise model is supplied.  Both modes expand independently, so a
two-mode word is the product of its two single-mode expansions.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Optional

import numpy as np

from .fock import TwoModeState, expect_factorized, expectation
from .noise import IDEAL, NoiseModel
from .words import Letters, OperatorWord, Polynomial, mode_matrix, runs

__all__ = [
    "NoiseModel",
    "SymbolicMomentExpansion",
    "normal_order",
    "thermal_bath_moment",
    "mode_expansion",
    "lossy_moment_expansion",
    "evaluate_lossy_moment",
    "evaluate_lossy_poly",
    "kappa_t_to_eta",
]


@lru_cache(maxsize=None)
def normal_order(letters: Letters) -> tuple[tuple[int, int, int], ...]:
    """Normal-ordered form of a single-mode string as ``((coef, p, q), ...)``.

    The string equals ``sum coef * e^dag^p e^q``.  Built left to right using
    ``(e^dag^p e^q) e^dag = e^dag^(p+1) e^q + q e^dag^p e^(q-1)``.
    """
    terms: dict[tuple[int, int], int] = {(0, 0): 1}
    for dag in letters:
        nxt: dict[tuple[int, int], int] = defaultdict(int)
        for (p, q), c in terms.items():
            if dag:
                nxt[(p + 1, q)] += c
                if q:
                    nxt[(p, q - 1)] += c * q
            else:
                nxt[(p, q + 1)] += c
        terms = {k: v for k, v in nxt.items() if v}
    return tuple(sorted((c, p, q) for (p, q), c in terms.items()))


@lru_cache(maxsize=None)
def thermal_bath_moment(letters: Letters) -> tuple[int, ...]:
    """Thermal expectation of a bath string as integer coefficients of ``n_bar**k``."""
    poly: dict[int, int] = defaultdict(int)
    for c, p, q in normal_order(letters):
        if p == q:
            poly[p] += c * math.factorial(p)
    if not poly:
        return ()
    top = max(poly)
    return tuple(poly[k] for k in range(top + 1))


@dataclass(frozen=True)
class ModeTerm:
    """``coef * eta^(n_sys/2) * (1-eta)^(n_env/2) * sum_k nbar_poly[k] n_bar^k`` times a system word."""

    system: Letters
    coef: int
    n_sys: int
    n_env: int
    nbar_poly: tuple[int, ...]

    def weight(self, eta: float, n_bar: float) -> float:
        bath = sum(c * n_bar ** k for k, c in enumerate(self.nbar_poly))
        return self.coef * math.sqrt(eta) ** self.n_sys * math.sqrt(1.0 - eta) ** self.n_env * bath


@lru_cache(maxsize=None)
def mode_expansion(letters: Letters) -> tuple[ModeTerm, ...]:
    """Symbolic expansion of a single-mode word under loss.

    Letters inside a run are identical, so choosing ``j`` of a run of ``k`` for
    the system gives ``C(k, j)`` equal terms; the system and bath parts commute.
    """
    blocks = runs(letters)
    terms = []
    for picks in product(*(range(k + 1) for _, k in blocks)):
        sys_letters: list[bool] = []
        env_letters: list[bool] = []
        coef = 1
        for (dag, k), j in zip(blocks, picks):
            coef *= math.comb(k, j)
            sys_letters.extend([dag] * j)
            env_letters.extend([dag] * (k - j))
        bath = thermal_bath_moment(tuple(env_letters))
        if not bath:
            continue
        terms.append(ModeTerm(tuple(sys_letters), coef, len(sys_letters),
                              len(env_letters), bath))
    return tuple(terms)


def _mode_weights(letters: Letters, noise: NoiseModel) -> dict[Letters, float]:
    out: dict[Letters, float] = defaultdict(float)
    for t in mode_expansion(letters):
        out[t.system] += t.weight(noise.eta, noise.n_bar)
    return dict(out)


@dataclass(frozen=True)
class SymbolicMomentExpansion:
    """Post-loss moment as ``sum coef * <system_word>`` on the pre-loss state."""

    terms: tuple[tuple[float, OperatorWord], ...]

    def evaluate(self, state: TwoModeState) -> complex:
        return sum((c * expectation(state, w) for c, w in self.terms), 0j)

    def coefficient(self, word: OperatorWord) -> float:
        return sum(c for c, w in self.terms if w == word)

    def __len__(self) -> int:
        return len(self.terms)


def lossy_moment_expansion(word: OperatorWord, noise: NoiseModel) -> SymbolicMomentExpansion:
    """Expand ``word`` after loss into system words of the pre-loss modes."""
    if noise.is_identity:
        return SymbolicMomentExpansion(((1.0, word),))
    wa = _mode_weights(word.a, noise)
    wb = _mode_weights(word.b, noise)
    terms = []
    for la, ca in sorted(wa.items()):
        for lb, cb in sorted(wb.items()):
            c = ca * cb
            if c != 0.0:
                terms.append((c, OperatorWord(la, lb)))
    return SymbolicMomentExpansion(tuple(terms))


@lru_cache(maxsize=4096)
def _effective_matrix(letters: Letters, noise: NoiseModel, dim: int) -> np.ndarray:
    out = np.zeros((dim, dim))
    for sys_letters, c in _mode_weights(letters, noise).items():
        if c != 0.0:
            out = out + c * mode_matrix(sys_letters, dim)
    out.setflags(write=False)
    return out


def evaluate_lossy_moment(state: TwoModeState, word: OperatorWord,
                          noise: Optional[NoiseModel] = None) -> complex:
    """Moment of ``word`` on ``state`` after loss ``noise``.

    The expansion of each mode collapses into one effective matrix, so the
    cost is one two-mode contraction regardless of the number of terms.
    """
    noise = IDEAL if noise is None else noise
    if noise.is_identity:
        return expectation(state, word)
    mat_a = _effective_matrix(word.a, noise, state.config.dim_a)
    mat_b = _effective_matrix(word.b, noise, state.config.dim_b)
    return expect_factorized(state, mat_a, mat_b)


def evaluate_lossy_poly(state: TwoModeState, poly: Polynomial,
                        noise: Optional[NoiseModel] = None) -> complex:
    return sum((c * evaluate_lossy_moment(state, w, noise) for c, w in poly if c != 0), 0j)


def kappa_t_to_eta(kappa: float, t: float) -> float:
    """Transmissivity for amplitude damping rate ``kappa`` over time ``t``: ``exp(-2 kappa t)``."""
    if kappa < 0 or t < 0:
        raise ValueError("kappa and t must be nonnegative")
    return math.exp(-2.0 * kappa * t)
