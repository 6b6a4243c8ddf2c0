"""Criterion submatrices of the moment matrix: enumeration, evaluation, determinants.

A criterion keeps the rows and columns listed in ``retained_indices`` (1-based
ordinals of the multi-index ordering).  ``d`` is the number kept and ``n`` the
highest word order appearing in the submatrix.  A negative determinant
certifies entanglement.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Optional, Sequence

import numpy as np

from .exceptions import NumericalError
from .fock import TwoModeState
from .loss import evaluate_lossy_moment
from .moments import (max_ordinal_for_degree, matrix_element_word, ordinal_degree,
                      ordinal_to_multiindex)
from .noise import IDEAL, NoiseModel

NEGATIVITY_RTOL = 1e-12
NEGATIVITY_ATOL = 1e-14
IMAG_TOL = 1e-8


@dataclass(frozen=True, order=True)
class CriterionSpec:
    retained_indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.retained_indices)
        if not idx:
            raise ValueError("a criterion needs at least one retained index")
        if min(idx) < 1:
            raise ValueError(f"ordinals start at 1: {idx}")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError(f"retained indices must be strictly increasing: {idx}")
        object.__setattr__(self, "retained_indices", idx)

    @property
    def d(self) -> int:
        return len(self.retained_indices)

    @property
    def n(self) -> int:
        return 2 * max(ordinal_degree(i) for i in self.retained_indices)

    @property
    def sort_key(self) -> tuple:
        return (self.d, self.retained_indices)

    def involves_both_modes(self) -> bool:
        """True if some element of the submatrix mixes operators of both modes."""
        has_a = any(mi.p + mi.q for mi in map(ordinal_to_multiindex, self.retained_indices))
        has_b = any(mi.r + mi.s for mi in map(ordinal_to_multiindex, self.retained_indices))
        return has_a and has_b

    def __str__(self) -> str:
        return "(" + ",".join(map(str, self.retained_indices)) + ")"


@dataclass(frozen=True)
class CriterionMatrix:
    spec: CriterionSpec
    entries: np.ndarray

    @property
    def d(self) -> int:
        return self.spec.d


@dataclass(frozen=True)
class NamedCriterion:
    name: str
    spec: CriterionSpec
    note: str = ""


_CATALOG = [
    ("D_I", (3, 5), ""),
    ("D_II", (2, 3, 5), ""),
    ("D_III", (2, 3, 4, 5), ""),
    ("D_IV", (1, 3, 5), ""),
    ("D_V", (1, 2, 3, 5), ""),
    ("D_VI", (1, 2, 3, 4, 5), ""),
    ("D_VII", (3, 4, 5), ""),
    ("D_VIII", (1, 3, 4, 5), ""),
    ("E_I", (7, 12), ""),
    ("E_II", (8, 13), ""),
    ("E_III", (8, 15), ""),
    ("E_IV", (10, 14), ""),
    ("E_V", (13, 15), ""),
    ("F_I", (1, 13), "Hillery-Zubairy condition (simplest form)"),
    ("F_II", (2, 13), ""),
    ("F_III", (6, 13), ""),
    ("F_IV", (9, 13), ""),
    ("F_V", (4, 13), ""),
    ("F_VI", (11, 13), ""),
    ("S_III", (1, 5, 13), ""),
]


def named_catalog() -> list[NamedCriterion]:
    return [NamedCriterion(name, CriterionSpec(idx), note) for name, idx, note in _CATALOG]


def lookup(name: str) -> NamedCriterion:
    for item in named_catalog():
        if item.name == name:
            return item
    raise KeyError(f"unknown criterion {name!r}")


def name_of(spec: CriterionSpec) -> Optional[str]:
    for item in named_catalog():
        if item.spec == spec:
            return item.name
    return None


def label(spec: CriterionSpec) -> str:
    return name_of(spec) or str(spec)


def parse_spec(text: str) -> CriterionSpec:
    """Accept a catalog name (``"D_I"``) or an index list (``"(3,5)"``, ``"3,5"``)."""
    text = text.strip()
    if re.fullmatch(r"[A-Z]_[IVX]+", text):
        return lookup(text).spec
    body = text.strip("()[] ")
    try:
        idx = tuple(int(tok) for tok in re.split(r"[,\s]+", body) if tok)
    except ValueError:
        raise ValueError(f"cannot parse criterion {text!r}") from None
    return CriterionSpec(idx)


def enumerate_specs(d_max: int, n_max: int, d_min: int = 1,
                    cross_mode_only: bool = False) -> list[CriterionSpec]:
    """All index subsets with ``d_min <= d <= d_max`` and order ``n <= n_max``.

    Ordered by ``d``, then lexicographically on the index list.
    """
    if d_max < 1 or n_max < 1 or d_min < 1:
        raise ValueError("d_min, d_max and n_max must be >= 1")
    pool = range(1, max_ordinal_for_degree(n_max // 2) + 1)
    out = []
    for d in range(d_min, d_max + 1):
        for idx in combinations(pool, d):
            spec = CriterionSpec(idx)
            if cross_mode_only and not spec.involves_both_modes():
                continue
            out.append(spec)
    return out


class MomentTable:
    """Lazily filled moment matrix for one (state, noise) pair.

    Each upper-triangle element is computed once and shared by every criterion
    drawn from the same state.
    """

    def __init__(self, state: TwoModeState, noise: Optional[NoiseModel] = None):
        self.state = state
        self.noise = IDEAL if noise is None else noise
        self._cache: dict[tuple[int, int], complex] = {}

    def __getitem__(self, ij: tuple[int, int]) -> complex:
        i, j = ij
        if i > j:
            return self[j, i].conjugate()
        value = self._cache.get((i, j))
        if value is None:
            value = evaluate_lossy_moment(self.state, matrix_element_word(i, j), self.noise)
            if i == j:
                value = complex(value.real, 0.0)
            self._cache[(i, j)] = value
        return value

    def submatrix(self, indices: Sequence[int]) -> np.ndarray:
        d = len(indices)
        out = np.empty((d, d), dtype=complex)
        for a in range(d):
            for b in range(a, d):
                v = self[indices[a], indices[b]]
                out[a, b] = v
                out[b, a] = v.conjugate()
        return out


def build_matrix(state: TwoModeState, spec: CriterionSpec,
                 noise: Optional[NoiseModel] = None,
                 table: Optional[MomentTable] = None) -> CriterionMatrix:
    """Criterion matrix from the upper triangle, mirrored to keep it Hermitian."""
    if table is None:
        table = MomentTable(state, noise)
    entries = table.submatrix(spec.retained_indices)
    entries.setflags(write=False)
    return CriterionMatrix(spec, entries)


def _det_small(a: np.ndarray) -> complex:
    d = a.shape[0]
    if d == 0:
        return 1.0 + 0j
    if d == 1:
        return complex(a[0, 0])
    if d == 2:
        return complex(a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0])
    if d == 3:
        return complex(
            a[0, 0] * (a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1])
            - a[0, 1] * (a[1, 0] * a[2, 2] - a[1, 2] * a[2, 0])
            + a[0, 2] * (a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0]))
    return complex(np.linalg.det(a))


def _as_array(matrix) -> np.ndarray:
    return matrix.entries if isinstance(matrix, CriterionMatrix) else np.asarray(matrix)


def determinant(matrix) -> float:
    """Real determinant of a Hermitian criterion matrix.

    Cofactor expansion for ``d <= 3``, pivoted LU beyond.  Raises
    ``NumericalError`` if the imaginary residue is not negligible.
    """
    a = _as_array(matrix)
    value = _det_small(a)
    scale = max(1.0, float(np.max(np.abs(a))) ** a.shape[0]) if a.size else 1.0
    if abs(value.imag) > IMAG_TOL * scale:
        raise NumericalError(f"determinant has imaginary part {value.imag:.3g}")
    return float(value.real)


def _minor(a: np.ndarray, row: int, col: int) -> np.ndarray:
    return np.delete(np.delete(a, row, axis=0), col, axis=1)


def adjugate(matrix) -> np.ndarray:
    """Adjugate by cofactors, so it is defined for singular matrices too."""
    a = _as_array(matrix)
    d = a.shape[0]
    adj = np.empty((d, d), dtype=complex)
    for i in range(d):
        for j in range(d):
            adj[i, j] = (-1) ** (i + j) * _det_small(_minor(a, j, i))
    return adj


def negativity_threshold(matrix) -> float:
    a = _as_array(matrix)
    scale = abs(float(np.prod(np.real(np.diag(a)))))
    return NEGATIVITY_RTOL * scale if scale > 0 else NEGATIVITY_ATOL


def is_negative(matrix, det_value: Optional[float] = None) -> bool:
    """Determinant below a small scale-aware negative threshold."""
    if det_value is None:
        det_value = determinant(matrix)
    return det_value < -negativity_threshold(matrix)


def evaluate_specs(state: TwoModeState, specs: Iterable[CriterionSpec],
                   noise: Optional[NoiseModel] = None) -> list[tuple[CriterionSpec, float]]:
    """Determinants of many criteria sharing one moment table."""
    table = MomentTable(state, noise)
    return [(spec, determinant(build_matrix(state, spec, table=table))) for spec in specs]
