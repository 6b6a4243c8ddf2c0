"""Multi-index ordering of the moment matrix and Hermitian decomposition of its entries.

Row ``i`` of the moment matrix is labelled by a multi-index ``(p, q, r, s)``
and column ``j`` by ``(n, m, k, l)``; both share one ordering.  The entry is
the expectation of ``ad^q a^p ad^n a^m bd^l b^k bd^r b^s``.

Ordering: graded by total degree; inside a degree, loop ``s`` ascending, then
``r``, then ``q``, with ``p`` taking the remainder.  This reproduces the
published first fifteen rows and extends them to all degrees.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from math import comb
from typing import NamedTuple

from .words import OperatorWord, Polynomial


class MultiIndex(NamedTuple):
    p: int
    q: int
    r: int
    s: int

    @property
    def degree(self) -> int:
        return self.p + self.q + self.r + self.s


def _degree_block(degree: int) -> list[MultiIndex]:
    out = []
    for s in range(degree + 1):
        for r in range(degree - s + 1):
            for q in range(degree - s - r + 1):
                out.append(MultiIndex(degree - q - r - s, q, r, s))
    return out


def _count_below(degree: int) -> int:
    """Number of multi-indices with total degree < ``degree``."""
    return comb(degree + 3, 4)


class IndexMap:
    """Grow-only table of the ordering; safe for concurrent readers."""

    def __init__(self):
        self._entries: list[MultiIndex] = []
        self._positions: dict[MultiIndex, int] = {}
        self._degree = -1
        self._lock = threading.Lock()

    def _grow_to(self, degree: int) -> None:
        with self._lock:
            while self._degree < degree:
                block = _degree_block(self._degree + 1)
                start = len(self._entries)
                for offset, mi in enumerate(block):
                    self._positions[mi] = start + offset + 1
                self._entries.extend(block)
                self._degree += 1

    def __getitem__(self, k: int) -> MultiIndex:
        if k < 1:
            raise IndexError("ordinals start at 1")
        while len(self._entries) < k:
            self._grow_to(self._degree + 1)
        return self._entries[k - 1]

    def ordinal(self, mi: MultiIndex) -> int:
        mi = MultiIndex(*mi)
        if min(mi) < 0:
            raise ValueError(f"multi-index components must be nonnegative: {mi}")
        if mi.degree > self._degree:
            self._grow_to(mi.degree)
        return self._positions[mi]

    def __len__(self) -> int:
        return len(self._entries)


INDEX_MAP = IndexMap()


def ordinal_to_multiindex(k: int) -> MultiIndex:
    return INDEX_MAP[k]


def multiindex_to_ordinal(mi) -> int:
    return INDEX_MAP.ordinal(mi)


def ordinal_degree(k: int) -> int:
    return ordinal_to_multiindex(k).degree


def max_ordinal_for_degree(degree: int) -> int:
    """Largest ordinal whose multi-index has degree <= ``degree``."""
    return _count_below(degree + 1)


def matrix_element_word(i: int, j: int) -> OperatorWord:
    """Operator word for entry ``(i, j)`` of the moment matrix."""
    p, q, r, s = ordinal_to_multiindex(i)
    n, m, k, l = ordinal_to_multiindex(j)
    return OperatorWord.from_exponents(q=q, p=p, n=n, m=m, l=l, k=k, r=r, s=s)


def element_order(i: int, j: int) -> int:
    return ordinal_degree(i) + ordinal_degree(j)


@dataclass(frozen=True)
class HermitianPart:
    """``B_p = i**p [O^dag + (-1)**p O] / 2`` for ``p`` in {0, 1}."""

    word: OperatorWord
    part: int

    def __post_init__(self):
        if self.part not in (0, 1):
            raise ValueError("part must be 0 (real) or 1 (imaginary)")

    def polynomial(self) -> Polynomial:
        if self.word.is_identity:
            return [(1.0 if self.part == 0 else 0.0, self.word)]
        phase = 1j ** self.part
        sign = (-1) ** self.part
        return [(phase / 2, self.word.adjoint()), (phase * sign / 2, self.word)]

    def squared(self) -> Polynomial:
        poly = self.polynomial()
        return [(c1 * c2, w1 * w2) for c1, w1 in poly for c2, w2 in poly]

    @property
    def is_constant(self) -> bool:
        return self.word.is_identity


def hermitian_parts(word: OperatorWord) -> tuple[HermitianPart, HermitianPart]:
    """Split ``O = B_0 + i B_1`` into Hermitian real and imaginary parts."""
    return HermitianPart(word, 0), HermitianPart(word, 1)


def part_mean(state, part: HermitianPart, noise=None) -> float:
    from .loss import evaluate_lossy_poly

    return float(evaluate_lossy_poly(state, part.polynomial(), noise).real)


def variance_of_part(state, part: HermitianPart, noise=None) -> float:
    """``<B^2> - <B>^2`` on ``state`` (after ``noise``, if given), clamped at zero.

    Raises ``NumericalError`` if the raw value is below ``-1e-12`` relative to
    ``<B^2>``.
    """
    from .exceptions import NumericalError
    from .loss import evaluate_lossy_poly

    if part.is_constant:
        return 0.0
    mean = evaluate_lossy_poly(state, part.polynomial(), noise).real
    second = evaluate_lossy_poly(state, part.squared(), noise).real
    var = second - mean ** 2
    if var < -1e-12 * max(1.0, abs(second)):
        raise NumericalError(f"negative variance {var:.3g} for {part}")
    return max(var, 0.0)
