"""Ordered products of bosonic ladder operators on two modes.

A word is stored per mode as a tuple of letters, ``True`` for a creation
operator and ``False`` for an annihilation operator, read left to right as
written.  Operators of different modes commute, so the two tuples fully
determine the operator.

Text notation: whitespace separated tokens ``a``, ``ad``, ``b``, ``bd`` with an
optional ``^k`` power, e.g. ``"ad^2 a bd b"``.  ``"1"`` (or the empty string)
is the identity.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

Letters = tuple[bool, ...]

_TOKEN = re.compile(r"^(ad|a|bd|b)(?:\^(\d+))?$")


@dataclass(frozen=True)
class OperatorWord:
    a: Letters = ()
    b: Letters = ()

    @classmethod
    def from_exponents(cls, q=0, p=0, n=0, m=0, l=0, k=0, r=0, s=0) -> "OperatorWord":
        """Word ``ad^q a^p ad^n a^m bd^l b^k bd^r b^s``."""
        a = (True,) * q + (False,) * p + (True,) * n + (False,) * m
        b = (True,) * l + (False,) * k + (True,) * r + (False,) * s
        return cls(a, b)

    @classmethod
    def parse(cls, text: str) -> "OperatorWord":
        text = text.strip()
        if text in ("", "1"):
            return cls()
        a: list[bool] = []
        b: list[bool] = []
        for tok in text.split():
            match = _TOKEN.match(tok)
            if match is None:
                raise ValueError(f"bad operator token {tok!r} in {text!r}")
            name, power = match.group(1), int(match.group(2) or 1)
            target = a if name.startswith("a") else b
            target.extend([name.endswith("d")] * power)
        return cls(tuple(a), tuple(b))

    @property
    def order(self) -> int:
        return len(self.a) + len(self.b)

    @property
    def is_identity(self) -> bool:
        return not self.a and not self.b

    def adjoint(self) -> "OperatorWord":
        return OperatorWord(_adjoint(self.a), _adjoint(self.b))

    def is_hermitian(self) -> bool:
        return self == self.adjoint()

    def rotation_charge(self) -> tuple[int, int]:
        """Net (creations - annihilations) per mode."""
        return (2 * sum(self.a) - len(self.a), 2 * sum(self.b) - len(self.b))

    def __mul__(self, other: "OperatorWord") -> "OperatorWord":
        if not isinstance(other, OperatorWord):
            return NotImplemented
        return OperatorWord(self.a + other.a, self.b + other.b)

    def __str__(self) -> str:
        tokens = _render(self.a, "a") + _render(self.b, "b")
        return " ".join(tokens) if tokens else "1"


def _adjoint(letters: Letters) -> Letters:
    return tuple(not x for x in reversed(letters))


def _render(letters: Letters, name: str) -> list[str]:
    out = []
    for dag, count in runs(letters):
        tok = name + ("d" if dag else "")
        out.append(tok if count == 1 else f"{tok}^{count}")
    return out


def runs(letters: Sequence[bool]) -> list[tuple[bool, int]]:
    """Run-length encoding of a letter sequence."""
    out: list[tuple[bool, int]] = []
    for x in letters:
        if out and out[-1][0] == x:
            out[-1] = (x, out[-1][1] + 1)
        else:
            out.append((x, 1))
    return out


@lru_cache(maxsize=4096)
def mode_matrix(letters: Letters, dim: int) -> np.ndarray:
    """Matrix of a single-mode word on Fock levels ``0..dim-1``.

    The product is formed in a space padded by the number of creation
    operators, so every retained element equals the exact infinite-space value.
    """
    pad = dim + sum(letters)
    lower = np.diag(np.sqrt(np.arange(1, pad, dtype=float)), 1)
    out = np.eye(pad)
    for dag in letters:
        out = out @ (lower.T if dag else lower)
    out = np.ascontiguousarray(out[:dim, :dim])
    out.setflags(write=False)
    return out


# A polynomial is a list of (complex coefficient, word) pairs.
Polynomial = list[tuple[complex, OperatorWord]]


def square(poly: Iterable[tuple[complex, OperatorWord]]) -> Polynomial:
    poly = list(poly)
    return [(c1 * c2, w1 * w2) for c1, w1 in poly for c2, w2 in poly]
