"""Truncated two-mode Fock-space states, expectation values and loss channels.

The squeezing convention is ``exp[(zeta* a b - zeta a^dag b^dag) / 2] |0,0>``,
so a TMSV with parameter ``zeta`` has ``<a^dag a> = sinh(zeta/2)**2``.  Other
references absorb the factor 1/2 into ``zeta``; convert before comparing.

Pure states are held as a ``(dim_a, dim_b)`` amplitude matrix and only
expanded to a density matrix on demand.  Moments of pure states therefore cost
``O(dim**3)`` and never touch a ``dim**4`` array.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from functools import cached_property, lru_cache
from typing import Optional, Union

import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln

from .exceptions import DegenerateStateError, TruncationError
from .noise import NoiseModel
from .words import OperatorWord, Polynomial, mode_matrix

# Automatic truncation grows the dimension until the top level holds less
# than this population; far below the default validation tolerance because
# fourth- and eighth-order moments weight the tail by ~dim**4..dim**8.
AUTO_TAIL = 1e-15
MAX_AUTO_DIM = 400
THERMAL_TAIL = 1e-12


@dataclass(frozen=True)
class FockConfig:
    dim_a: int
    dim_b: int
    tail_tolerance: float = 1e-10

    def __post_init__(self):
        if int(self.dim_a) != self.dim_a or int(self.dim_b) != self.dim_b:
            raise ValueError("Fock dimensions must be integers")
        if self.dim_a < 2 or self.dim_b < 2:
            raise ValueError(f"Fock dimensions must be >= 2, got {self.dim_a}x{self.dim_b}")
        if not 0.0 <= self.tail_tolerance < 1.0:
            raise ValueError(f"tail_tolerance must lie in [0, 1), got {self.tail_tolerance}")

    @classmethod
    def square(cls, dim: int, tail_tolerance: float = 1e-10) -> "FockConfig":
        return cls(dim, dim, tail_tolerance)


# Preparation records ---------------------------------------------------------

@dataclass(frozen=True)
class TMSV:
    zeta: float
    kind: str = field(default="tmsv", init=False)


@dataclass(frozen=True)
class PhotonSubtractedTMSV:
    zeta: float
    n_sub: int
    m_sub: int
    kind: str = field(default="subtracted_tmsv", init=False)


@dataclass(frozen=True)
class TwoModeCat:
    alpha: float
    kind: str = field(default="cat", init=False)


@dataclass(frozen=True)
class Custom:
    label: str = ""
    kind: str = field(default="custom", init=False)


Preparation = Union[TMSV, PhotonSubtractedTMSV, TwoModeCat, Custom]


def _preparation_from_dict(d: dict) -> Preparation:
    d = dict(d)
    kind = d.pop("kind")
    return {"tmsv": TMSV, "subtracted_tmsv": PhotonSubtractedTMSV,
            "cat": TwoModeCat, "custom": Custom}[kind](**d)


@dataclass(frozen=True)
class LocalRotation:
    theta_a: float = 0.0
    theta_b: float = 0.0


class TwoModeState:
    """Immutable truncated two-mode state.

    Build through the ``prepare_*`` functions or :func:`from_density_matrix`.
    ``history`` records operations (rotations, channels) applied after the
    preparation.
    """

    def __init__(self, config: FockConfig, preparation: Preparation, *,
                 psi: Optional[np.ndarray] = None, rho: Optional[np.ndarray] = None,
                 history: tuple = (), check_psd: bool = True):
        if (psi is None) == (rho is None):
            raise ValueError("exactly one of psi or rho is required")
        self.config = config
        self.preparation = preparation
        self.history = tuple(history)
        da, db = config.dim_a, config.dim_b
        if psi is not None:
            psi = np.array(psi, dtype=complex).reshape(da, db)
            norm = np.linalg.norm(psi)
            if not norm > 0:
                raise DegenerateStateError("state vector has zero norm")
            psi = psi / norm
            psi.setflags(write=False)
        else:
            rho = np.array(rho, dtype=complex)
            if rho.shape != (da * db, da * db):
                raise ValueError(f"rho has shape {rho.shape}, expected {(da * db, da * db)}")
            _validate_rho(rho, check_psd)
            rho.setflags(write=False)
        self._psi = psi
        self._rho = rho
        top_a, top_b = self.top_populations()
        if max(top_a, top_b) > config.tail_tolerance:
            raise TruncationError(
                f"top Fock level holds population {max(top_a, top_b):.3g} > "
                f"{config.tail_tolerance:.3g} (dims {da}x{db}); enlarge the truncation")

    @property
    def is_pure(self) -> bool:
        return self._psi is not None

    @property
    def psi(self) -> Optional[np.ndarray]:
        """Amplitude matrix ``psi[n_a, n_b]`` for pure states, else ``None``."""
        return self._psi

    @cached_property
    def rho(self) -> np.ndarray:
        if self._rho is not None:
            return self._rho
        vec = self._psi.reshape(-1)
        out = np.outer(vec, vec.conj())
        out.setflags(write=False)
        return out

    @property
    def rho4(self) -> np.ndarray:
        """Density matrix as a tensor ``[a, b, a', b']``."""
        da, db = self.config.dim_a, self.config.dim_b
        return self.rho.reshape(da, db, da, db)

    def populations(self) -> tuple[np.ndarray, np.ndarray]:
        """Marginal Fock populations of modes A and B."""
        if self.is_pure:
            p = np.abs(self._psi) ** 2
            return p.sum(axis=1), p.sum(axis=0)
        r4 = self.rho4
        return np.real(np.einsum("ibib->i", r4)), np.real(np.einsum("aiai->i", r4))

    def top_populations(self) -> tuple[float, float]:
        pa, pb = self.populations()
        return float(pa[-1]), float(pb[-1])

    def trace(self) -> float:
        if self.is_pure:
            return float(np.sum(np.abs(self._psi) ** 2))
        return float(np.real(np.trace(self._rho)))

    def with_config(self, config: FockConfig) -> "TwoModeState":
        """Re-embed in a different truncation (zero-padding or cropping)."""
        da, db = config.dim_a, config.dim_b
        ka, kb = min(da, self.config.dim_a), min(db, self.config.dim_b)
        if self.is_pure:
            psi = np.zeros((da, db), dtype=complex)
            psi[:ka, :kb] = self._psi[:ka, :kb]
            return TwoModeState(config, self.preparation, psi=psi, history=self.history)
        r4 = np.zeros((da, db, da, db), dtype=complex)
        r4[:ka, :kb, :ka, :kb] = self.rho4[:ka, :kb, :ka, :kb]
        return TwoModeState(config, self.preparation, rho=r4.reshape(da * db, da * db),
                            history=self.history, check_psd=False)

    def __repr__(self) -> str:
        kind = "pure" if self.is_pure else "mixed"
        return (f"TwoModeState({self.preparation}, dims={self.config.dim_a}x"
                f"{self.config.dim_b}, {kind}, history={self.history})")


def _validate_rho(rho: np.ndarray, check_psd: bool) -> None:
    tr = np.trace(rho)
    if abs(tr - 1.0) > 1e-10:
        raise ValueError(f"density matrix trace is {tr}, expected 1")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-12:
        raise ValueError("density matrix is not Hermitian")
    if check_psd:
        lowest = np.linalg.eigvalsh(rho)[0]
        if lowest < -1e-10:
            raise ValueError(f"density matrix has negative eigenvalue {lowest:.3g}")


# Preparations ------------------------------------------------------------------

def _check_param(name: str, value: float, positive: bool = False) -> float:
    value = float(value)
    if not math.isfinite(value) or value < 0 or (positive and value == 0):
        raise ValueError(f"{name} must be {'positive' if positive else 'nonnegative'}"
                         f" and finite, got {value}")
    return value


def _tmsv_amplitudes(zeta: float, n_sub: int, m_sub: int, da: int, db: int) -> np.ndarray:
    r = zeta / 2.0
    t = math.tanh(r)
    psi = np.zeros((da, db), dtype=complex)
    k = np.arange(max(n_sub, m_sub), min(da + n_sub, db + m_sub))
    if t == 0.0:
        coeff = np.where(k == 0, 1.0, 0.0)
    else:
        # log of |sech r * tanh^k r| times sqrt(k!/(k-n)!) sqrt(k!/(k-m)!)
        log_mag = (-math.log(math.cosh(r)) + k * math.log(t)
                   + 0.5 * (gammaln(k + 1) - gammaln(k - n_sub + 1))
                   + 0.5 * (gammaln(k + 1) - gammaln(k - m_sub + 1)))
        coeff = np.exp(log_mag - log_mag.max()) * np.where(k % 2 == 0, 1.0, -1.0)
    psi[k - n_sub, k - m_sub] = coeff
    return psi


def _coherent(alpha: float, dim: int) -> np.ndarray:
    k = np.arange(dim)
    if alpha == 0.0:
        return (k == 0).astype(float)
    return np.exp(-alpha ** 2 / 2 + k * math.log(alpha) - 0.5 * gammaln(k + 1))


def _cat_amplitudes(alpha: float, da: int, db: int) -> np.ndarray:
    psi = np.zeros((da, db), dtype=complex)
    psi[:, 0] += _coherent(alpha, da)
    psi[0, :] -= _coherent(alpha, db)
    return psi


def _top_fraction(psi: np.ndarray) -> float:
    p = np.abs(psi) ** 2
    total = p.sum()
    if total == 0:
        return 0.0
    return max(p[-1, :].sum(), p[:, -1].sum()) / total


def _auto_dim(builder, base: int) -> int:
    dim = base
    while _top_fraction(builder(dim, dim)) > AUTO_TAIL:
        dim += 1
        if dim > MAX_AUTO_DIM:
            raise TruncationError(f"no truncation up to {MAX_AUTO_DIM} reaches tail {AUTO_TAIL}")
    return dim


def default_config(family: str, *, zeta: float = 0.0, alpha: float = 0.0,
                   n_sub: int = 0, m_sub: int = 0,
                   tail_tolerance: float = 1e-10) -> FockConfig:
    """Truncation for the example families.

    Starts from 20 levels (zeta <= 1), 30 (zeta <= 2) or ``15 + ceil(alpha**2 + 5 alpha)``
    for cat states, then grows until the top level holds less than ``AUTO_TAIL``.
    """
    if family in ("tmsv", "subtracted_tmsv"):
        base = 20 if zeta <= 1 else 30 if zeta <= 2 else 30 + int(math.ceil(15 * (zeta - 2)))
        base += n_sub + m_sub
        dim = _auto_dim(lambda da, db: _tmsv_amplitudes(zeta, n_sub, m_sub, da, db), base)
    elif family == "cat":
        base = 15 + int(math.ceil(alpha ** 2 + 5 * alpha))
        dim = _auto_dim(lambda da, db: _cat_amplitudes(alpha, da, db), base)
    else:
        raise ValueError(f"unknown state family {family!r}")
    return FockConfig(dim, dim, tail_tolerance)


def prepare_tmsv(zeta: float, config: Optional[FockConfig] = None) -> TwoModeState:
    """Two-mode squeezed vacuum built from its Schmidt expansion.

    Amplitudes ``sech(zeta/2) (-tanh(zeta/2))**k`` on ``|k, k>``.
    """
    zeta = _check_param("zeta", zeta)
    config = config or default_config("tmsv", zeta=zeta)
    psi = _tmsv_amplitudes(zeta, 0, 0, config.dim_a, config.dim_b)
    return TwoModeState(config, TMSV(zeta), psi=psi)


def prepare_subtracted_tmsv(zeta: float, n_sub: int, m_sub: int,
                            config: Optional[FockConfig] = None) -> TwoModeState:
    """Normalized ``a**n_sub b**m_sub`` applied to the TMSV."""
    zeta = _check_param("zeta", zeta)
    if int(n_sub) != n_sub or int(m_sub) != m_sub or n_sub < 0 or m_sub < 0:
        raise ValueError("subtraction counts must be nonnegative integers")
    n_sub, m_sub = int(n_sub), int(m_sub)
    if zeta == 0 and n_sub + m_sub > 0:
        raise DegenerateStateError("subtracting photons from the vacuum gives the zero vector")
    config = config or default_config("subtracted_tmsv", zeta=zeta, n_sub=n_sub, m_sub=m_sub)
    psi = _tmsv_amplitudes(zeta, n_sub, m_sub, config.dim_a, config.dim_b)
    return TwoModeState(config, PhotonSubtractedTMSV(zeta, n_sub, m_sub), psi=psi)


def prepare_two_mode_cat(alpha: float, config: Optional[FockConfig] = None) -> TwoModeState:
    """Normalized ``|alpha>|0> - |0>|alpha>`` for real ``alpha > 0``."""
    alpha = float(alpha)
    if alpha == 0:
        raise DegenerateStateError("alpha = 0 gives the zero vector")
    alpha = _check_param("alpha", alpha, positive=True)
    config = config or default_config("cat", alpha=alpha)
    psi = _cat_amplitudes(alpha, config.dim_a, config.dim_b)
    return TwoModeState(config, TwoModeCat(alpha), psi=psi)


def from_density_matrix(rho: np.ndarray, config: FockConfig, label: str = "") -> TwoModeState:
    """Custom state from a raw density matrix (validated)."""
    return TwoModeState(config, Custom(label), rho=rho)


def from_state_vector(psi: np.ndarray, config: FockConfig, label: str = "") -> TwoModeState:
    return TwoModeState(config, Custom(label), psi=psi)


def product_state(rho_a: np.ndarray, rho_b: np.ndarray, config: FockConfig,
                  label: str = "product") -> TwoModeState:
    """``rho_a (x) rho_b`` zero-padded into ``config``."""
    big_a = np.zeros((config.dim_a, config.dim_a), dtype=complex)
    big_b = np.zeros((config.dim_b, config.dim_b), dtype=complex)
    big_a[:len(rho_a), :len(rho_a)] = rho_a
    big_b[:len(rho_b), :len(rho_b)] = rho_b
    return from_density_matrix(np.kron(big_a, big_b), config, label)


# Operations --------------------------------------------------------------------

def apply_local_rotation(state: TwoModeState, rot: LocalRotation) -> TwoModeState:
    """``U^dag rho U`` with ``U = exp(-i theta_a a^dag a) exp(-i theta_b b^dag b)``."""
    phase_a = np.exp(1j * rot.theta_a * np.arange(state.config.dim_a))
    phase_b = np.exp(1j * rot.theta_b * np.arange(state.config.dim_b))
    history = state.history + (("rotation", rot.theta_a, rot.theta_b),)
    if state.is_pure:
        psi = phase_a[:, None] * state.psi * phase_b[None, :]
        return TwoModeState(state.config, state.preparation, psi=psi, history=history)
    phase = np.kron(phase_a, phase_b)
    rho = phase[:, None] * state.rho * phase.conj()[None, :]
    return TwoModeState(state.config, state.preparation, rho=rho, history=history,
                        check_psd=False)


def expect_factorized(state: TwoModeState, mat_a: np.ndarray, mat_b: np.ndarray) -> complex:
    """``Tr[rho (mat_a (x) mat_b)]``."""
    if state.is_pure:
        psi = state.psi
        return complex(np.sum(psi.conj() * (mat_a @ psi @ mat_b.T)))
    t = np.tensordot(state.rho4, mat_a, axes=([0, 2], [1, 0]))
    return complex(np.sum(t * mat_b.T))


def expectation(state: TwoModeState, op_word: OperatorWord) -> complex:
    """Expectation of a word with its factors multiplied in the written order.

    Matrix elements are exact for the truncated state (see ``mode_matrix``).
    """
    if op_word.is_identity:
        return complex(state.trace())
    mat_a = mode_matrix(op_word.a, state.config.dim_a)
    mat_b = mode_matrix(op_word.b, state.config.dim_b)
    return expect_factorized(state, mat_a, mat_b)


def expectation_poly(state: TwoModeState, poly: Polynomial) -> complex:
    return sum((c * expectation(state, w) for c, w in poly), 0j)


# Thermal loss channel ----------------------------------------------------------

def thermal_cutoff(n_bar: float, tol: float = THERMAL_TAIL) -> int:
    """Smallest N with ``(n_bar / (n_bar + 1))**N < tol``."""
    if n_bar == 0:
        return 1
    ratio = n_bar / (n_bar + 1.0)
    return int(math.floor(math.log(tol) / math.log(ratio))) + 1


def thermal_populations(n_bar: float, n_levels: int) -> np.ndarray:
    if n_bar == 0:
        p = np.zeros(n_levels)
        p[0] = 1.0
        return p
    ratio = n_bar / (n_bar + 1.0)
    p = ratio ** np.arange(n_levels)
    return p / p.sum()


@lru_cache(maxsize=64)
def _mode_superoperator(d_in: int, n_anc: int, eta: float, n_bar: float) -> np.ndarray:
    """Single-mode channel as ``S[m, m', j, j']`` (output dim ``d_in + n_anc - 1``).

    The beam-splitter unitary ``exp[theta (a^dag e - a e^dag)]`` with
    ``cos(theta) = sqrt(eta)`` conserves total excitation number, so it is
    exponentiated exactly block by block; no truncation error enters.
    """
    d_out = d_in + n_anc - 1
    theta = math.acos(math.sqrt(eta))
    probs = thermal_populations(n_bar, n_anc)
    # kraus[l, k, m, j] = <m, l| U |j, k>
    n_env_out = d_out
    kraus = np.zeros((n_env_out, n_anc, d_out, d_in))
    for total in range(d_in + n_anc - 1):
        j = np.arange(total + 1)          # system photons in block basis |j, total - j>
        up = np.sqrt((j[:-1] + 1.0) * (total - j[:-1]))  # <j+1| a^dag e |j>
        gen = np.zeros((total + 1, total + 1))
        gen[j[1:], j[:-1]] = theta * up
        gen[j[:-1], j[1:]] = -theta * up
        block = expm(gen)
        for jin in range(max(0, total - n_anc + 1), min(total, d_in - 1) + 1):
            k = total - jin
            m = j
            kraus[total - m, k, m, jin] = block[:, jin]
    weighted = kraus * np.sqrt(probs)[None, :, None, None]
    flat = weighted.reshape(-1, d_out * d_in)
    sup = (flat.T @ flat).reshape(d_out, d_in, d_out, d_in).transpose(0, 2, 1, 3)
    sup = np.ascontiguousarray(sup)
    sup.setflags(write=False)
    return sup


def apply_thermal_loss_channel(state: TwoModeState, noise: NoiseModel,
                               pad: Optional[bool] = None) -> TwoModeState:
    """Couple each mode to an independent thermal ancilla through a beam splitter.

    With ``pad`` (default: whenever ``n_bar > 0``) each output mode gains
    ``N - 1`` levels, ``N`` being the thermal ancilla cutoff, so no population
    can leave the truncated space.
    """
    if noise.is_identity:
        return state
    n_anc = thermal_cutoff(noise.n_bar)
    if pad is None:
        pad = noise.n_bar > 0
    da, db = state.config.dim_a, state.config.dim_b
    sup_a = _mode_superoperator(da, n_anc, noise.eta, noise.n_bar)
    sup_b = _mode_superoperator(db, n_anc, noise.eta, noise.n_bar)
    r4 = state.rho4
    r4 = np.tensordot(sup_a, r4, axes=([2, 3], [0, 2])).transpose(0, 2, 1, 3)
    r4 = np.tensordot(sup_b, r4, axes=([2, 3], [1, 3])).transpose(2, 0, 3, 1)
    oa, ob = r4.shape[0], r4.shape[1]
    if not pad:
        r4 = r4[:da, :db, :da, :db]
        oa, ob = da, db
    rho = np.ascontiguousarray(r4).reshape(oa * ob, oa * ob)
    rho = 0.5 * (rho + rho.conj().T)
    lost = 1.0 - np.real(np.trace(rho))
    if abs(lost) > 1e-10:
        raise TruncationError(f"loss channel leaked population {lost:.3g} out of the truncation")
    config = FockConfig(oa, ob, state.config.tail_tolerance)
    history = state.history + (("thermal_loss", noise.eta, noise.n_bar),)
    return TwoModeState(config, state.preparation, rho=rho / np.trace(rho), history=history,
                        check_psd=False)


# Snapshot export ---------------------------------------------------------------

def save_state(state: TwoModeState, path) -> None:
    """Write a self-describing ``.npz`` snapshot (bit-exact round trip)."""
    meta = {
        "format": "nptopt-state",
        "version": 1,
        "dim_a": state.config.dim_a,
        "dim_b": state.config.dim_b,
        "tail_tolerance": state.config.tail_tolerance,
        "preparation": asdict(state.preparation),
        "history": [list(h) for h in state.history],
        "pure": state.is_pure,
    }
    payload = state.psi if state.is_pure else state.rho
    with open(path, "wb") as fh:
        np.savez(fh, meta=np.array(json.dumps(meta)), data=np.asarray(payload))


def load_state(path) -> TwoModeState:
    with np.load(path, allow_pickle=False) as npz:
        meta = json.loads(str(npz["meta"]))
        data = npz["data"]
    if meta.get("format") != "nptopt-state":
        raise ValueError(f"{path} is not a state snapshot")
    config = FockConfig(meta["dim_a"], meta["dim_b"], meta["tail_tolerance"])
    prep = _preparation_from_dict(meta["preparation"])
    history = tuple(tuple(h) for h in meta["history"])
    state = TwoModeState.__new__(TwoModeState)
    # bypass renormalization so the payload is restored bit for bit
    state.config, state.preparation, state.history = config, prep, history
    data = np.array(data, dtype=complex)
    data.setflags(write=False)
    state._psi, state._rho = (data, None) if meta["pure"] else (None, data)
    return state
