"""Sweep configuration: a versioned YAML (or JSON) document.

Schema, version 1 (every section optional except ``state``)::

    version: 1
    state:
      family: tmsv            # tmsv | subtracted_tmsv | cat
      params: {start: 0.25, stop: 2.0, step: 0.05}   # zeta or alpha grid
      n_sub: 1                # subtracted_tmsv only
      m_sub: 1
      dim: null               # Fock truncation override per mode
      tail_tolerance: 1.0e-10
    noise:
      eta: [0.8]              # scalar, list or range
      n_bar: [0.0]
    budget:
      m_tot: [200]
    search:
      d_min: 1
      d_max: 5
      n_max: 2
      cross_mode_only: false
      criteria: null          # explicit names or index lists; skips filtering
    confidence_threshold: 0.95
    seed: 0
    output: {name: sweep}
    montecarlo: {enabled: false, criterion: D_I, trials: 500}

Grids accept a scalar, a list, ``{start, stop, step}`` or
``{start, stop, num, log}``; ranges include both end points.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import yaml

from .criteria import CriterionSpec, parse_spec
from .exceptions import ConfigError
from .validation import (check_fraction, check_nonnegative, check_positive,
                         check_positive_int, expand_grid)

SCHEMA_VERSION = 1
FAMILIES = ("tmsv", "subtracted_tmsv", "cat")


@dataclass(frozen=True)
class StateGrid:
    family: str
    params: tuple[float, ...]
    n_sub: int = 0
    m_sub: int = 0
    dim: Optional[int] = None
    tail_tolerance: float = 1e-10


@dataclass(frozen=True)
class SearchBounds:
    d_min: int = 1
    d_max: int = 2
    n_max: int = 2
    cross_mode_only: bool = False
    criteria: Optional[tuple[str, ...]] = None


@dataclass(frozen=True)
class MonteCarloSettings:
    enabled: bool = False
    criterion: str = "D_I"
    trials: int = 500


@dataclass(frozen=True)
class SweepConfig:
    state: StateGrid
    etas: tuple[float, ...] = (1.0,)
    n_bars: tuple[float, ...] = (0.0,)
    m_tots: tuple[float, ...] = (1000.0,)
    bounds: SearchBounds = field(default_factory=SearchBounds)
    confidence_threshold: float = 0.95
    seed: int = 0
    name: str = "sweep"
    montecarlo: MonteCarloSettings = field(default_factory=MonteCarloSettings)

    def explicit_specs(self) -> Optional[list[CriterionSpec]]:
        if self.bounds.criteria is None:
            return None
        return [parse_spec(c) for c in self.bounds.criteria]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["version"] = SCHEMA_VERSION
        return d


def _section(raw: dict, key: str, allowed: set) -> dict:
    sec = raw.get(key) or {}
    if not isinstance(sec, dict):
        raise ConfigError(f"section {key!r} must be a mapping")
    unknown = set(sec) - allowed
    if unknown:
        raise ConfigError(f"section {key!r}: unknown keys {sorted(unknown)}")
    return sec


def config_from_dict(raw: dict) -> SweepConfig:
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a mapping")
    top = {"version", "state", "noise", "budget", "search", "confidence_threshold",
           "seed", "output", "montecarlo"}
    unknown = set(raw) - top
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
    version = raw.get("version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported config version {version!r}")
    if "state" not in raw:
        raise ConfigError("missing required section 'state'")

    st = _section(raw, "state", {"family", "params", "n_sub", "m_sub", "dim", "tail_tolerance"})
    family = st.get("family")
    if family not in FAMILIES:
        raise ConfigError(f"state.family must be one of {FAMILIES}, got {family!r}")
    if "params" not in st:
        raise ConfigError("state.params is required")
    params = expand_grid("state.params", st["params"])
    for p in params:
        check_nonnegative("state.params", p)
    n_sub = check_positive_int("state.n_sub", st.get("n_sub", 0), 0)
    m_sub = check_positive_int("state.m_sub", st.get("m_sub", 0), 0)
    if family != "subtracted_tmsv" and (n_sub or m_sub):
        raise ConfigError("n_sub/m_sub apply only to the subtracted_tmsv family")
    dim = st.get("dim")
    if dim is not None:
        dim = check_positive_int("state.dim", dim, 2)
    tail = check_fraction("state.tail_tolerance", st.get("tail_tolerance", 1e-10))
    state = StateGrid(family, tuple(params), n_sub, m_sub, dim, tail)

    nz = _section(raw, "noise", {"eta", "n_bar"})
    etas = tuple(check_fraction("noise.eta", v) for v in expand_grid("noise.eta", nz.get("eta", 1.0)))
    n_bars = tuple(check_nonnegative("noise.n_bar", v)
                   for v in expand_grid("noise.n_bar", nz.get("n_bar", 0.0)))
    bd = _section(raw, "budget", {"m_tot"})
    m_tots = tuple(check_positive("budget.m_tot", v)
                   for v in expand_grid("budget.m_tot", bd.get("m_tot", 1000)))

    sr = _section(raw, "search", {"d_min", "d_max", "n_max", "cross_mode_only", "criteria"})
    d_min = check_positive_int("search.d_min", sr.get("d_min", 1))
    d_max = check_positive_int("search.d_max", sr.get("d_max", 2))
    if d_max < d_min:
        raise ConfigError("search.d_max must be >= search.d_min")
    n_max = check_positive_int("search.n_max", sr.get("n_max", 2))
    criteria = sr.get("criteria")
    if criteria is not None:
        if isinstance(criteria, str) or not criteria:
            raise ConfigError("search.criteria must be a nonempty list")
        criteria = tuple(c if isinstance(c, str) else ",".join(map(str, c)) for c in criteria)
        for c in criteria:
            try:
                parse_spec(c)
            except (KeyError, ValueError) as exc:
                raise ConfigError(f"search.criteria: {exc}") from None
    bounds = SearchBounds(d_min, d_max, n_max, bool(sr.get("cross_mode_only", False)), criteria)

    threshold = check_fraction("confidence_threshold", raw.get("confidence_threshold", 0.95))
    seed = check_positive_int("seed", raw.get("seed", 0), 0)
    out = _section(raw, "output", {"name"})
    name = str(out.get("name", "sweep"))
    mc = _section(raw, "montecarlo", {"enabled", "criterion", "trials"})
    montecarlo = MonteCarloSettings(bool(mc.get("enabled", False)), str(mc.get("criterion", "D_I")),
                                    check_positive_int("montecarlo.trials", mc.get("trials", 500), 2))
    return SweepConfig(state, etas, n_bars, m_tots, bounds, threshold, seed, name, montecarlo)


def load_config(path) -> SweepConfig:
    """Read a YAML (or JSON) sweep configuration; I/O errors propagate as ``OSError``."""
    with open(path) as fh:
        text = fh.read()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from None
    return config_from_dict(raw)
