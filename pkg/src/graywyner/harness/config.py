"""Experiment configuration: validation, canonical form, content hash.

A config is a flat JSON object.  Field names match the dataclass below
except for the source count of the L-variate scenario, which is spelled
"L" in JSON.  Unknown keys are rejected so typos fail loudly instead of
silently running defaults.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional, Tuple

SCENARIOS = ("dsbs-lossless", "dsbs-lossy", "gaussian", "gaussian-L",
             "lemma-check", "property-suite")
LOSSLESS_POINTS = ("A", "G", "AG", "GB")

# JSON spelling for fields whose attribute name differs
_JSON_ALIASES = {"sources": "L"}


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: a scenario, its parameters, and run bookkeeping.

    ``n`` is the block length (power of two), ``blocks`` the number of
    source blocks per seed, ``seeds`` the experiment seed list.  Scenario
    parameters: ``a0`` (binary source crossover), ``rho`` (Gaussian
    correlation), ``sources`` (L-variate count, JSON key "L"), ``point``
    with ``d1``/``beta`` (lossless operating point), ``deltas``
    (distortion targets), ``scale`` (lemma-check lattice spacing,
    defaulting to a spacing well inside the smoothing regime).
    """

    scenario: str
    n: int
    seeds: Tuple[int, ...]
    blocks: int = 10
    a0: Optional[float] = None
    rho: Optional[float] = None
    sources: Optional[int] = None
    point: Optional[str] = None
    d1: Optional[float] = None
    beta: Optional[float] = None
    deltas: Optional[Tuple[float, float]] = None
    scale: Optional[float] = None
    rate_margin: Optional[float] = None
    target_flatness: float = 1e-3
    sample_count: int = 256
    construction_seed: Optional[int] = None
    out: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if self.deltas is not None:
            object.__setattr__(self, "deltas", tuple(float(d) for d in self.deltas))
        self.validate()

    # -- validation ---------------------------------------------------------

    def validate(self) -> None:
        _require(self.scenario in SCENARIOS,
                 f"unknown scenario {self.scenario!r}; expected one of "
                 f"{', '.join(SCENARIOS)}")
        _require(self.n >= 2 and (self.n & (self.n - 1)) == 0,
                 f"n must be a power of two, got {self.n}")
        _require(len(self.seeds) > 0, "seeds must be nonempty")
        _require(self.blocks >= 1, "blocks must be at least 1")
        _require(self.sample_count >= 1, "sample_count must be at least 1")
        _require(self.target_flatness > 0.0, "target_flatness must be positive")
        if self.rate_margin is not None:
            _require(self.rate_margin >= 0.0, "rate_margin must be nonnegative")
        if self.scale is not None:
            _require(math.isfinite(self.scale) and self.scale > 0.0,
                     "scale must be finite and positive")
        if self.deltas is not None:
            _require(len(self.deltas) == 2, "deltas must hold exactly two targets")
            _require(all(math.isfinite(d) and d >= 0.0 for d in self.deltas),
                     "deltas must be finite and nonnegative")
        getattr(self, "_check_" + self.scenario.replace("-", "_"))()

    def _check_dsbs_lossless(self) -> None:
        self._need_a0()
        _require(self.point in LOSSLESS_POINTS,
                 f"dsbs-lossless needs point in {LOSSLESS_POINTS}, got {self.point!r}")
        if self.point == "AG":
            _require(self.d1 is not None, "point AG needs d1")
        if self.point == "GB":
            _require(self.beta is not None, "point GB needs beta")

    def _check_dsbs_lossy(self) -> None:
        self._need_a0()
        _require(self.deltas is not None, "dsbs-lossy needs deltas")

    def _check_gaussian(self) -> None:
        self._need_rho()

    def _check_gaussian_L(self) -> None:
        self._need_rho()
        _require(self.sources is not None and self.sources >= 2,
                 "gaussian-L needs L >= 2 sources")

    def _check_lemma_check(self) -> None:
        self._need_rho()
        _require(self.sources is None or self.deltas is None,
                 "lemma-check takes L or deltas, not both")
        if self.sources is not None:
            _require(self.sources >= 2, "lemma-check needs L >= 2 sources")

    def _check_property_suite(self) -> None:
        if self.a0 is not None:
            self._need_a0()
        if self.rho is not None:
            self._need_rho()

    def _need_a0(self) -> None:
        _require(self.a0 is not None and 0.0 < self.a0 < 0.5,
                 f"scenario {self.scenario} needs a0 in (0, 1/2), got {self.a0}")

    def _need_rho(self) -> None:
        _require(self.rho is not None and 0.0 < self.rho < 1.0,
                 f"scenario {self.scenario} needs rho in (0, 1), got {self.rho}")

    # -- canonical form -----------------------------------------------------

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            if isinstance(value, tuple):
                value = list(value)
            out[_JSON_ALIASES.get(f.name, f.name)] = value
        return out

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    def replace(self, **changes) -> "ExperimentConfig":
        merged = {f.name: getattr(self, f.name) for f in fields(self)}
        merged.update(changes)
        return ExperimentConfig(**merged)


def config_from_dict(data: dict) -> ExperimentConfig:
    names = {f.name for f in fields(ExperimentConfig)}
    reverse = {alias: name for name, alias in _JSON_ALIASES.items()}
    kwargs = {}
    for key, value in data.items():
        name = reverse.get(key, key)
        if name not in names:
            raise ConfigError(f"unknown config key {key!r}")
        kwargs[name] = value
    missing = [k for k in ("scenario", "n", "seeds") if k not in kwargs]
    if missing:
        raise ConfigError(f"config is missing required keys: {', '.join(missing)}")
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path, *, seeds=None, out=None) -> ExperimentConfig:
    """Read a JSON config file and apply command-line overrides."""
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    config = config_from_dict(data)
    changes = {}
    if seeds:
        changes["seeds"] = tuple(seeds)
    if out is not None:
        changes["out"] = out
    return config.replace(**changes) if changes else config
