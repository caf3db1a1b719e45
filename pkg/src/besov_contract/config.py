"""Experiment configuration and its INI file format.

Example::

    [model]
    beta = 1
    d = 1
    s = 0

    [truth]
    kind = PolyDecay
    amplitude = 1.0
    decay_damping = 2

    [experiment]
    n_grid = 1e2, 1e3, 1e4, 1e5, 1e6
    replicates = 200
    seed = 7

    [output]
    dir = results

Numeric fields accept scientific notation. Spikes for ``SparseSpikes`` are
written ``spikes = 1:3.0, 17:-0.5``.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path

from .truths import TruthKind, TruthSpec

__all__ = ["ConfigError", "ExperimentConfig", "default_l_max", "load_config", "parse_config"]


class ConfigError(ValueError):
    """Raised for unreadable or invalid experiment configurations."""


def default_l_max(beta: float, d: int, n_max: float) -> int:
    """``ceil(8 n_max^{d/(2 beta + d)})``, a multiple of the largest ``L_n``."""
    return int(math.ceil(8.0 * n_max ** (d / (2.0 * beta + d))))


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to run a contraction experiment.

    ``strict=False`` lifts the requirements ``beta > d/2`` and
    ``s < beta - d/2`` (keeping ``beta > 0`` and ``0 <= s < beta``) so that
    boundary cases can be run as explorations outside the theorem.
    """

    beta: float
    d: int
    s: float
    truth: TruthSpec
    n_grid: tuple
    replicates: int = 200
    l_max: int | None = None
    mc_draws: int = 1000
    series_replicates: int | None = None
    seed: int = 0
    tail_tolerance: float = 0.01
    slope_tolerance: float = 0.05
    strict: bool = True
    lipscan_pairs: tuple = ((0.0, 1e-6), (0.5, 1.0), (-2.0, 3.0), (10.0, 10.5))
    lipscan_beyond_threshold: bool = False
    normalizer_perturbation: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        if int(self.d) != self.d or self.d < 1:
            raise ConfigError("d must be a positive integer")
        if not self.beta > 0:
            raise ConfigError("beta must be positive")
        if self.strict:
            if not self.beta > self.d / 2:
                raise ConfigError(f"beta = {self.beta} must exceed d/2 = {self.d / 2}")
            if not 0 <= self.s < self.beta - self.d / 2:
                raise ConfigError(
                    f"s = {self.s} must lie in [0, beta - d/2) = [0, {self.beta - self.d / 2})")
        elif not 0 <= self.s < self.beta:
            raise ConfigError(f"s = {self.s} must lie in [0, beta)")
        if self.truth.beta != self.beta or self.truth.d != self.d:
            raise ConfigError("truth beta/d must match the model")
        if len(self.n_grid) < 4:
            raise ConfigError("n_grid needs at least 4 points for slope fitting")
        if any(n < 1 for n in self.n_grid):
            raise ConfigError("n_grid entries must be positive")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ConfigError("n_grid must be strictly increasing")
        if self.replicates < 1 or self.mc_draws < 1:
            raise ConfigError("replicates and mc_draws must be positive")
        if self.series_replicates is not None and self.series_replicates < 1:
            raise ConfigError("series_replicates must be positive")
        if self.l_max is not None and self.l_max < 1:
            raise ConfigError("l_max must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if not 0 < self.tail_tolerance < 1:
            raise ConfigError("tail_tolerance must lie in (0, 1)")
        if any(x == y for x, y in self.lipscan_pairs):
            raise ConfigError("lipscan pairs need x != y")

    @property
    def l_max_effective(self) -> int:
        if self.l_max is not None:
            return int(self.l_max)
        return default_l_max(self.beta, self.d, self.n_grid[-1])

    @property
    def rate_exponent(self) -> float:
        """Exponent of ``epsilon_n``: ``-(beta - s)/(2 beta + d)``."""
        return -(self.beta - self.s) / (2.0 * self.beta + self.d)

    def with_(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["truth"]["kind"] = self.truth.kind.value
        out["l_max"] = self.l_max_effective
        return out

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _num(section, key, default=None, cast=float):
    raw = section.get(key)
    if raw is None:
        if default is None:
            raise ConfigError(f"[{section.name}] missing required key '{key}'")
        return default
    try:
        v = float(raw)
    except ValueError:
        raise ConfigError(f"[{section.name}] {key} = {raw!r} is not a number") from None
    if cast is int:
        if v != int(v):
            raise ConfigError(f"[{section.name}] {key} = {raw!r} must be an integer")
        return int(v)
    return v


def _list(raw, cast=float):
    return [cast(float(v)) for v in raw.replace(";", ",").split(",") if v.strip()]


def _pairs(raw, sep):
    out = []
    for item in raw.replace(";", ",").split(","):
        item = item.strip()
        if not item:
            continue
        a, b = item.split(sep)
        out.append((float(a), float(b)))
    return out


def parse_config(text: str, *, seed: int | None = None) -> tuple[ExperimentConfig, dict]:
    """Parse INI text; returns the config and the ``[output]`` options."""
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"malformed config: {e}") from None
    for name in ("model", "truth", "experiment"):
        if not cp.has_section(name):
            raise ConfigError(f"missing section [{name}]")
    m, t, e = cp["model"], cp["truth"], cp["experiment"]
    try:
        strict = e.getboolean("strict_theorem_range", True)
        beta = _num(m, "beta")
        d = _num(m, "d", 1, int)
        kind = TruthKind(t.get("kind", "PolyDecay"))
        spikes = _pairs(t.get("spikes", ""), ":")
        truth = TruthSpec(
            kind=kind, beta=beta, d=d,
            amplitude=_num(t, "amplitude", 1.0),
            spike_positions=tuple((int(i), v) for i, v in spikes),
            decay_damping=_num(t, "decay_damping", 2.0),
            seed=_num(t, "seed", 0, int),
            strict=strict,
        )
        l_max = e.get("l_max")
        series_reps = e.get("series_replicates")
        pairs = e.get("lipscan_pairs")
        cfg = ExperimentConfig(
            beta=beta, d=d, s=_num(m, "s", 0.0), truth=truth,
            n_grid=tuple(_list(e.get("n_grid", ""), int)),
            replicates=_num(e, "replicates", 200, int),
            l_max=None if l_max is None else _num(e, "l_max", cast=int),
            mc_draws=_num(e, "mc_draws", 1000, int),
            series_replicates=None if series_reps is None else _num(e, "series_replicates", cast=int),
            seed=_num(e, "seed", 0, int) if seed is None else int(seed),
            tail_tolerance=_num(e, "tail_tolerance", 0.01),
            slope_tolerance=_num(e, "slope_tolerance", 0.05),
            strict=strict,
            lipscan_pairs=tuple(_pairs(pairs, ":")) if pairs else ExperimentConfig.lipscan_pairs,
            lipscan_beyond_threshold=e.getboolean("lipscan_beyond_threshold", False),
            normalizer_perturbation=_num(m, "normalizer_perturbation", 0.0),
        )
    except ConfigError:
        raise
    except ValueError as err:
        raise ConfigError(str(err)) from None
    output = dict(cp["output"]) if cp.has_section("output") else {}
    return cfg, output


def load_config(path, *, seed: int | None = None) -> tuple[ExperimentConfig, dict]:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config {p}: {err.strerror or err}") from None
    return parse_config(text, seed=seed)
