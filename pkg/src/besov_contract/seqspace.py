"""Functions on [0,1]^d represented by their wavelet coefficient sequences.

Coefficients use a single index ``l = 1, 2, ...``; all norms depend on the
index only through powers of ``l``, so no (level, location) bookkeeping is
kept. Infinite sequences are truncated at ``l_max``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import rng

__all__ = [
    "BesovIndex",
    "CoefSeq",
    "NoiseModel",
    "besov_norm",
    "sobolev_distance",
    "sobolev_weights",
    "sample_observation",
    "read_csv",
    "write_csv",
    "read_json",
    "write_json",
]


@dataclass(frozen=True, eq=False)
class CoefSeq:
    """Coefficients ``f_1, ..., f_{l_max}`` of a function on ``[0,1]^d``."""

    d: int
    coefs: np.ndarray

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError("dimension d must be a positive integer")
        arr = np.array(self.coefs, dtype=float, copy=True).reshape(-1)
        if arr.size < 1:
            raise ValueError("a coefficient sequence needs at least one entry")
        if not np.all(np.isfinite(arr)):
            raise ValueError("coefficients must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "coefs", arr)

    @property
    def l_max(self) -> int:
        return self.coefs.size

    @property
    def indices(self) -> np.ndarray:
        return np.arange(1, self.l_max + 1, dtype=float)

    def __len__(self):
        return self.l_max

    def __eq__(self, other):
        if not isinstance(other, CoefSeq):
            return NotImplemented
        return self.d == other.d and np.array_equal(self.coefs, other.coefs)

    @classmethod
    def zeros(cls, l_max: int, d: int = 1) -> "CoefSeq":
        return cls(d, np.zeros(l_max))

    @classmethod
    def unit(cls, l: int, l_max: int, d: int = 1) -> "CoefSeq":
        c = np.zeros(l_max)
        c[l - 1] = 1.0
        return cls(d, c)


@dataclass(frozen=True)
class BesovIndex:
    s: float
    p: float = 1.0

    def __post_init__(self):
        if not self.s >= 0:
            raise ValueError("smoothness s must be >= 0")
        if not self.p >= 1:
            raise ValueError("integrability p must be >= 1")


@dataclass(frozen=True)
class NoiseModel:
    """Observation ``X_l = f_l + W_l / sqrt(n)`` with ``W_l`` iid standard normal."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")

    @property
    def sd(self) -> float:
        return 1.0 / np.sqrt(self.n)


def besov_norm(f: CoefSeq, idx: BesovIndex) -> float:
    """``(sum_l l^{p(s/d+1/2)-1} |f_l|^p)^{1/p}`` over the retained coefficients."""
    l = f.indices
    expo = idx.p * (idx.s / f.d + 0.5) - 1.0
    terms = l**expo * np.abs(f.coefs) ** idx.p
    return float(np.sum(terms) ** (1.0 / idx.p))


def sobolev_weights(l_max: int, s: float, d: int) -> np.ndarray:
    """The ``H^s`` weights ``l^{2s/d}`` for ``l = 1..l_max``."""
    return np.arange(1, l_max + 1, dtype=float) ** (2.0 * s / d)


def sobolev_distance(f: CoefSeq, g: CoefSeq, s: float) -> float:
    if f.d != g.d:
        raise ValueError(f"dimension mismatch: {f.d} != {g.d}")
    if s < 0:
        raise ValueError("s must be >= 0")
    m = max(f.l_max, g.l_max)
    diff = np.zeros(m)
    diff[: f.l_max] += f.coefs
    diff[: g.l_max] -= g.coefs
    w = sobolev_weights(m, s, f.d)
    return float(np.sqrt(np.sum(w * diff * diff)))


def sample_observation(f0: CoefSeq, model: NoiseModel, seed: int, replicate: int = 0) -> CoefSeq:
    """Draw ``X^{(n)}`` around ``f0``.

    The standard normal attached to coefficient ``l`` is keyed by
    ``(seed, replicate, l)`` and does not depend on ``n``, so observations
    at different sample sizes share their noise (common random numbers).
    """
    z = rng.standard_normals(seed, f0.l_max, rng.OBSERVATION, replicate)
    return CoefSeq(f0.d, f0.coefs + z / np.sqrt(model.n))


def write_csv(f: CoefSeq, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["l", "value"])
        for l, v in enumerate(f.coefs, start=1):
            w.writerow([l, repr(float(v))])


def read_csv(path, d: int = 1) -> CoefSeq:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip() for h in header] != ["l", "value"]:
            raise ValueError(f"{path}: expected header 'l,value', got {header!r}")
        rows = [(int(r[0]), float(r[1])) for r in reader if r]
    idx = [r[0] for r in rows]
    if idx != list(range(1, len(rows) + 1)):
        raise ValueError(f"{path}: indices must run 1..l_max without gaps")
    return CoefSeq(d, [r[1] for r in rows])


def write_json(f: CoefSeq, path) -> None:
    Path(path).write_text(json.dumps({"d": f.d, "coefs": [float(v) for v in f.coefs]}))


def read_json(path) -> CoefSeq:
    obj = json.loads(Path(path).read_text())
    return CoefSeq(obj["d"], obj["coefs"])
