"""Ground-truth coefficient sequences in the Besov space B^beta_1."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .seqspace import CoefSeq

__all__ = ["TruthKind", "TruthSpec", "materialize", "tail_envelope", "scaled_coefficients"]


class TruthKind(str, enum.Enum):
    POLY_DECAY = "PolyDecay"
    SPARSE_SPIKES = "SparseSpikes"
    SELF_SIMILAR_RANDOM = "SelfSimilarRandom"


@dataclass(frozen=True)
class TruthSpec:
    """Recipe for a truth ``f0``.

    ``PolyDecay`` and ``SelfSimilarRandom`` have ``|f_{0,l}| =
    amplitude * l^{-beta/d-1/2} * (1+ln l)^{-decay_damping}``, which keeps the
    B^beta_1 norm finite exactly when ``decay_damping > 1``.

    ``strict=False`` drops the ``beta > d/2`` requirement (only ``beta > 0``
    is kept); the sequences are still in B^beta_1 but outside the range
    covered by the contraction theorem.
    """

    kind: TruthKind
    beta: float
    d: int = 1
    amplitude: float = 1.0
    spike_positions: tuple = ()
    decay_damping: float = 2.0
    seed: int = 0
    strict: bool = True

    def __post_init__(self):
        object.__setattr__(self, "kind", TruthKind(self.kind))
        object.__setattr__(
            self, "spike_positions", tuple((int(i), float(v)) for i, v in self.spike_positions)
        )
        if int(self.d) != self.d or self.d < 1:
            raise ValueError("d must be a positive integer")
        if self.strict and not self.beta > self.d / 2:
            raise ValueError(f"beta must exceed d/2 = {self.d / 2}, got {self.beta}")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if not self.amplitude > 0:
            raise ValueError("amplitude must be positive")
        if self.kind is not TruthKind.SPARSE_SPIKES and not self.decay_damping > 1:
            raise ValueError("decay_damping must exceed 1 for B^beta_1 membership")
        if self.kind is TruthKind.SPARSE_SPIKES:
            if any(i < 1 for i, _ in self.spike_positions):
                raise ValueError("spike indices start at 1")

    @property
    def decay_exponent(self) -> float:
        return self.beta / self.d + 0.5


def _envelope(spec: TruthSpec, l: np.ndarray) -> np.ndarray:
    return spec.amplitude * l ** (-spec.decay_exponent) * (1.0 + np.log(l)) ** (-spec.decay_damping)


def materialize(spec: TruthSpec, l_max: int) -> CoefSeq:
    if l_max < 1:
        raise ValueError("l_max must be >= 1")
    l = np.arange(1, l_max + 1, dtype=float)
    if spec.kind is TruthKind.POLY_DECAY:
        coefs = _envelope(spec, l)
    elif spec.kind is TruthKind.SELF_SIMILAR_RANDOM:
        signs = np.where(rng.uniforms(spec.seed, l_max, rng.TRUTH_SIGNS) < 0.5, -1.0, 1.0)
        coefs = _envelope(spec, l) * signs
    else:
        coefs = np.zeros(l_max)
        for i, v in spec.spike_positions:
            if i > l_max:
                raise ValueError(f"spike index {i} exceeds l_max = {l_max}")
            coefs[i - 1] = v
    return CoefSeq(spec.d, coefs)


def tail_envelope(spec: TruthSpec, l_max: int) -> float:
    """A constant ``A`` with ``|f_{0,l}| <= A * l^{-beta/d-1/2}`` for every ``l > l_max``."""
    if spec.kind is TruthKind.SPARSE_SPIKES:
        if any(i > l_max for i, _ in spec.spike_positions):
            raise ValueError(f"spike beyond l_max = {l_max}")
        return 0.0
    return spec.amplitude * (1.0 + np.log(l_max + 1.0)) ** (-spec.decay_damping)


def scaled_coefficients(f0: CoefSeq, beta: float) -> np.ndarray:
    """``t_{0,l} = l^{1/2+beta/d} f_{0,l}``; bounded and vanishing for B^beta_1 truths."""
    return f0.indices ** (0.5 + beta / f0.d) * f0.coefs
