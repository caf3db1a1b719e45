"""2-Wasserstein distances between distributions on the real line.

In one dimension the optimal coupling pairs equal quantiles, so

    W_2(a, b)^2 = int_0^1 (Q_a(u) - Q_b(u))^2 du.

The integral is taken in the normal-score variable ``t`` (``u = Phi(t)``),
where quantile functions of near-Gaussian laws are close to linear, over
``u in [delta, 1 - delta]``. The t-range is split at every point where a
quantile function has a kink, and each piece is integrated with composite
Gauss-Legendre panels whose number doubles until the estimate settles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtr, ndtri, ndtri_exp

from .posterior import MarginalPosterior

__all__ = [
    "QuantileFn",
    "W2Estimate",
    "NonConvergenceError",
    "w2_univariate",
    "w2_to_dirac",
    "w2_posterior_batch",
    "product_w2_sq",
]

_GL_ORDER = 16
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(_GL_ORDER)
CLIP = 1e-12
# relative rounding error assumed in a computed quantile value
_QUANTILE_ROUNDOFF = 1e-13


class NonConvergenceError(RuntimeError):
    def __init__(self, message, estimate):
        super().__init__(message)
        self.estimate = estimate


@dataclass(frozen=True)
class QuantileFn:
    """A quantile function ``fn(u, uc) -> theta`` with ``uc = 1 - u`` supplied
    separately so upper tails keep their precision. ``kinks`` lists the
    ``u``-values where the function is not smooth."""

    fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    kinks: Sequence[float] = ()

    def __call__(self, u, uc=None):
        u = np.asarray(u, dtype=float)
        if uc is None:
            uc = 1.0 - u
        return np.asarray(self.fn(u, np.asarray(uc, dtype=float)), dtype=float)

    @classmethod
    def gaussian(cls, mu: float, sigma: float) -> "QuantileFn":
        def fn(u, uc):
            return np.where(u < 0.5, mu + sigma * ndtri(u), mu - sigma * ndtri(uc))

        return cls(fn)

    @classmethod
    def dirac(cls, c: float) -> "QuantileFn":
        return cls(lambda u, uc: np.full(np.shape(u), float(c)))

    @classmethod
    def of_posterior(cls, p: MarginalPosterior) -> "QuantileFn":
        if np.ndim(p.x) or np.ndim(p.n) or np.ndim(p.gamma):
            raise ValueError("QuantileFn.of_posterior takes a single posterior, not a batch")
        return cls(lambda u, uc: p.quantile(u, uc=uc), kinks=(1.0 - p.w_plus,))


@dataclass(frozen=True)
class W2Estimate:
    value: float
    tail_bound: float
    panels: int


def _t_breaks(kink_t, t_max):
    """Sorted segment boundaries in t for each row; kinks clipped to the range."""
    k = np.clip(np.sort(kink_t, axis=-1), -t_max, t_max)
    lo = np.full(k.shape[:-1] + (1,), -t_max)
    hi = np.full(k.shape[:-1] + (1,), t_max)
    return np.concatenate([lo, k, hi], axis=-1)


def _nodes(breaks, panels):
    """Gauss-Legendre nodes/weights in t for each row of ``breaks``."""
    edges_frac = np.linspace(0.0, 1.0, panels + 1)
    a = breaks[..., :-1, None]
    b = breaks[..., 1:, None]
    pa = a + (b - a) * edges_frac[:-1]
    pb = a + (b - a) * edges_frac[1:]
    half = 0.5 * (pb - pa)
    mid = 0.5 * (pb + pa)
    t = mid[..., None] + half[..., None] * _GL_NODES
    w = half[..., None] * _GL_WEIGHTS
    shape = breaks.shape[:-1] + (-1,)
    return t.reshape(shape), w.reshape(shape)


def _integrate(diff_sq, t, w):
    """Integral of the squared gap and the largest quantile magnitude seen."""
    dens = np.exp(-0.5 * t * t) / np.sqrt(2.0 * np.pi)
    gap_sq, scale = diff_sq(t)
    return np.sum(gap_sq * dens * w, axis=-1), np.max(scale, axis=-1)


def _settled(cur, prev, scale, rtol):
    # a gap of g computed from quantiles of size q carries an error of about
    # eps*q, i.e. about 2 g eps q in g^2: below that, doubling cannot help
    noise = _QUANTILE_ROUNDOFF * scale
    return np.abs(cur - prev) <= rtol * np.abs(cur) + noise * (2.0 * np.sqrt(np.abs(cur)) + noise)


def w2_univariate(a: QuantileFn, b: QuantileFn, *, rtol: float = 1e-8, clip: float = CLIP,
                  max_doublings: int = 12, full: bool = False):
    """``W_2`` between two laws given by their quantile functions.

    Returns the distance, or a :class:`W2Estimate` with ``full=True``. The
    clipped tails ``u < clip`` and ``u > 1 - clip`` are not integrated;
    ``tail_bound`` estimates their contribution to ``W_2^2`` from the
    quantile gap at and beyond the clip points.
    """
    t_max = -float(ndtri(clip))
    kinks = [float(ndtri(k)) for k in (*a.kinks, *b.kinks) if 0.0 < k < 1.0]
    breaks = _t_breaks(np.array(kinks, dtype=float), t_max)

    def diff_sq(t):
        u, uc = ndtr(t), ndtr(-t)
        qa, qb = a(u, uc), b(u, uc)
        return (qa - qb) ** 2, np.maximum(np.abs(qa), np.abs(qb))

    panels = 1
    prev, _ = _integrate(diff_sq, *_nodes(breaks, panels))
    for _ in range(max_doublings):
        panels *= 2
        cur, scale = _integrate(diff_sq, *_nodes(breaks, panels))
        if _settled(cur, prev, scale, rtol):
            break
        prev = cur
    else:
        raise NonConvergenceError(
            f"W2 quadrature did not settle after {max_doublings} doublings", np.sqrt(max(cur, 0.0)))
    tail = _tail_bound(lambda u, uc: a(u, uc) - b(u, uc), clip)
    value = float(np.sqrt(max(cur, 0.0)))
    if full:
        return W2Estimate(value, tail, panels)
    return value


def _tail_bound(gap, clip):
    # gap evaluated at the clip point and six decades further out
    bound = 0.0
    for u in (clip, clip * 1e-6):
        lo = float(gap(np.array(u), np.array(1.0 - u)))
        hi = float(gap(np.array(1.0 - u), np.array(u)))
        bound = max(bound, lo * lo + hi * hi)
    return clip * bound


def w2_to_dirac(p: MarginalPosterior, c) -> float:
    """``W_2(p, delta_c) = sqrt(E_p[(theta - c)^2])`` from the closed-form moments."""
    return np.sqrt(p.second_moment_about(c))


def w2_posterior_batch(pa: MarginalPosterior, pb: MarginalPosterior, *, rtol: float = 1e-7,
                       clip: float = CLIP, max_doublings: int = 8):
    """Squared ``W_2`` between matching entries of two posterior batches.

    ``pa`` and ``pb`` must describe 1-d batches of equal length. Each entry
    doubles its own panel count until its estimate settles to ``rtol`` (or to
    the rounding floor of its quantile values, when the two laws nearly
    coincide); only unsettled entries are re-evaluated.
    """
    n_a, g_a, x_a = (np.atleast_1d(v) for v in pa._arrays)
    n_b, g_b, x_b = (np.atleast_1d(v) for v in pb._arrays)
    if n_a.shape != n_b.shape or n_a.ndim != 1:
        raise ValueError("posterior batches must be 1-d and of equal length")
    t_max = -float(ndtri(clip))
    kink_t = np.stack([ndtri_exp(np.atleast_1d(pa._log_weights[1])),
                       ndtri_exp(np.atleast_1d(pb._log_weights[1]))], axis=-1)
    breaks = _t_breaks(kink_t, t_max)

    def estimate(idx, panels):
        qa = MarginalPosterior(n_a[idx, None], g_a[idx, None], x_a[idx, None])
        qb = MarginalPosterior(n_b[idx, None], g_b[idx, None], x_b[idx, None])

        def diff_sq(t):
            u, uc = ndtr(t), ndtr(-t)
            va, vb = qa.quantile(u, uc=uc), qb.quantile(u, uc=uc)
            return (va - vb) ** 2, np.maximum(np.abs(va), np.abs(vb))

        return _integrate(diff_sq, *_nodes(breaks[idx], panels))

    idx = np.arange(n_a.size)
    panels = 1
    prev, _ = estimate(idx, panels)
    out = prev.copy()
    for _ in range(max_doublings):
        panels *= 2
        cur, scale = estimate(idx, panels)
        out[idx] = cur
        settled = _settled(cur, prev, scale, rtol)
        idx, prev = idx[~settled], cur[~settled]
        if idx.size == 0:
            return out
    raise NonConvergenceError(
        f"batched W2 quadrature: {idx.size} entries did not settle after "
        f"{max_doublings} doublings", out)


def product_w2_sq(weights, per_coord_w2) -> float:
    """``sum_l weights_l * W_l^2`` for product measures with independent coordinates."""
    w = np.asarray(weights, dtype=float)
    d = np.asarray(per_coord_w2, dtype=float)
    if w.shape != d.shape:
        raise ValueError(f"length mismatch: {w.shape} vs {d.shape}")
    return float(np.sum(w * d * d))
