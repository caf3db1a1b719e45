"""Marginal posterior of one coefficient under a Laplace prior.

For a single coefficient with observation ``x``, noise level ``1/n`` and
prior density proportional to ``exp(-gamma*|theta|)`` the posterior is

    pi(theta | x)  ∝  exp(-(n/2)(theta - x)^2 - gamma*|theta|).

Splitting at zero gives a two-piece mixture of truncated normals with common
standard deviation ``sd = n^{-1/2}``: the positive piece is
``N(x - gamma/n, 1/n)`` restricted to ``[0, inf)`` and the negative piece is
``N(x + gamma/n, 1/n)`` restricted to ``(-inf, 0]``. With

    z_- = sqrt(n/2) * (gamma/n - x),    z_+ = sqrt(n/2) * (gamma/n + x)

the normalizer is

    Z(x) = sqrt(pi/(2n)) * exp(-n x^2/2) * [erfcx(z_-) + erfcx(z_+)].

Expanding ``erfcx(z) = exp(z^2) erfc(z)`` and using
``z_-^2 - n x^2/2 = gamma^2/(2n) - gamma x`` (and the same with ``+x`` for
``z_+``) recovers the textbook form

    Z(x) = sqrt(pi/(2n)) * exp(gamma^2/(2n))
           * [exp(-gamma x) erfc(z_-) + exp(gamma x) erfc(z_+)],

whose ``exp(gamma^2/(2n))`` factor overflows long before ``Z`` does. Branch
masses are therefore kept as logs and combined with ``logaddexp``.

Every quantity is vectorised: ``n``, ``gamma`` and ``x`` may be arrays that
broadcast against each other, and a ``MarginalPosterior`` built from arrays
describes a batch of independent posteriors.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import ndtri, ndtri_exp

from .specfun import DomainError, erfcx, log_erfc, log_erfcx

__all__ = [
    "PriorScale",
    "prior_scale",
    "MarginalPosterior",
    "MixtureDecomposition",
    "soft_threshold",
    "tail_moments",
]

_SQRT2 = np.sqrt(2.0)
_LOG2 = np.log(2.0)
_SQRT_2_OVER_PI = np.sqrt(2.0 / np.pi)
_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)
_MILLS_CF_TERMS = 120
_MILLS_CF_LO = 3.0
_ROBERT_LO = 4.0
_ASYMPTOTIC_GUESS_LO = 30.0


def prior_scale(l, beta: float, d: int):
    """Laplace rate ``gamma_l = l^{1/2 + beta/d}`` of coefficient ``l``."""
    return np.asarray(l, dtype=float) ** (0.5 + beta / d)


@dataclass(frozen=True)
class PriorScale:
    beta: float
    d: int
    l: int

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.d < 1 or self.l < 1:
            raise ValueError("d and l must be positive integers")

    @property
    def gamma(self) -> float:
        return float(prior_scale(self.l, self.beta, self.d))


def soft_threshold(x, lam):
    """``sign(x) * max(|x| - lam, 0)``."""
    x = np.asarray(x, dtype=float)
    out = np.sign(x) * np.maximum(np.abs(x) - lam, 0.0)
    return float(out) if out.ndim == 0 else out


def _log_phibar(a):
    """log P(N(0,1) >= a)."""
    return log_erfc(np.asarray(a) / _SQRT2) - _LOG2


def _inv_mills(b):
    """``phi(b) / P(N(0,1) >= b)``; zero where the ratio underflows."""
    with np.errstate(over="ignore"):
        return _SQRT_2_OVER_PI / erfcx(np.asarray(b) / _SQRT2)


def _log_tail_ratio(a, delta):
    """``log P(Y >= a + delta) - log P(Y >= a)`` for ``delta >= 0``.

    For ``a >= 0`` the Gaussian factors are combined as ``delta*(2a+delta)/2``
    so nothing cancels when ``a`` is large.
    """
    a, delta = np.broadcast_arrays(np.asarray(a, float), np.asarray(delta, float))
    b = a + delta
    out = np.empty(a.shape)
    pos = a >= 0
    if np.any(pos):
        ap, dp, bp = a[pos], delta[pos], b[pos]
        out[pos] = (log_erfcx(bp / _SQRT2) - log_erfcx(ap / _SQRT2)
                    - 0.5 * dp * (ap + bp))
    neg = ~pos
    if np.any(neg):
        out[neg] = _log_phibar(b[neg]) - _log_phibar(a[neg])
    return out


def tail_moments(a):
    """Moments of ``Y ~ N(0,1)`` conditioned on ``Y >= a``.

    Returns ``(u, g)`` with ``u = E[Y] - a >= 0`` and ``g = Var[Y]``.

    For ``a >= 3`` both come from the continued fraction of the inverse Mills
    ratio, ``E[Y] = a + 1/D``, ``D = a + 2/D2``, ``D2 = a + 3/D3``, ...; the
    variance ``1 - E[Y](E[Y] - a)`` then simplifies to
    ``(a^2 + 4 - 9/D3^2) / (a*D2 + 2)^2``, which has no cancellation.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    u = np.empty_like(a)
    g = np.empty_like(a)
    lo = a < _MILLS_CF_LO
    if np.any(lo):
        al = a[lo]
        lam = _inv_mills(al)
        u[lo] = lam - al
        g[lo] = 1.0 - lam * u[lo]
    hi = ~lo
    if np.any(hi):
        ah = a[hi]
        t = ah.copy()
        for k in range(_MILLS_CF_TERMS, 3, -1):
            t = ah + k / t
        d3 = t
        d2 = ah + 3.0 / d3
        d1 = ah + 2.0 / d2
        u[hi] = 1.0 / d1
        g[hi] = (ah * ah + 4.0 - 9.0 / (d3 * d3)) / (ah * d2 + 2.0) ** 2
    return u, g


def _scalarize(v):
    v = np.asarray(v)
    return float(v) if v.ndim == 0 else v


@dataclass(frozen=True)
class MixtureDecomposition:
    """Posterior written as ``w_plus * TN+(m_plus, sd^2) + w_minus * TN-(m_minus, sd^2)``."""

    w_plus: object
    m_plus: object
    m_minus: object
    sd: object
    log_Z: object
    w_minus: object = None

    def __post_init__(self):
        # a tiny branch mass loses its digits in 1 - w_plus; callers that know
        # it from its own log-mass pass it explicitly
        if self.w_minus is None:
            object.__setattr__(self, "w_minus", _scalarize(1.0 - np.asarray(self.w_plus, float)))

    def log_density(self, theta):
        theta = np.asarray(theta, dtype=float)
        theta, wp, wm, mp, mm, sd = np.broadcast_arrays(
            theta, *(np.asarray(v, float) for v in
                     (self.w_plus, self.w_minus, self.m_plus, self.m_minus, self.sd)))
        out = np.empty(theta.shape)
        pos = theta >= 0
        # positive piece: lower truncation a = -m/sd, offset delta = theta/sd
        for mask, w, m, sign in ((pos, wp, mp, 1.0), (~pos, wm, mm, -1.0)):
            if not np.any(mask):
                continue
            s = sd[mask]
            a = -sign * m[mask] / s
            delta = sign * theta[mask] / s
            with np.errstate(divide="ignore"):
                logw = np.log(w[mask])
            # -(a+delta)^2/2 - log P(Y >= a); for a >= 0 both carry -a^2/2,
            # which is dropped from each
            log_tail = np.where(
                a >= 0,
                log_erfcx(np.maximum(a, 0.0) / _SQRT2) - _LOG2,
                _log_phibar(np.minimum(a, 0.0)),
            )
            quad = np.where(a >= 0,
                            -0.5 * delta * (2.0 * a + delta),
                            -0.5 * (a + delta) ** 2)
            out[mask] = logw + quad - np.log(s) - _LOG_SQRT_2PI - log_tail
        return _scalarize(out)

    def density(self, theta):
        return _scalarize(np.exp(self.log_density(theta)))


@dataclass(frozen=True)
class MarginalPosterior:
    """Posterior ``∝ exp(-(n/2)(theta-x)^2 - gamma|theta|)`` of a single coefficient."""

    n: object
    gamma: object
    x: object

    def __post_init__(self):
        n = np.asarray(self.n, dtype=float)
        g = np.asarray(self.gamma, dtype=float)
        x = np.asarray(self.x, dtype=float)
        if np.any(~(n >= 1)) or np.any(~np.isfinite(n)):
            raise ValueError("n must be >= 1")
        if np.any(~(g > 0)) or np.any(~np.isfinite(g)):
            raise ValueError("gamma must be positive and finite")
        if np.any(~np.isfinite(x)):
            raise ValueError("x must be finite")

    # -- shared pieces -----------------------------------------------------

    @cached_property
    def _arrays(self):
        return np.broadcast_arrays(
            np.asarray(self.n, float), np.asarray(self.gamma, float), np.asarray(self.x, float))

    @cached_property
    def sd(self):
        return 1.0 / np.sqrt(self._arrays[0])

    @cached_property
    def a_plus(self):
        """Standardised lower truncation point of the positive piece."""
        n, g, x = self._arrays
        return (g / n - x) * np.sqrt(n)

    @cached_property
    def a_minus(self):
        n, g, x = self._arrays
        return (g / n + x) * np.sqrt(n)

    @cached_property
    def _log_masses(self):
        n, g, x = self._arrays
        c0 = 0.5 * np.log(np.pi / (2.0 * n))
        out = []
        for z, sign in ((self.a_plus / _SQRT2, -1.0), (self.a_minus / _SQRT2, 1.0)):
            # z >= 0: peak of the piece sits at 0, scale by exp(-n x^2/2)
            # z < 0: peak inside the half-line, scale by the peak value
            inside = g * (g / (2.0 * n) + sign * x) + log_erfc(np.minimum(z, 0.0))
            at_zero = -0.5 * n * x * x + log_erfcx(np.maximum(z, 0.0))
            out.append(c0 + np.where(z >= 0, at_zero, inside))
        return tuple(out)

    @cached_property
    def _log_Z(self):
        lp, lm = self._log_masses
        return np.logaddexp(lp, lm)

    @cached_property
    def _log_weights(self):
        lp, lm = self._log_masses
        return lp - self._log_Z, lm - self._log_Z

    @cached_property
    def _moments(self):
        sd = self.sd
        wp = np.exp(self._log_weights[0])
        wm = np.exp(self._log_weights[1])
        shape = wp.shape
        up, gp = tail_moments(self.a_plus.ravel())
        um, gm = tail_moments(self.a_minus.ravel())
        up, gp, um, gm = (v.reshape(shape) for v in (up, gp, um, gm))
        mu_p = sd * up
        mu_m = -sd * um
        mean = wp * mu_p + wm * mu_m
        var = (wp * (sd * sd * gp + (mu_p - mean) ** 2)
               + wm * (sd * sd * gm + (mu_m - mean) ** 2))
        return mean, var

    # -- public API --------------------------------------------------------

    def log_normalizer(self):
        """``log int exp(-(n/2)(theta-x)^2 - gamma|theta|) dtheta``."""
        return _scalarize(self._log_Z)

    def mixture(self) -> MixtureDecomposition:
        n, g, x = self._arrays
        return MixtureDecomposition(
            w_plus=_scalarize(np.exp(self._log_weights[0])),
            m_plus=_scalarize(x - g / n),
            m_minus=_scalarize(x + g / n),
            sd=_scalarize(self.sd),
            log_Z=_scalarize(self._log_Z),
            w_minus=_scalarize(np.exp(self._log_weights[1])),
        )

    @property
    def w_plus(self):
        return _scalarize(np.exp(self._log_weights[0]))

    def mean(self):
        return _scalarize(self._moments[0])

    def variance(self):
        return _scalarize(self._moments[1])

    def second_moment_about(self, c):
        """``E[(theta - c)^2]``, i.e. the squared 2-Wasserstein distance to ``delta_c``."""
        mean, var = self._moments
        return _scalarize(var + (mean - np.asarray(c, float)) ** 2)

    def log_density(self, theta):
        n, g, x = self._arrays
        theta = np.asarray(theta, dtype=float)
        return _scalarize(-0.5 * n * (theta - x) ** 2 - g * np.abs(theta) - self._log_Z)

    def density(self, theta):
        return _scalarize(np.exp(self.log_density(theta)))

    def map_estimate(self):
        n, g, x = self._arrays
        return soft_threshold(x, g / n)

    def cdf(self, theta):
        return _scalarize(self._cdf_sf(theta)[0])

    def sf(self, theta):
        return _scalarize(self._cdf_sf(theta)[1])

    def _cdf_sf(self, theta):
        theta = np.asarray(theta, dtype=float)
        lwp, lwm = self._log_weights
        theta, sd, ap, am, lwp, lwm = np.broadcast_arrays(
            theta, self.sd, self.a_plus, self.a_minus, lwp, lwm)
        cdf = np.empty(theta.shape)
        sf = np.empty(theta.shape)
        pos = theta >= 0
        if np.any(pos):
            tail = np.exp(lwp[pos] + _log_tail_ratio(ap[pos], theta[pos] / sd[pos]))
            sf[pos] = tail
            cdf[pos] = 1.0 - tail
        neg = ~pos
        if np.any(neg):
            head = np.exp(lwm[neg] + _log_tail_ratio(am[neg], -theta[neg] / sd[neg]))
            cdf[neg] = head
            sf[neg] = 1.0 - head
        return cdf, sf

    def quantile(self, u, uc=None, polish: bool = True):
        """Inverse CDF, inverted inside the branch that contains ``u``.

        ``uc`` may carry ``1 - u`` computed more accurately than the
        subtraction (upper tail). A closed-form normal-quantile guess is
        refined by safeguarded Newton steps on the branch's log tail
        probability (bisection whenever a Newton step leaves the current
        bracket).
        """
        u = np.asarray(u, dtype=float)
        uc = 1.0 - u if uc is None else np.asarray(uc, dtype=float)
        if np.any(~((u > 0) & (uc > 0) & (u <= 1) & (uc <= 1))):
            raise DomainError("quantile: u must lie in (0, 1)")
        lwp, lwm = self._log_weights
        u, uc, sd, ap, am, lwp, lwm = np.broadcast_arrays(
            u, uc, self.sd, self.a_plus, self.a_minus, lwp, lwm)
        neg = np.log(u) <= lwm
        a = np.where(neg, am, ap)
        with np.errstate(divide="ignore"):
            target = np.where(neg, np.log(u) - lwm, np.log(uc) - lwp)
        target = np.minimum(target, 0.0)
        delta = _solve_tail(a.ravel(), target.ravel(), polish).reshape(a.shape)
        theta = np.where(neg, -sd * delta, sd * delta)
        return _scalarize(theta)

    def sample(self, size=None, *, rng: np.random.Generator):
        """Exact draws from the posterior.

        A branch is picked with probability ``w_plus``; the one-sided
        truncated normal is drawn by inverse CDF, or by exponential
        rejection when the truncation point lies more than 4 sd into the
        tail.
        """
        lwp, _ = self._log_weights
        shape = np.broadcast_shapes(np.shape(lwp), () if size is None else tuple(np.atleast_1d(size)))
        sd, ap, am, lwp = (np.broadcast_to(v, shape) for v in (self.sd, self.a_plus, self.a_minus, lwp))
        pick = rng.random(shape)
        positive = np.log(pick) < lwp
        a = np.where(positive, ap, am)
        delta = _one_sided_normal(a.ravel(), rng).reshape(shape)
        out = np.where(positive, sd * delta, -sd * delta)
        return _scalarize(out)


def _one_sided_normal(a, rng):
    """Draw ``Y - a`` for ``Y ~ N(0,1)`` conditioned on ``Y >= a``."""
    out = np.empty(a.shape)
    tail = a > _ROBERT_LO
    body = ~tail
    if np.any(body):
        ab = a[body]
        v = rng.random(ab.shape)
        # P(Y >= a + delta) = v * P(Y >= a), solved in log space
        y = -ndtri_exp(np.log(v) + _log_phibar(ab))
        out[body] = np.maximum(y - ab, 0.0)
    if np.any(tail):
        at = a[tail]
        alpha = 0.5 * (at + np.sqrt(at * at + 4.0))
        res = np.empty(at.shape)
        todo = np.arange(at.size)
        while todo.size:
            al = alpha[todo]
            d = rng.exponential(size=todo.size) / al
            y = at[todo] + d
            accept = rng.random(todo.size) <= np.exp(-0.5 * (y - al) ** 2)
            res[todo[accept]] = d[accept]
            todo = todo[~accept]
        out[tail] = res
    return out


def _solve_tail(a, target, polish=True, max_iter=60):
    """Find ``delta >= 0`` with ``log P(Y >= a+delta) - log P(Y >= a) = target``.

    The ratio is decreasing in ``delta``; Newton steps use its derivative
    ``-phi(a+delta)/P(Y >= a+delta)`` and fall back to bisection inside the
    bracket kept from previous residual signs.
    """
    a = np.asarray(a, dtype=float)
    target = np.asarray(target, dtype=float)
    far = a > _ASYMPTOTIC_GUESS_LO
    with np.errstate(invalid="ignore", divide="ignore"):
        # far in the tail the ratio is ~ -a*delta - delta^2/2
        root = np.sqrt(np.where(far, a * a - 2.0 * target, 0.0))
        guess_far = -2.0 * target / (a + root)
        guess_near = -ndtri_exp(np.minimum(target + _log_phibar(np.where(far, 0.0, a)), 0.0)) - a
    delta = np.maximum(np.where(far, guess_far, guess_near), 0.0)
    delta = np.where(np.isfinite(delta), delta, 0.0)
    if not polish:
        return delta
    lo = np.zeros_like(delta)
    hi = np.full_like(delta, np.inf)
    idx = np.arange(delta.size)
    for _ in range(max_iter):
        if idx.size == 0:
            break
        d = delta[idx]
        ai = a[idx]
        ti = target[idx]
        r = _log_tail_ratio(ai, d) - ti
        lo[idx] = np.where(r > 0, d, lo[idx])
        hi[idx] = np.where(r <= 0, d, hi[idx])
        lam = _inv_mills(ai + d)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(lam > 0, r / lam, np.inf)
        new = d + step
        l_i, h_i = lo[idx], hi[idx]
        bad = ~((new >= l_i) & (new <= h_i))
        fallback = np.where(np.isfinite(h_i), 0.5 * (l_i + h_i), 2.0 * d + 1.0)
        new = np.where(bad, fallback, new)
        done = ((np.abs(r) <= 1e-14 * np.maximum(1.0, np.abs(ti)))
                | (np.abs(new - d) <= 1e-14 * d)
                | (h_i - l_i <= 1e-15 * h_i))
        delta[idx] = np.where(done & ~bad, new, np.where(done, d, new))
        idx = idx[~done]
    return delta
