"""Complementary error function and its scaled variant.

Everything here works elementwise on numpy arrays and returns a Python
float when given a scalar. Three regimes are used for ``erfcx``:

* ``0 <= z < 1.5``: ``exp(z**2) * (1 - erf(z))`` with a positive-term
  series for ``erf`` (no cancellation inside the series);
* ``1.5 <= z <= 30``: Laplace's continued fraction, evaluated backwards;
* ``z > 30``: the asymptotic expansion in ``1/z**2``.

Negative arguments go through the reflection ``erfc(-z) = 2 - erfc(z)``.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "DomainError",
    "erfc",
    "erfcx",
    "log_erfc",
    "log_erfcx",
    "log_sum_exp",
]

_SQRT_PI = np.sqrt(np.pi)
_SERIES_TERMS = 60
_CF_TERMS = 100
_CF_LO = 1.5
_ASYMPTOTIC_LO = 30.0


class DomainError(ValueError):
    """Raised when a special function receives an argument outside its domain."""


def _as_finite(z, name):
    arr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name}: argument must be finite")
    return arr


def _wrap(arr, like):
    if np.ndim(like) == 0:
        return float(arr)
    return arr


def _erf_series(z):
    # erf(z) = 2/sqrt(pi) * exp(-z^2) * sum_k 2^k z^(2k+1) / (1*3*...*(2k+1))
    term = z.copy()
    total = z.copy()
    z2 = 2.0 * z * z
    for k in range(_SERIES_TERMS):
        term = term * z2 / (2 * k + 3)
        total = total + term
    return 2.0 / _SQRT_PI * np.exp(-z * z) * total


def _erfcx_cf(z):
    t = z.copy()
    for k in range(_CF_TERMS, 0, -1):
        t = z + (0.5 * k) / t
    return 1.0 / (_SQRT_PI * t)


def _erfcx_asymptotic(z):
    # 1/(z sqrt(pi)) * sum_k (-1)^k (2k-1)!! / (2 z^2)^k
    inv = (0.5 / z) / z
    total = np.ones_like(z)
    term = np.ones_like(z)
    for k in range(1, 9):
        term = -term * (2 * k - 1) * inv
        total = total + term
    return total / (z * _SQRT_PI)


def _erfcx_nonneg(z):
    out = np.empty_like(z)
    small = z < _CF_LO
    big = z > _ASYMPTOTIC_LO
    mid = ~(small | big)
    if np.any(small):
        zs = z[small]
        out[small] = np.exp(zs * zs) * (1.0 - _erf_series(zs))
    if np.any(mid):
        out[mid] = _erfcx_cf(z[mid])
    if np.any(big):
        out[big] = _erfcx_asymptotic(z[big])
    return out


def _erfc_nonneg(z):
    out = np.empty_like(z)
    small = z < _CF_LO
    if np.any(small):
        out[small] = 1.0 - _erf_series(z[small])
    rest = ~small
    if np.any(rest):
        zr = z[rest]
        with np.errstate(under="ignore"):
            out[rest] = np.exp(-zr * zr) * _erfcx_nonneg(zr)
    return out


def erfc(z):
    """Complementary error function ``2/sqrt(pi) * int_z^inf exp(-s^2) ds``."""
    arr = _as_finite(z, "erfc")
    flat = np.atleast_1d(arr).astype(float)
    a = np.abs(flat)
    pos = _erfc_nonneg(a)
    out = np.where(flat < 0, 2.0 - pos, pos)
    return _wrap(out.reshape(arr.shape), z)


def erfcx(z):
    """Scaled complementary error function ``exp(z**2) * erfc(z)``.

    Finite for every positive argument (``~ 1/(z*sqrt(pi))`` as ``z`` grows).
    For ``z < -26.6`` the true value exceeds the float range and ``inf`` is
    returned.
    """
    arr = _as_finite(z, "erfcx")
    flat = np.atleast_1d(arr).astype(float)
    a = np.abs(flat)
    pos = _erfcx_nonneg(a)
    with np.errstate(over="ignore"):
        neg = 2.0 * np.exp(a * a) - pos
    out = np.where(flat < 0, neg, pos)
    return _wrap(out.reshape(arr.shape), z)


def log_erfcx(z):
    """``log(erfcx(z))`` without overflow for negative ``z``."""
    arr = _as_finite(z, "log_erfcx")
    flat = np.atleast_1d(arr).astype(float)
    out = np.empty_like(flat)
    neg = flat < 0
    if np.any(neg):
        zn = flat[neg]
        # erfc(z) lies in (1, 2] here, so its log is well conditioned
        out[neg] = zn * zn + np.log(2.0 - _erfc_nonneg(-zn))
    if np.any(~neg):
        out[~neg] = np.log(_erfcx_nonneg(flat[~neg]))
    return _wrap(out.reshape(arr.shape), z)


def log_erfc(z):
    """``log(erfc(z))``, accurate far into the upper tail."""
    arr = _as_finite(z, "log_erfc")
    flat = np.atleast_1d(arr).astype(float)
    out = np.empty_like(flat)
    neg = flat < 0
    if np.any(neg):
        out[neg] = np.log(2.0 - _erfc_nonneg(-flat[neg]))
    if np.any(~neg):
        zp = flat[~neg]
        out[~neg] = np.log(_erfcx_nonneg(zp)) - zp * zp
    return _wrap(out.reshape(arr.shape), z)


def log_sum_exp(a, b):
    """``log(exp(a) + exp(b))``; either argument may be ``-inf``."""
    a_arr = np.asarray(a, dtype=float)
    b_arr = np.asarray(b, dtype=float)
    if np.any(np.isnan(a_arr)) or np.any(np.isnan(b_arr)):
        raise DomainError("log_sum_exp: NaN argument")
    if np.any(a_arr == np.inf) or np.any(b_arr == np.inf):
        raise DomainError("log_sum_exp: +inf argument")
    out = np.logaddexp(a_arr, b_arr)
    if np.ndim(a) == 0 and np.ndim(b) == 0:
        return float(out)
    return out
