import mpmath
import numpy as np
import pytest

mpmath.mp.dps = 40


def mp_erfc(z):
    return float(mpmath.erfc(mpmath.mpf(float(z))))


def mp_erfcx(z):
    z = mpmath.mpf(float(z))
    return float(mpmath.exp(z * z) * mpmath.erfc(z))


def mp_posterior(n, g, x):
    """``(log Z, mean, var)`` from the closed form in multiprecision."""
    n, g, x = (mpmath.mpf(float(v)) for v in (n, g, x))
    s = 1 / mpmath.sqrt(n)
    mp_, mm = x - g / n, x + g / n
    # branch masses: int_0^inf exp(-(n/2)(t-x)^2 - g t) dt, and mirrored
    cp = mpmath.exp(-n * x * x / 2 + n * mp_ * mp_ / 2)
    cm = mpmath.exp(-n * x * x / 2 + n * mm * mm / 2)
    zp = cp * s * mpmath.sqrt(2 * mpmath.pi) * mpmath.ncdf(mp_ / s)
    zm = cm * s * mpmath.sqrt(2 * mpmath.pi) * mpmath.ncdf(-mm / s)
    Z = zp + zm

    def tn(mu, sign):
        # mean and second moment of N(mu, s^2) truncated to sign*t >= 0
        a = -sign * mu / s
        lam = mpmath.npdf(a) / mpmath.ncdf(-a)
        m1 = sign * (sign * mu + s * lam)
        v = s * s * (1 + a * lam - lam * lam)
        return m1, v + m1 * m1

    m1p, m2p = tn(mp_, 1)
    m1m, m2m = tn(mm, -1)
    wp, wm = zp / Z, zm / Z
    mean = wp * m1p + wm * m1m
    var = wp * m2p + wm * m2m - mean * mean
    return float(mpmath.log(Z)), float(mean), float(var)


@pytest.fixture
def gen():
    return np.random.default_rng(20240601)
