"""Oracle checks for the numerical core.

Each check compares an implementation against an independent route
(scipy special functions, adaptive quadrature of the unnormalized density,
closed forms) and reports its worst error against a tolerance.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate, special

from . import specfun
from .posterior import MarginalPosterior
from .wasserstein import QuantileFn, w2_to_dirac, w2_univariate

__all__ = ["CheckResult", "stress_grid", "quad_moments", "run_all", "CHECKS"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    max_error: float
    tolerance: float
    cells: int

    def to_dict(self):
        d = asdict(self)
        if not math.isfinite(d["max_error"]):
            d["max_error"] = None
        return d


def stress_grid(x_points: int = 32):
    """``(n, gamma, x)`` cells: ``n`` in {1, 10, 1e3, 1e6}, ``gamma`` in
    {0.01, 1, 1e3, 1e6}, ``x`` on ``[-50, 50] / sqrt(n)``. Covers the data-,
    intermediate- and prior-dominated regimes (``gamma^2`` below, near and far
    above ``n``)."""
    cells = []
    for n in (1.0, 10.0, 1e3, 1e6):
        for g in (0.01, 1.0, 1e3, 1e6):
            for x in np.linspace(-50.0, 50.0, x_points) / np.sqrt(n):
                cells.append((n, g, float(x)))
    return cells


def _half_line(n, g, x, sign, shift, powers, center):
    # integrate theta^k e^{-(n/2)(theta-x)^2 - g|theta| - shift} over one half-line
    xs = sign * x
    mode = max(xs - g / n, 0.0)
    kappa = g - n * xs
    width = 1.0 / max(math.sqrt(n), kappa) if mode == 0.0 else 1.0 / math.sqrt(n)
    lo, hi = max(0.0, mode - 40.0 * width), mode + 40.0 * width

    def log_f(t):
        return -0.5 * n * (t - xs) ** 2 - g * t - shift

    out = []
    for k in powers:
        def f(t, k=k):
            return (sign * t - center) ** k * math.exp(log_f(t))

        val, _ = integrate.quad(f, lo, hi, points=[mode] if lo < mode < hi else None,
                                epsabs=0.0, epsrel=1e-13, limit=200)
        out.append(val)
    return out


def quad_moments(n, g, x):
    """``(log Z, mean, variance)`` by adaptive quadrature on each half-line."""
    theta_hat = math.copysign(max(abs(x) - g / n, 0.0), x)
    shift = -0.5 * n * (theta_hat - x) ** 2 - g * abs(theta_hat)
    m0 = [_half_line(n, g, x, s, shift, (0, 1), 0.0) for s in (1.0, -1.0)]
    Z = m0[0][0] + m0[1][0]
    mean = (m0[0][1] + m0[1][1]) / Z
    c2 = [_half_line(n, g, x, s, shift, (2,), mean)[0] for s in (1.0, -1.0)]
    return shift + math.log(Z), mean, (c2[0] + c2[1]) / Z


def _result(name, errors, tol):
    errors = np.asarray(errors, dtype=float)
    worst = float(np.max(errors)) if errors.size else 0.0
    ok = bool(errors.size and np.all(errors <= tol))
    return CheckResult(name, ok, worst if np.all(np.isfinite(errors)) else math.inf, tol, int(errors.size))


def check_erfc():
    z = np.linspace(-6.0, 6.0, 2001)
    return _result("erfc_abs_error", np.abs(specfun.erfc(z) - special.erfc(z)), 1e-14)


def check_erfcx():
    z = np.concatenate([np.linspace(-5.0, 30.0, 701), np.logspace(1.5, 8.0, 200)])
    ref = special.erfcx(z)
    return _result("erfcx_rel_error", np.abs(specfun.erfcx(z) / ref - 1.0), 1e-12)


def check_normalizer(perturbation=0.0):
    errs = []
    for n, g, x in stress_grid():
        log_z = MarginalPosterior(n, g, x).log_normalizer() + math.log1p(perturbation)
        errs.append(abs(math.expm1(log_z - quad_moments(n, g, x)[0])))
    return _result("normalizer_vs_quadrature", errs, 1e-9)


def check_erfc_form(perturbation=0.0):
    """Overflow-free normalizer against the direct form
    ``sqrt(pi/2n) e^{g^2/2n} [e^{-g x} erfc(z-) + e^{g x} erfc(z+)]``."""
    errs = []
    for n in (1.0, 10.0, 100.0, 1e4):
        for g in (0.1, 1.0, 5.0, 30.0):
            for x in np.linspace(-3.0, 3.0, 13):
                zm = (g / n - x) * math.sqrt(n / 2.0)
                zp = (g / n + x) * math.sqrt(n / 2.0)
                direct = math.sqrt(math.pi / (2 * n)) * math.exp(g * g / (2 * n)) * (
                    math.exp(-g * x) * special.erfc(zm) + math.exp(g * x) * special.erfc(zp))
                if not (math.isfinite(direct) and direct > 1e-300):
                    continue
                mine = math.exp(MarginalPosterior(n, g, x).log_normalizer()) * (1.0 + perturbation)
                errs.append(abs(mine / direct - 1.0))
    return _result("normalizer_vs_erfc_form", errs, 1e-12)


def check_mixture():
    errs = []
    for n, g, x in stress_grid(8):
        p = MarginalPosterior(n, g, x)
        mix = p.mixture()
        centre = p.mean()
        theta = centre + np.linspace(-6.0, 6.0, 41) * math.sqrt(max(p.variance(), 1e-300))
        a, b = mix.log_density(theta), p.log_density(theta)
        ok = np.isfinite(b) & (b > -700)
        errs.extend(np.abs(np.expm1(a[ok] - b[ok])))
        errs.append(abs(mix.w_plus + mix.w_minus - 1.0))
    return _result("mixture_reconstruction", errs, 1e-9)


def check_moments():
    errs = []
    for n, g, x in stress_grid():
        p = MarginalPosterior(n, g, x)
        _, mean, var = quad_moments(n, g, x)
        sd = math.sqrt(var)
        errs.append(abs(p.mean() - mean) / max(abs(mean), sd))
        errs.append(abs(p.variance() / var - 1.0))
        sm = var + (mean - x) ** 2
        errs.append(abs(p.second_moment_about(x) / sm - 1.0))
    return _result("moments_vs_quadrature", errs, 1e-8)


def check_quantile():
    errs = []
    u = np.concatenate([np.logspace(-12, -1, 12), np.linspace(0.05, 0.95, 19), 1 - np.logspace(-1, -10, 10)])
    for n, g, x in stress_grid(8):
        p = MarginalPosterior(n, g, x)
        errs.extend(np.abs(p.cdf(p.quantile(u)) - u))
    return _result("quantile_roundtrip", errs, 1e-12)


def check_w2_gaussian():
    errs = []
    for mu1, mu2, sig in ((0.0, 2.5, 1.0), (-1.0, 1.0, 0.3), (3.0, 3.001, 2.0)):
        w = w2_univariate(QuantileFn.gaussian(mu1, sig), QuantileFn.gaussian(mu2, sig))
        errs.append(abs(w / abs(mu1 - mu2) - 1.0))
    return _result("w2_gaussian_closed_form", errs, 1e-8)


def check_w2_dirac():
    gen = np.random.default_rng(12345)
    errs = []
    for _ in range(20):
        n = 10.0 ** gen.uniform(0, 5)
        g = 10.0 ** gen.uniform(-2, 3)
        x = gen.normal(0, 3) / math.sqrt(n) + gen.choice([0.0, g / n])
        c = x + gen.normal(0, 1) / math.sqrt(n)
        p = MarginalPosterior(n, g, x)
        a = w2_to_dirac(p, c)
        b = w2_univariate(QuantileFn.of_posterior(p), QuantileFn.dirac(c))
        errs.append(abs(b / a - 1.0))
    return _result("w2_dirac_dual_route", errs, 1e-6)


def check_w2_metric():
    gen = np.random.default_rng(777)
    errs = []
    for _ in range(10):
        n = 10.0 ** gen.uniform(0, 4)
        g = 10.0 ** gen.uniform(-1, 2)
        q = [QuantileFn.of_posterior(MarginalPosterior(n, g, gen.normal(0, 2) / math.sqrt(n)))
             for _ in range(3)]
        ab, ba = w2_univariate(q[0], q[1]), w2_univariate(q[1], q[0])
        ac, bc = w2_univariate(q[0], q[2]), w2_univariate(q[1], q[2])
        errs.append(abs(ab - ba) / max(ab, 1e-300))
        errs.append(max(0.0, ac - (ab + bc)) / max(ac, 1e-300))
        errs.append(w2_univariate(q[0], q[0]))
    return _result("w2_metric_properties", errs, 1e-6)


CHECKS = {
    "erfc_abs_error": lambda pert: check_erfc(),
    "erfcx_rel_error": lambda pert: check_erfcx(),
    "normalizer_vs_quadrature": check_normalizer,
    "normalizer_vs_erfc_form": check_erfc_form,
    "mixture_reconstruction": lambda pert: check_mixture(),
    "moments_vs_quadrature": lambda pert: check_moments(),
    "quantile_roundtrip": lambda pert: check_quantile(),
    "w2_gaussian_closed_form": lambda pert: check_w2_gaussian(),
    "w2_dirac_dual_route": lambda pert: check_w2_dirac(),
    "w2_metric_properties": lambda pert: check_w2_metric(),
}


def run_all(normalizer_perturbation: float = 0.0) -> list[CheckResult]:
    """Run every check. ``normalizer_perturbation`` scales the computed
    normalizer by ``1 + perturbation`` (fault injection for testing)."""
    return [fn(normalizer_perturbation) for fn in CHECKS.values()]
