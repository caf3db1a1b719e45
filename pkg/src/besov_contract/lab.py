"""Contraction experiments in the Gaussian sequence model.

Quantities estimated here, for the Laplace prior with scales
``gamma_l = l^{1/2+beta/d}`` and a truth ``f0``:

* ``epsilon_n = E[ W_2(posterior, delta_f0) ]`` in ``H^s``; per replicate the
  inner value is exact (closed-form second moments), so the only Monte Carlo
  layer is over the data ``X``;
* the stochastic series ``sum_l l^{2s/d} E W_2^2(pi(.|X_l), pi(.|f0_l))`` and
  the deterministic series ``sum_l l^{2s/d} W_2^2(pi(.|f0_l), delta_f0_l)``,
  whose doubled sum bounds ``epsilon_n^2``;
* Lipschitz ratios ``W_2(pi(.|x), pi(.|y)) / |x - y|`` per coordinate;
* log-log rate fits.

Work is split into replicates. Each replicate draws its noise from a
counter-based stream keyed by ``(seed, replicate)`` and results are combined
in replicate order, so aggregates do not depend on the number of threads.

Truncation
----------
Series are cut at ``l_max``. For ``l`` beyond both ``l_max`` and ``L_n``
the discarded terms are bounded analytically. With ``A`` an envelope
``|f0_l| <= A / gamma_l`` and ``kappa = gamma - n|f0|``, each half of the
posterior ``pi(.|f0_l)`` is stochastically smaller (in ``|theta|``) than an
exponential law of rate ``kappa``, so

    W_2^2(pi(.|f0_l), delta_f0_l) <= gamma_l^{-2} (sqrt(2)/(1 - nA/gamma_l^2) + A)^2.

Beyond ``L_n`` the Lipschitz constant ``8n/gamma_l^2`` gives
``E W_2^2(pi(.|X_l), pi(.|f0_l)) <= 64 n / gamma_l^4``. Tails of
``sum l^{-1-p}`` are bounded by ``L^{-p}/p``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import rng
from .config import ExperimentConfig
from .posterior import MarginalPosterior, prior_scale
from .seqspace import sobolev_weights
from .truths import materialize, tail_envelope
from .wasserstein import w2_posterior_batch

__all__ = [
    "MCEstimate",
    "RateFit",
    "SeriesReport",
    "LipCell",
    "TailCheck",
    "TruncationError",
    "LIPSCHITZ_LOW",
    "SUBTHRESHOLD_BAND",
    "thresholds",
    "epsilon_n",
    "epsilon_grid",
    "contraction_probability",
    "stochastic_series",
    "deterministic_series",
    "series_report",
    "decomposition_holds",
    "lipschitz_ratio_scan",
    "rate_fit",
    "derivative_rate_experiment",
    "tail_check",
    "required_l_max",
    "resolve_threads",
]

# Lipschitz constant of x -> pi(.|x) for l <= L_n
LIPSCHITZ_LOW = 4.0 * math.exp(16.0 * math.sqrt(2.0 / math.pi))
# for l > L_n the constant 8n/gamma_l^2 holds for |x|, |y| <= SUBTHRESHOLD_BAND * gamma_l/n
SUBTHRESHOLD_BAND = 0.5


class TruncationError(RuntimeError):
    """``l_max`` too small for the configured tail tolerance."""

    def __init__(self, n, required):
        super().__init__(f"tail check failed at n = {n}; use l_max >= {required}")
        self.n = n
        self.required = required


@dataclass(frozen=True)
class MCEstimate:
    value: float
    stderr: float
    replicates: int


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    theoretical_exponent: float
    abs_slope_gap: float
    residuals: tuple = ()


@dataclass(frozen=True)
class TailCheck:
    retained: float
    tail_bound: float
    passed: bool


@dataclass(frozen=True)
class SeriesReport:
    """Both series at one ``n``.

    ``per_l`` holds rows ``(l, weight, stochastic_term, deterministic_term)``;
    stochastic terms are replicate means of ``W_2^2`` and are zero past
    ``l_stoch``. The reported totals are ``sum(weight * term)`` over these
    rows; the ``*_tail_bound`` fields bound what lies past the truncation.
    """

    n: int
    J_n: int
    L_n: int
    stochastic_series: float
    stochastic_stderr: float
    deterministic_series: float
    stochastic_tail_bound: float
    deterministic_tail_bound: float
    l_stoch: int
    replicates: int
    per_l: np.ndarray = field(repr=False)

    @property
    def tail_bound(self) -> float:
        return self.stochastic_tail_bound + self.deterministic_tail_bound


@dataclass(frozen=True)
class LipCell:
    n: int
    l: int
    regime: str
    max_ratio: float
    bound: float
    passed: bool


# -- plumbing ----------------------------------------------------------------

def resolve_threads(threads: int | None = None) -> int:
    """``threads``, else ``$BESOV_CONTRACT_THREADS``, else 1."""
    if threads is None:
        env = os.environ.get("BESOV_CONTRACT_THREADS", "").strip()
        threads = int(env) if env else 1
    if threads < 1:
        raise ValueError("thread count must be positive")
    return int(threads)


def _map_replicates(fn, replicates, threads):
    threads = resolve_threads(threads)
    if threads == 1:
        return [fn(r) for r in range(replicates)]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, range(replicates)))


def _mc(values) -> MCEstimate:
    v = np.asarray(values, dtype=float)
    se = float(np.std(v, ddof=1) / np.sqrt(v.size)) if v.size > 1 else 0.0
    return MCEstimate(float(np.mean(v)), se, int(v.size))


@dataclass(frozen=True)
class _Problem:
    """Arrays shared by every computation on one config."""

    cfg: ExperimentConfig
    l_max: int
    f0: np.ndarray
    gamma: np.ndarray
    weight: np.ndarray

    @classmethod
    def of(cls, cfg: ExperimentConfig, l_max: int | None = None):
        L = cfg.l_max_effective if l_max is None else int(l_max)
        l = np.arange(1, L + 1, dtype=float)
        return cls(cfg, L, materialize(cfg.truth, L).coefs, prior_scale(l, cfg.beta, cfg.d),
                   sobolev_weights(L, cfg.s, cfg.d))

    def noise(self, replicate):
        return rng.standard_normals(self.cfg.seed, self.l_max, rng.OBSERVATION, replicate)

    def posterior(self, n, x, upto=None):
        k = self.l_max if upto is None else upto
        return MarginalPosterior(float(n), self.gamma[:k], x[:k])


# -- thresholds and truncation -------------------------------------------------

def thresholds(n, beta: float, d: int, M_n: float | None = None) -> tuple[int, int]:
    """``(J_n, L_n)``.

    ``L_n`` is the smallest integer with ``L^{(2 beta+d)/d} >= 2n`` and
    ``J_n = max(1, round((n/M_n)^{d/(2 beta+d)}))``; ``M_n`` defaults to
    ``max(1, log n)``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if M_n is None:
        M_n = max(1.0, math.log(n))
    if M_n < 1:
        raise ValueError("M_n must be >= 1")
    e = (2.0 * beta + d) / d
    L = max(1, math.ceil((2.0 * n) ** (1.0 / e)))
    while L > 1 and (L - 1) ** e >= 2 * n:
        L -= 1
    while L**e < 2 * n:
        L += 1
    J = max(1, round((n / M_n) ** (1.0 / e)))
    return J, L


def _tail_sum(L, p):
    # sum_{l > L} l^{-1-p} <= L^{-p} / p
    return L ** (-p) / p


def _det_tail_constant(cfg, n, l_max):
    A = tail_envelope(cfg.truth, l_max)
    g = float(prior_scale(l_max + 1.0, cfg.beta, cfg.d))
    shrink = 1.0 - n * A / g**2
    if shrink <= 0:
        return math.inf
    return (math.sqrt(2.0) / shrink + A) ** 2


def _det_tail_bound(cfg, n, l_max):
    p = 2.0 * (cfg.beta - cfg.s) / cfg.d
    return _det_tail_constant(cfg, n, l_max) * _tail_sum(l_max, p)


def _eps_tail_bound(cfg, n, l_max):
    """Bound on ``sum_{l > l_max} l^{2s/d} E[W_2^2(posterior_l, delta_f0_l)]``."""
    _, L_n = thresholds(n, cfg.beta, cfg.d)
    if l_max < L_n:
        return math.inf
    c = _det_tail_constant(cfg, n, l_max)
    g = float(prior_scale(l_max + 1.0, cfg.beta, cfg.d))
    p = 2.0 * (cfg.beta - cfg.s) / cfg.d
    return (8.0 * math.sqrt(n) / g + math.sqrt(c)) ** 2 * _tail_sum(l_max, p)


def _stoch_tail_bound(cfg, n, L):
    """Bound on ``sum_{l > L} l^{2s/d} E W_2^2(pi(.|X_l), pi(.|f0_l))`` for ``L >= L_n``."""
    q = 1.0 + (4.0 * cfg.beta - 2.0 * cfg.s) / cfg.d
    return 64.0 * n * _tail_sum(L, q)


def _det_terms(prob: _Problem, n, upto=None):
    k = prob.l_max if upto is None else upto
    return prob.posterior(n, prob.f0, k).second_moment_about(prob.f0[:k])


def tail_check(cfg: ExperimentConfig, n, l_max: int | None = None) -> TailCheck:
    """Compare the analytic bound on everything discarded past ``l_max``
    (for ``epsilon_n^2`` and hence for both series) with the retained
    deterministic series."""
    prob = _Problem.of(cfg, l_max)
    retained = float(np.sum(prob.weight * _det_terms(prob, n)))
    bound = _eps_tail_bound(cfg, n, prob.l_max)
    return TailCheck(retained, bound, bool(bound <= cfg.tail_tolerance * retained))


def required_l_max(cfg: ExperimentConfig, n) -> int:
    """Smallest ``l_max`` (to within 1%) for which :func:`tail_check` passes at ``n``."""
    hi = max(1, thresholds(n, cfg.beta, cfg.d)[1])
    while not tail_check(cfg, n, hi).passed:
        hi *= 2
        if hi > 2**40:
            raise RuntimeError("no feasible l_max below 2^40")
    lo = hi // 2
    while hi - lo > max(1, hi // 100):
        mid = (lo + hi) // 2
        if tail_check(cfg, n, mid).passed:
            hi = mid
        else:
            lo = mid
    return hi


def _ensure_tails(cfg, ns):
    for n in ns:
        if not tail_check(cfg, n).passed:
            raise TruncationError(n, required_l_max(cfg, n))


# -- epsilon_n and contraction probability ------------------------------------

def epsilon_grid(cfg: ExperimentConfig, ns=None, *, threads: int | None = None,
                 check_tails: bool = True) -> list[MCEstimate]:
    """``epsilon_n`` for every ``n`` in ``ns`` (default ``cfg.n_grid``).

    One noise vector per replicate is shared by all ``n`` (common random
    numbers), which keeps the estimated curve smooth in ``n``.
    """
    ns = cfg.n_grid if ns is None else tuple(ns)
    if check_tails:
        _ensure_tails(cfg, ns)
    prob = _Problem.of(cfg)

    def one(r):
        z = prob.noise(r)
        out = []
        for n in ns:
            x = prob.f0 + z / np.sqrt(n)
            sm = prob.posterior(n, x).second_moment_about(prob.f0)
            out.append(math.sqrt(np.sum(prob.weight * sm)))
        return out

    per_rep = np.array(_map_replicates(one, cfg.replicates, threads)).reshape(cfg.replicates, len(ns))
    return [_mc(per_rep[:, j]) for j in range(len(ns))]


def epsilon_n(cfg: ExperimentConfig, n, *, threads: int | None = None) -> MCEstimate:
    return epsilon_grid(cfg, (n,), threads=threads)[0]


def contraction_probability(cfg: ExperimentConfig, n, xi: float, *,
                            threads: int | None = None, chunk: int = 1 << 21) -> MCEstimate:
    """``E Pi(||f - f0||_{H^s} > xi | X)`` from ``mc_draws`` joint posterior draws per replicate."""
    if xi < 0:
        raise ValueError("xi must be >= 0")
    _ensure_tails(cfg, (n,))
    prob = _Problem.of(cfg)
    rows = max(1, chunk // prob.l_max)

    def one(r):
        x = prob.f0 + prob.noise(r) / np.sqrt(n)
        post = prob.posterior(n, x)
        gen = rng.generator(cfg.seed, rng.POSTERIOR_DRAWS, r)
        hits = 0
        for start in range(0, cfg.mc_draws, rows):
            m = min(rows, cfg.mc_draws - start)
            theta = post.sample((m, prob.l_max), rng=gen)
            dist_sq = np.sum(prob.weight * (theta - prob.f0) ** 2, axis=1)
            hits += int(np.count_nonzero(dist_sq > xi * xi))
        return hits / cfg.mc_draws

    return _mc(_map_replicates(one, cfg.replicates, threads))


# -- the two series ------------------------------------------------------------

def deterministic_series(cfg: ExperimentConfig, n) -> float:
    """Exact ``sum_{l <= l_max} l^{2s/d} W_2^2(pi(.|f0_l), delta_f0_l)``."""
    prob = _Problem.of(cfg)
    return float(np.sum(prob.weight * _det_terms(prob, n)))


def _l_stoch(cfg, n, det_value, l_max):
    _, L_n = thresholds(n, cfg.beta, cfg.d)
    L = min(max(4 * L_n, 16), l_max)
    while L < l_max and _stoch_tail_bound(cfg, n, L) > cfg.tail_tolerance * det_value:
        L = min(2 * L, l_max)
    return L


def _decompose(cfg, n, threads, replicates, zero_noise=False):
    prob = _Problem.of(cfg)
    det = _det_terms(prob, n)
    det_total = float(np.sum(prob.weight * det))
    k = _l_stoch(cfg, n, det_total, prob.l_max)
    ref = prob.posterior(n, prob.f0, k)

    def one(r):
        z = np.zeros(prob.l_max) if zero_noise else prob.noise(r)
        x = prob.f0 + z / np.sqrt(n)
        eps_sq = float(np.sum(prob.weight * prob.posterior(n, x).second_moment_about(prob.f0)))
        w2 = w2_posterior_batch(prob.posterior(n, x, k), ref)
        return eps_sq, w2

    res = _map_replicates(one, replicates, threads)
    eps = np.array([math.sqrt(e) for e, _ in res])
    w2 = np.stack([w for _, w in res])
    stoch_rep = np.sum(prob.weight[:k] * w2, axis=1)
    stoch_terms = np.zeros(prob.l_max)
    stoch_terms[:k] = np.mean(w2, axis=0)
    J_n, L_n = thresholds(n, cfg.beta, cfg.d)
    per_l = np.rec.fromarrays(
        [np.arange(1, prob.l_max + 1), prob.weight, stoch_terms, det],
        names="l,weight,stochastic,deterministic")
    report = SeriesReport(
        n=int(n), J_n=J_n, L_n=L_n,
        stochastic_series=float(np.sum(prob.weight * stoch_terms)),
        stochastic_stderr=_mc(stoch_rep).stderr,
        deterministic_series=det_total,
        stochastic_tail_bound=_stoch_tail_bound(cfg, n, k),
        deterministic_tail_bound=_det_tail_bound(cfg, n, prob.l_max),
        l_stoch=k, replicates=replicates, per_l=per_l,
    )
    return _mc(eps), report


def series_report(cfg: ExperimentConfig, n, *, threads: int | None = None,
                  replicates: int | None = None, zero_noise: bool = False):
    """``(epsilon_n, SeriesReport)`` computed on the same data replicates.

    ``zero_noise=True`` forces ``X = f0``; the stochastic series is then 0.
    """
    _ensure_tails(cfg, (n,))
    replicates = replicates or cfg.series_replicates or cfg.replicates
    return _decompose(cfg, n, threads, replicates, zero_noise)


def stochastic_series(cfg: ExperimentConfig, n, *, threads: int | None = None,
                      replicates: int | None = None) -> MCEstimate:
    _, rep = series_report(cfg, n, threads=threads, replicates=replicates)
    return MCEstimate(rep.stochastic_series, rep.stochastic_stderr, rep.replicates)


def decomposition_holds(eps: MCEstimate, rep: SeriesReport, k: float = 3.0) -> bool:
    """``epsilon_n^2 <= 2 (stochastic + tail) + 2 deterministic`` allowing ``k`` standard errors."""
    lhs = max(eps.value - k * eps.stderr, 0.0) ** 2
    rhs = (2.0 * (rep.stochastic_series + k * rep.stochastic_stderr + rep.stochastic_tail_bound)
           + 2.0 * rep.deterministic_series)
    return bool(lhs <= rhs)


# -- Lipschitz scan --------------------------------------------------------------

def lipschitz_ratio_scan(beta: float, d: int, n, l_list, x_pairs) -> list[LipCell]:
    """Worst ratio ``W_2(pi(.|x), pi(.|y)) / |x - y|`` over ``x_pairs`` for each ``l``,
    against ``4 e^{16 sqrt(2/pi)}`` (``l <= L_n``) or ``8 n / gamma_l^2`` (``l > L_n``).

    For ``l > L_n`` pairs are grouped by whether both points lie within
    ``SUBTHRESHOLD_BAND * gamma_l / n`` of zero (regime ``high``) or not
    (``high-beyond-threshold``). The high-frequency bound is only valid in
    the first group: far beyond the threshold the posterior is close to
    ``N(x - gamma_l/n, 1/n)``, whose ratio tends to 1.
    """
    pairs = np.asarray(x_pairs, dtype=float).reshape(-1, 2)
    if np.any(pairs[:, 0] == pairs[:, 1]):
        raise ValueError("pairs need x != y")
    _, L_n = thresholds(n, beta, d)
    ls = np.asarray(l_list, dtype=int)
    g = prior_scale(ls.astype(float), beta, d)
    gam = np.repeat(g, len(pairs))
    xs = np.tile(pairs[:, 0], ls.size)
    ys = np.tile(pairs[:, 1], ls.size)
    w2 = w2_posterior_batch(MarginalPosterior(float(n), gam, xs), MarginalPosterior(float(n), gam, ys))
    ratio = (np.sqrt(np.maximum(w2, 0.0)) / np.abs(xs - ys)).reshape(ls.size, len(pairs))
    reach = np.maximum(np.abs(xs), np.abs(ys)).reshape(ls.size, len(pairs))
    out = []
    for i, l in enumerate(ls):
        if l <= L_n:
            groups = [("low", LIPSCHITZ_LOW, np.ones(len(pairs), bool))]
        else:
            inside = reach[i] <= SUBTHRESHOLD_BAND * g[i] / n
            bound = 8.0 * n / float(g[i]) ** 2
            groups = [("high", bound, inside), ("high-beyond-threshold", bound, ~inside)]
        for regime, bound, mask in groups:
            if np.any(mask):
                r = float(ratio[i, mask].max())
                out.append(LipCell(int(n), int(l), regime, r, bound, bool(r <= bound)))
    return out


# -- rates -----------------------------------------------------------------------

def rate_fit(values, theoretical_exponent: float) -> RateFit:
    """Least-squares fit of ``log v`` against ``log n`` for pairs ``(n, v)``."""
    pts = np.asarray(values, dtype=float).reshape(-1, 2)
    if len(pts) < 4:
        raise ValueError("rate fitting needs at least 4 points")
    if np.any(pts[:, 0] <= 0) or np.any(pts[:, 1] <= 0):
        raise ValueError("rate fitting needs positive n and values")
    ln, lv = np.log(pts[:, 0]), np.log(pts[:, 1])
    fit = stats.linregress(ln, lv)
    resid = lv - (fit.intercept + fit.slope * ln)
    return RateFit(float(fit.slope), float(fit.intercept), float(fit.rvalue**2),
                   float(theoretical_exponent), float(abs(fit.slope - theoretical_exponent)),
                   tuple(float(r) for r in resid))


def derivative_rate_experiment(cfg: ExperimentConfig, order: float, *,
                               threads: int | None = None) -> tuple[RateFit, list[MCEstimate]]:
    """Rate of ``epsilon_n`` in ``H^{|gamma|}``, ``|gamma| = order``: the sequence-space
    certificate for plug-in estimation of derivatives of order ``|gamma|``."""
    if not cfg.beta > order + cfg.d / 2:
        raise ValueError(f"need beta > |gamma| + d/2 = {order + cfg.d / 2}")
    sub = cfg.with_(s=float(order))
    est = epsilon_grid(sub, threads=threads)
    fit = rate_fit([(n, e.value) for n, e in zip(sub.n_grid, est)], sub.rate_exponent)
    return fit, est
