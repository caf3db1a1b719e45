import math

import numpy as np
import pytest

from besov_contract.seqspace import BesovIndex, CoefSeq, besov_norm
from besov_contract.truths import TruthKind, TruthSpec, materialize, scaled_coefficients, tail_envelope


def test_spikes():
    spec = TruthSpec(TruthKind.SPARSE_SPIKES, beta=1.0, spike_positions=[(1, 3.0)])
    f = materialize(spec, 10)
    assert f.coefs.tolist() == [3.0] + [0.0] * 9
    for beta in (0.6, 1.0, 4.0):
        assert besov_norm(f, BesovIndex(beta, 1.0)) == 3.0


def test_spike_out_of_range():
    spec = TruthSpec("SparseSpikes", beta=1.0, spike_positions=[(12, 1.0)])
    with pytest.raises(ValueError):
        materialize(spec, 10)


def test_polydecay_value():
    f = materialize(TruthSpec("PolyDecay", beta=1.0), 10)
    assert f.coefs[3] == pytest.approx(4**-1.5 * (1 + math.log(4)) ** -2, rel=1e-15)


def test_increments_follow_log_tail():
    # partial B^beta_1 norms grow by sum l^{-1}(1+ln l)^{-2} ~ 1/(1+ln L): the
    # increments shrink by (1/(1+ln 1e4) - 1/(1+ln 1e5)) / (1/(1+ln 1e3) - 1/(1+ln 1e4)) ~ 0.635
    f = materialize(TruthSpec("PolyDecay", beta=1.0), 100_000)
    norms = [besov_norm(CoefSeq(1, f.coefs[:L]), BesovIndex(1.0, 1.0)) for L in (1000, 10_000, 100_000)]
    ratio = (norms[2] - norms[1]) / (norms[1] - norms[0])
    tail = [1 / (1 + math.log(L)) for L in (1000, 10_000, 100_000)]
    assert ratio == pytest.approx((tail[1] - tail[2]) / (tail[0] - tail[1]), abs=0.01)
    assert ratio < 1


@pytest.mark.parametrize("kind", ["PolyDecay", "SelfSimilarRandom"])
@pytest.mark.parametrize("beta,d", [(1.0, 1), (2.0, 1), (1.5, 2)])
def test_norm_stable_under_doubling(kind, beta, d):
    spec = TruthSpec(kind, beta=beta, d=d)
    for L in (1000, 10_000):
        a = besov_norm(materialize(spec, L), BesovIndex(beta, 1.0))
        b = besov_norm(materialize(spec, 2 * L), BesovIndex(beta, 1.0))
        assert abs(b / a - 1) < 0.02


def test_random_signs_reproducible():
    spec = TruthSpec("SelfSimilarRandom", beta=1.0, seed=4)
    a, b = materialize(spec, 200), materialize(spec, 400)
    np.testing.assert_array_equal(a.coefs, b.coefs[:200])
    signs = np.sign(b.coefs)
    assert set(np.unique(signs)) == {-1.0, 1.0}
    assert abs(signs.mean()) < 0.2
    env = materialize(TruthSpec("PolyDecay", beta=1.0), 400).coefs
    np.testing.assert_array_equal(np.abs(b.coefs), env)


@pytest.mark.parametrize("kind", ["PolyDecay", "SelfSimilarRandom"])
def test_scaled_coefficients_vanish(kind):
    f = materialize(TruthSpec(kind, beta=1.0), 100_000)
    t = np.abs(scaled_coefficients(f, 1.0))
    assert t.max() <= 1.0
    assert t[-1] < 0.01


def test_tail_envelope():
    spec = TruthSpec("PolyDecay", beta=2.0)
    f = materialize(spec, 5000)
    A = tail_envelope(spec, 1000)
    l = np.arange(1001, 5001)
    assert np.all(np.abs(f.coefs[1000:]) <= A * l ** -2.5)


@pytest.mark.parametrize("kw", [
    dict(kind="PolyDecay", beta=0.5),
    dict(kind="PolyDecay", beta=1.0, d=2),
    dict(kind="PolyDecay", beta=1.0, decay_damping=1.0),
    dict(kind="PolyDecay", beta=1.0, amplitude=0.0),
    dict(kind="SparseSpikes", beta=1.0, spike_positions=[(0, 1.0)]),
])
def test_invalid(kw):
    with pytest.raises(ValueError):
        TruthSpec(**kw)


def test_relaxed_range():
    spec = TruthSpec("PolyDecay", beta=1.0, d=2, strict=False)
    assert materialize(spec, 5).l_max == 5
    with pytest.raises(ValueError):
        TruthSpec("PolyDecay", beta=0.0, strict=False)
