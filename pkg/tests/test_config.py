import pytest

from besov_contract.config import ConfigError, ExperimentConfig, default_l_max, load_config, parse_config
from besov_contract.truths import TruthKind

BASE = """
[model]
beta = 1
d = 1
s = {s}

[truth]
kind = PolyDecay

[experiment]
n_grid = 1e2, 1e3, 1e4, 1e5
replicates = 2.0e1
seed = 7
"""


def test_parse_basic():
    cfg, out = parse_config(BASE.format(s=0))
    assert cfg.n_grid == (100, 1000, 10_000, 100_000)
    assert cfg.replicates == 20 and cfg.seed == 7 and out == {}
    assert cfg.rate_exponent == pytest.approx(-1 / 3)
    assert cfg.l_max_effective == default_l_max(1.0, 1, 1e5) == 372


def test_seed_override():
    assert parse_config(BASE.format(s=0), seed=99)[0].seed == 99


def test_s_out_of_range():
    with pytest.raises(ConfigError):
        parse_config(BASE.format(s=0.5))


def test_relaxed_range():
    text = BASE.format(s=0.7).replace("seed = 7", "seed = 7\nstrict_theorem_range = false")
    cfg, _ = parse_config(text)
    assert not cfg.strict and cfg.s == 0.7


@pytest.mark.parametrize("text,msg", [
    ("[model]\nbeta=1\n", "missing section"),
    ("not an ini", "malformed"),
    (BASE.format(s=0).replace("replicates = 2.0e1", "replicates = 2.5"), "integer"),
    (BASE.format(s=0).replace("beta = 1", "beta = one"), "not a number"),
    (BASE.format(s=0).replace("1e2, 1e3, 1e4, 1e5", "1e2, 1e3, 1e4"), "4 points"),
    (BASE.format(s=0).replace("1e2, 1e3, 1e4, 1e5", "1e2, 1e4, 1e3, 1e5"), "increasing"),
    (BASE.format(s=0).replace("PolyDecay", "Wiggly"), "Wiggly"),
])
def test_errors(text, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_config(text)


def test_spikes_and_pairs():
    text = BASE.format(s=0).replace("PolyDecay", "SparseSpikes\nspikes = 1:3.0, 17:-5e-1") + \
        "lipscan_pairs = 0:1, -2:2.5\n[output]\ndir = res\n"
    cfg, out = parse_config(text)
    assert cfg.truth.kind is TruthKind.SPARSE_SPIKES
    assert cfg.truth.spike_positions == ((1, 3.0), (17, -0.5))
    assert cfg.lipscan_pairs == ((0.0, 1.0), (-2.0, 2.5))
    assert out == {"dir": "res"}


def test_digest_stable_and_sensitive():
    a, _ = parse_config(BASE.format(s=0))
    b, _ = parse_config(BASE.format(s=0))
    assert a.digest() == b.digest()
    assert a.with_(replicates=21).digest() != a.digest()


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.ini")


def test_shipped_configs():
    from pathlib import Path
    root = Path(__file__).resolve().parents[1] / "configs"
    for p in sorted(root.glob("*.ini")):
        cfg, _ = load_config(p)
        assert isinstance(cfg, ExperimentConfig)
