import csv
import json
from importlib import resources

import jsonschema
import pytest

from besov_contract import cli

CONFIG = """
[model]
beta = 1
d = 1
s = 0
{model_extra}

[truth]
kind = PolyDecay

[experiment]
n_grid = 1e2, 1e3, 1e4, 1e5
replicates = 24
series_replicates = 4
l_max = {l_max}
seed = 3
"""


def write_cfg(tmp_path, l_max=800, model_extra="", name="c.ini"):
    p = tmp_path / name
    p.write_text(CONFIG.format(l_max=l_max, model_extra=model_extra))
    return str(p)


def schema(name):
    return json.loads(resources.files("besov_contract").joinpath("schemas", name).read_text())


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_verify_ok(tmp_path):
    out = tmp_path / "o"
    assert cli.main(["verify", "--config", write_cfg(tmp_path), "--out", str(out)]) == 0
    report = json.loads((out / "verify_report.json").read_text())
    jsonschema.validate(report, schema("verify_report.schema.json"))
    assert report["passed"] and len(report["checks"]) == 10


def test_verify_fault_injection(tmp_path):
    cfg = write_cfg(tmp_path, model_extra="normalizer_perturbation = 1e-6")
    assert cli.main(["verify", "--config", cfg, "--out", str(tmp_path / "o")]) == 1
    report = json.loads((tmp_path / "o" / "verify_report.json").read_text())
    failed = {c["name"] for c in report["checks"] if not c["passed"]}
    assert failed == {"normalizer_vs_quadrature", "normalizer_vs_erfc_form"}


def test_missing_config(tmp_path):
    assert cli.main(["rates", "--config", str(tmp_path / "missing.ini")]) == 2


def test_bad_s(tmp_path):
    cfg = write_cfg(tmp_path)
    text = open(cfg).read().replace("s = 0", "s = 0.6")
    open(cfg, "w").write(text)
    assert cli.main(["rates", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_bad_threads(tmp_path):
    assert cli.main(["rates", "--config", write_cfg(tmp_path), "--threads", "0"]) == 2


def test_rates_outputs(tmp_path):
    out = tmp_path / "o"
    code = cli.main(["rates", "--config", write_cfg(tmp_path), "--out", str(out)])
    rows = read_csv(out / "rates.csv")
    assert rows[0] == cli.RATES_HEADER and len(rows) == 5
    fit = json.loads((out / "ratefit.json").read_text())
    jsonschema.validate(fit, schema("ratefit.schema.json"))
    assert code == (0 if fit["passed"] else 1)
    manifest = json.loads((out / "manifest.json").read_text())
    jsonschema.validate(manifest, schema("manifest.schema.json"))
    assert manifest["manifest_hash"] == fit["manifest_hash"]
    assert set(manifest["outputs"]["rates"]) == {"rates.csv", "ratefit.json"}


def test_truncation_exit(tmp_path):
    assert cli.main(["rates", "--config", write_cfg(tmp_path, l_max=20), "--out", str(tmp_path)]) == 3


def test_decompose(tmp_path):
    cfg = write_cfg(tmp_path)
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["decompose", "--config", cfg, "--out", str(a)]) == 0
    assert cli.main(["decompose", "--config", cfg, "--out", str(b), "--threads", "3"]) == 0
    rows = read_csv(a / "series.csv")
    assert rows[0] == cli.SERIES_HEADER and all(r[-1] == "pass" for r in rows[1:])
    assert (a / "series.csv").read_bytes() == (b / "series.csv").read_bytes()
    per_l = read_csv(a / "series_per_l.csv")
    assert per_l[0] == cli.PER_L_HEADER
    det = sum(float(r[1]) * float(r[3]) for r in per_l[1:])
    assert det == pytest.approx(float(rows[1][cli.SERIES_HEADER.index("deterministic")]), rel=1e-12)


def test_lipscan(tmp_path):
    assert cli.main(["lipscan", "--config", write_cfg(tmp_path), "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "lipscan.csv")
    assert rows[0] == cli.LIPSCAN_HEADER
    assert {r[2] for r in rows[1:]} == {"low", "high"}
    assert all(r[-1] == "pass" for r in rows[1:])


def test_lipscan_beyond_threshold_fails(tmp_path):
    cfg = write_cfg(tmp_path)
    open(cfg, "a").write("lipscan_beyond_threshold = true\n")
    assert cli.main(["lipscan", "--config", cfg, "--out", str(tmp_path)]) == 1
    rows = read_csv(tmp_path / "lipscan.csv")
    bad = {r[2] for r in rows[1:] if r[-1] == "fail"}
    assert bad == {"high-beyond-threshold"}


def test_thread_determinism_bytes(tmp_path):
    cfg = write_cfg(tmp_path)
    outs = []
    for t in (1, 4, 16):
        d = tmp_path / f"t{t}"
        cli.main(["rates", "--config", cfg, "--out", str(d), "--threads", str(t)])
        outs.append(((d / "rates.csv").read_bytes(), (d / "ratefit.json").read_bytes()))
    assert outs[0] == outs[1] == outs[2]


def test_seed_changes_output(tmp_path):
    cfg = write_cfg(tmp_path)
    cli.main(["rates", "--config", cfg, "--out", str(tmp_path / "a")])
    cli.main(["rates", "--config", cfg, "--out", str(tmp_path / "b"), "--seed", "4"])
    assert (tmp_path / "a" / "rates.csv").read_bytes() != (tmp_path / "b" / "rates.csv").read_bytes()


def test_console_script_help(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["--help"])
    assert info.value.code == 0
    assert "decompose" in capsys.readouterr().out
