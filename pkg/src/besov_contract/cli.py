"""``besov-contract`` command line.

    besov-contract {verify|rates|decompose|lipscan} --config PATH
                   [--seed N] [--threads N] [--out DIR]

Exit codes: 0 success, 1 a check failed, 2 configuration error,
3 truncation/resource error.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, lab, verify
from .config import ConfigError, ExperimentConfig, load_config
from .posterior import prior_scale
from .wasserstein import NonConvergenceError

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_RESOURCE = 0, 1, 2, 3

RATES_HEADER = ["n", "epsilon", "stderr"]
SERIES_HEADER = ["n", "J_n", "L_n", "l_stoch", "replicates", "epsilon", "epsilon_stderr",
                 "stochastic", "stochastic_stderr", "deterministic", "stochastic_tail_bound",
                 "deterministic_tail_bound", "inequality"]
PER_L_HEADER = ["l", "weight", "stochastic", "deterministic"]
LIPSCAN_HEADER = ["n", "l", "regime", "ratio", "bound", "pass"]

# threshold-scale pairs for the Lipschitz scan, in units of gamma_l / n
_BAND_PAIRS = ((-0.5, 0.5), (0.1, 0.45), (-0.3, -0.05), (0.0, 0.5))
_BEYOND_PAIRS = ((0.5, 1.5), (0.95, 1.05), (-1.0, 1.0), (2.0, 2.5))


@dataclass
class RunManifest:
    config_hash: str
    version: str
    seed: int
    timestamp: str
    outputs: dict = field(default_factory=dict)

    @property
    def hash(self) -> str:
        return hashlib.sha256(f"{self.config_hash}:{self.version}".encode()).hexdigest()[:16]

    def record(self, out_dir: Path, command: str, paths):
        path = out_dir / "manifest.json"
        outputs = {}
        if path.exists():
            try:
                old = json.loads(path.read_text())
                if old.get("manifest_hash") == self.hash:
                    outputs = old.get("outputs", {})
            except (OSError, ValueError):
                pass
        outputs[command] = {p.name: _sha256(p) for p in paths}
        self.outputs = outputs
        body = {"manifest_hash": self.hash, **asdict(self)}
        path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "pass" if v else "fail"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return repr(float(v))


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n")



# -- subcommands ---------------------------------------------------------------

def cmd_verify(cfg: ExperimentConfig, out: Path, manifest: RunManifest, threads) -> int:
    results = verify.run_all(cfg.normalizer_perturbation)
    ok = all(r.passed for r in results)
    path = out / "verify_report.json"
    _write_json(path, {"manifest_hash": manifest.hash, "passed": ok,
                       "checks": [r.to_dict() for r in results]})
    manifest.record(out, "verify", [path])
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<28} max_error={r.max_error:.3e}  tol={r.tolerance:.0e}")
    return EXIT_OK if ok else EXIT_CHECK


def cmd_rates(cfg: ExperimentConfig, out: Path, manifest: RunManifest, threads) -> int:
    est = lab.epsilon_grid(cfg, threads=threads)
    fit = lab.rate_fit([(n, e.value) for n, e in zip(cfg.n_grid, est)], cfg.rate_exponent)
    ok = fit.abs_slope_gap <= cfg.slope_tolerance
    rates = out / "rates.csv"
    _write_csv(rates, RATES_HEADER, [(n, e.value, e.stderr) for n, e in zip(cfg.n_grid, est)])
    ratefit = out / "ratefit.json"
    _write_json(ratefit, {
        "manifest_hash": manifest.hash,
        "slope": fit.slope, "intercept": fit.intercept, "r_squared": fit.r_squared,
        "theoretical_exponent": fit.theoretical_exponent, "abs_slope_gap": fit.abs_slope_gap,
        "slope_tolerance": cfg.slope_tolerance, "passed": ok,
    })
    manifest.record(out, "rates", [rates, ratefit])
    print(f"{'n':>10}  {'epsilon_n':>12}  {'stderr':>10}")
    for n, e in zip(cfg.n_grid, est):
        print(f"{n:>10d}  {e.value:>12.6g}  {e.stderr:>10.3g}")
    print(f"slope {fit.slope:.4f} (theory {fit.theoretical_exponent:.4f}, gap {fit.abs_slope_gap:.4f}),"
          f" r^2 {fit.r_squared:.5f}: {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_CHECK


def cmd_decompose(cfg: ExperimentConfig, out: Path, manifest: RunManifest, threads) -> int:
    rows, first = [], None
    ok = True
    for n in cfg.n_grid:
        eps, rep = lab.series_report(cfg, n, threads=threads)
        holds = lab.decomposition_holds(eps, rep)
        ok &= holds
        first = first or rep
        rows.append((n, rep.J_n, rep.L_n, rep.l_stoch, rep.replicates, eps.value, eps.stderr,
                     rep.stochastic_series, rep.stochastic_stderr, rep.deterministic_series,
                     rep.stochastic_tail_bound, rep.deterministic_tail_bound, holds))
        print(f"n={n:<9d} eps^2={eps.value ** 2:.4e}  2*stoch+2*det={2 * (rep.stochastic_series + rep.deterministic_series):.4e}"
              f"  {'pass' if holds else 'FAIL'}")
    series = out / "series.csv"
    _write_csv(series, SERIES_HEADER, rows)
    per_l = out / "series_per_l.csv"
    _write_csv(per_l, PER_L_HEADER,
               [(int(r.l), r.weight, r.stochastic, r.deterministic) for r in first.per_l])
    manifest.record(out, "decompose", [series, per_l])
    return EXIT_OK if ok else EXIT_CHECK


def lipscan_cells(cfg: ExperimentConfig):
    """The scan grid: every ``n`` in the grid, ``l`` geometric up to ``64 L_n``
    (plus ``L_n`` and ``L_n + 1``), pairs at the noise scale ``1/sqrt(n)``
    and at the threshold scale ``gamma_l / n``.

    For ``l > L_n`` only pairs inside the sub-threshold band are used unless
    ``cfg.lipscan_beyond_threshold`` is set.
    """
    cells = []
    for n in cfg.n_grid:
        _, L_n = lab.thresholds(n, cfg.beta, cfg.d)
        ls = np.unique(np.concatenate([np.round(np.geomspace(1, 64 * L_n, 14)), [L_n, L_n + 1]]))
        for l in ls.astype(int):
            thr = float(prior_scale(float(l), cfg.beta, cfg.d)) / n
            pairs = [(a / math.sqrt(n), b / math.sqrt(n)) for a, b in cfg.lipscan_pairs]
            pairs += [(a * thr, b * thr) for a, b in _BAND_PAIRS]
            if l <= L_n or cfg.lipscan_beyond_threshold:
                pairs += [(a * thr, b * thr) for a, b in _BEYOND_PAIRS]
            else:
                band = lab.SUBTHRESHOLD_BAND * thr
                pairs = [(a, b) for a, b in pairs if max(abs(a), abs(b)) <= band]
            cells.append((n, int(l), pairs))
    return cells


def cmd_lipscan(cfg: ExperimentConfig, out: Path, manifest: RunManifest, threads) -> int:
    rows = []
    for n, l, pairs in lipscan_cells(cfg):
        rows.extend(lab.lipschitz_ratio_scan(cfg.beta, cfg.d, n, [l], pairs))
    path = out / "lipscan.csv"
    _write_csv(path, LIPSCAN_HEADER, [(c.n, c.l, c.regime, c.max_ratio, c.bound, c.passed) for c in rows])
    manifest.record(out, "lipscan", [path])
    fails = sum(not c.passed for c in rows)
    print(f"{len(rows)} (n, l) cells, {fails} above their bound")
    return EXIT_OK if fails == 0 else EXIT_CHECK


COMMANDS = {"verify": cmd_verify, "rates": cmd_rates, "decompose": cmd_decompose, "lipscan": cmd_lipscan}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="besov-contract",
                                description="Posterior contraction experiments under Besov-Laplace priors.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="INI experiment configuration")
        s.add_argument("--seed", type=int, default=None, help="override [experiment] seed")
        s.add_argument("--threads", type=int, default=None,
                       help="worker threads (default $BESOV_CONTRACT_THREADS or 1)")
        s.add_argument("--out", default=None, help="output directory (default [output] dir or .)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, output = load_config(args.config, seed=args.seed)
        threads = lab.resolve_threads(args.threads)
    except (ConfigError, ValueError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out or output.get("dir", "."))
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        print(f"cannot create output directory {out}: {err}", file=sys.stderr)
        return EXIT_RESOURCE
    manifest = RunManifest(cfg.digest(), __version__, cfg.seed,
                           _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"))
    try:
        return COMMANDS[args.command](cfg, out, manifest, threads)
    except lab.TruncationError as err:
        print(f"truncation error: {err}", file=sys.stderr)
        return EXIT_RESOURCE
    except NonConvergenceError as err:
        print(f"numerical error: {err}", file=sys.stderr)
        return EXIT_RESOURCE
    except MemoryError:
        print("out of memory; reduce l_max or replicates", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
