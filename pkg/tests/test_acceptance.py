"""The ten acceptance criteria at their stated tolerances.

Each test records one PASS/FAIL line; the lines are repeated in the pytest
terminal summary.  Run alone with ``pytest tests/test_acceptance.py -v``.
"""
import filecmp
import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest

from defaultgap import default_times as dt
from defaultgap import experiments as ex
from defaultgap import fluctuation as fl
from defaultgap import levy
from defaultgap.arcsine import arcsine_cdf
from defaultgap.paths import sample_increments
from defaultgap.rng import RngStream, stream_id
from defaultgap.stats import ks_1samp

N_PATHS = 100_000


@pytest.fixture(scope="module")
def scaling_summary():
    cfg = ex.load_config(ex.preset_config("scaling"))
    summary, _ = ex.run_experiment(cfg)
    return summary


def _check(summary, name):
    return next(c for c in summary["checks"] if c["name"] == name)


def test_c1_arcsine_recovery(criterion):
    # zero-drift GBM started at the barrier, conditioned on default at the first date
    firm = levy.FirmValue(1.0 + 1e-12, levy.brownian(b=0.0, sigma=0.25))
    sched = dt.DebtSchedule(1.0, 1.0, 1)
    t0 = time.perf_counter()
    batch = dt.simulate_defaults(firm, sched, N_PATHS, seed=42)
    gaps = batch.gap[batch.defaulted]
    ks, _ = ks_1samp(gaps, lambda s: arcsine_cdf(s, 1.0))
    elapsed = time.perf_counter() - t0
    ok = ks < 0.012 and elapsed < 60
    criterion(1, "arcsine recovery", ok, f"KS={ks:.5f} (<0.012) on {gaps.size} defaults, {elapsed:.1f}s (<60s)")
    assert ok


def test_c2_mixture_identity(criterion):
    cfg = ex.load_config(ex.preset_config("example1"))
    assert cfg.n_paths == N_PATHS
    summary, _ = ex.run_experiment(cfg)
    c = _check(summary, "mixture_identity_chi2_p")
    exact = _check(summary, "mixture_decomposition_exact")
    ok = c["value"] > 0.01 and exact["pass"]
    criterion(2, "mixture identity (Example 1)", ok,
              f"chi2 p={c['value']:.4f} (>0.01), exact decomposition dev={exact['value']:.2e}")
    assert ok


def test_c3_ladder_theorem_exact(criterion):
    t0 = time.perf_counter()
    rows = ex.ladder_tv_table(k_max=8, A=3)
    elapsed = time.perf_counter() - t0
    walks = {r[0] for r in rows}
    worst = max(r[3] for r in rows)
    ok = len(walks) >= 5 and worst < 1e-10 and elapsed < 30
    criterion(3, "ladder theorem vs enumeration", ok,
              f"{len(walks)} walks, k<=8, max TV={worst:.2e} (<1e-10), {elapsed:.1f}s (<30s)")
    assert ok


def test_c4_fristedt_identity(criterion):
    worst_ratio = 0.0
    ok = True
    for name, walk in sorted(ex._ladder_walks().items()):
        tables = fl.build_ladder_tables(walk, n_max=200, i_max=0)
        for r in np.linspace(0.05, 0.95, 19):
            for t in np.linspace(0.0, 2 * math.pi, 13):
                lhs, rhs, bound = fl.fristedt_check(walk, r, t, tables=tables)
                worst_ratio = max(worst_ratio, abs(lhs - rhs) / bound)
                ok &= abs(lhs - rhs) <= bound
    lhs, rhs, _ = fl.fristedt_check(ex._ladder_walks()["symmetric"], 0.5, 1.0)
    point = abs(lhs - rhs)
    ok = bool(ok and point < 1e-8)
    criterion(4, "Fristedt identity", ok,
              f"max |lhs-rhs|/bound={worst_ratio:.3f} (<=1), symmetric (0.5,1): {point:.2e} (<1e-8)")
    assert ok


def test_c5_martingale_calibration(criterion):
    N = 0.25
    models = {
        "GBM": levy.brownian(sigma=0.25).risk_neutral(),
        "point-jump": levy.jump_diffusion(sigma=0.25, intensity=1.0, dist="point", size=math.log(2)).risk_neutral(),
    }
    details = []
    ok = True
    for lane, (name, model) in enumerate(sorted(models.items())):
        for T in (N, 5 * N):
            g = RngStream(5, stream_id(0, lane * 10 + int(T / N))).generator()
            s = np.exp(sample_increments(model, T, N_PATHS, g))
            m, se = s.mean(), s.std(ddof=1) / math.sqrt(N_PATHS)
            z = abs(m - 1.0) / se
            ok &= z < 4
            details.append(f"{name} T={T:g}: z={z:.2f}")
    criterion(5, "martingale calibration", bool(ok), "; ".join(details) + " (<4)")
    assert ok


def test_c6_scaling_limit(criterion, scaling_summary):
    rows = scaling_summary["convergence"]
    gaps = [r["gap"] for r in rows]
    mg = [r["mean_default_gap"] for r in rows]
    dec = all(b < a for a, b in zip(gaps[:-1], gaps[1:]))
    final = gaps[-1] < 3 * rows[-1]["std_err"]
    mdec = all(b < a for a, b in zip(mg[:-1], mg[1:]))
    ok = dec and final and mdec
    criterion(6, "scaling limit n in {1,4,16}", ok,
              "window gaps " + ", ".join(f"{g:.5f}" for g in gaps)
              + f"; final/SE={gaps[-1] / rows[-1]['std_err']:.2f} (<3); mean gaps "
              + ", ".join(f"{g:.4f}" for g in mg))
    assert ok


def test_c7_hitting_density(criterion, scaling_summary):
    h = scaling_summary["hitting_window"]
    z = abs(h["mc"] - h["integral"]) / h["std_err"]
    ok = z < 3
    criterion(7, "hitting density vs continuous-barrier MC", ok,
              f"integral={h['integral']:.6f}, MC={h['mc']:.5f} +- {h['std_err']:.5f}, z={z:.2f} (<3)")
    assert ok


def test_c8_estimator_recovery(criterion):
    cfg = ex.load_config(ex.preset_config("estimators"))
    assert cfg.n_paths == 1_000_000
    summary, _ = ex.run_experiment(cfg)
    ok = summary["all_pass"]
    criterion(8, "estimator recovery", ok, "; ".join(f"{c['name']}={c['value']:.4f} (<{c['threshold']})"
                                                     for c in summary["checks"]))
    assert ok


def test_c9_stable_limit(criterion, scaling_summary):
    rep = scaling_summary["stable_limit"]
    ks = [r["ks"] for r in rep["rows"]]
    ok = rep["alpha"] == 1.5 and [r["n"] for r in rep["rows"]] == [1, 10, 100] and rep["decreasing"]
    criterion(9, "stable limit alpha=1.5", ok, "KS " + ", ".join(f"{k:.4f}" for k in ks) + " decreasing")
    assert ok


REPRO_PATHS = 4000


def _cli(args, cwd):
    env = dict(os.environ)
    return subprocess.run([sys.executable, "-m", "defaultgap.cli"] + args, cwd=cwd, env=env,
                          capture_output=True, text=True)


def test_c10_reproducibility(criterion, tmp_path):
    bad = []
    for name in sorted(ex.PRESETS):
        outs = []
        for tag, workers in (("a", 1), ("b", 1), ("c", 8)):
            out = tmp_path / f"{name}_{tag}"
            r = _cli(["run", "--preset", name, "--paths", str(REPRO_PATHS), "--workers", str(workers),
                      "--out", str(out)], tmp_path)
            assert r.returncode in (0, 1), r.stderr
            outs.append(out)
        files = sorted(os.listdir(outs[0]))
        for other in outs[1:]:
            if sorted(os.listdir(other)) != files:
                bad.append(f"{name}: file sets differ")
                continue
            _, mismatch, errors = filecmp.cmpfiles(outs[0], other, files, shallow=False)
            bad.extend(f"{name}: {f}" for f in mismatch + errors)
    ok = not bad
    criterion(10, "byte-identical artifacts (2 runs, 1 vs 8 workers)", ok,
              f"{len(ex.PRESETS)} presets at --paths {REPRO_PATHS}" + ("" if ok else "; differ: " + ", ".join(bad)))
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
