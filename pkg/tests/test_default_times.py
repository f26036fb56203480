import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from defaultgap import default_times as dt, fluctuation as fl, levy, paths
from defaultgap.errors import BadStart, NoDefaults
from defaultgap.rng import RngStream
from defaultgap.stats import chi2_homogeneity, ks_1samp

EX1 = levy.FirmValue(1.0, levy.brownian(0.04, 0.25))
EX1_SCHED = dt.DebtSchedule(15 / 365, 0.4, 243)


def _path(values, h):
    return paths.PathSample(paths.TimeGrid(0.0, h, len(values) - 1), np.asarray(values, dtype=float))


def test_recorded_default_conventions():
    s = dt.DebtSchedule(0.5, 1.0, 4)
    assert dt.recorded_default(_path([math.log(2.0)] * 5, 0.5), s)[0] == dt.SURVIVED
    status, k, tr = dt.recorded_default(_path([0.3, 0.0, -0.2, 0.1, 0.1], 0.5), s)
    assert (status, k, tr) == (dt.DEFAULTED, 1, 0.5)     # S_N = D defaults


def test_bad_start_and_zero_barrier():
    with pytest.raises(BadStart):
        dt.simulate_defaults(levy.FirmValue(0.4, levy.brownian(0, 0.2)), dt.DebtSchedule(1, 0.4, 3), 10, 0)
    b = dt.simulate_defaults(levy.FirmValue(1.0, levy.brownian(-0.5, 0.5)), dt.DebtSchedule(1, 0.0, 20), 200, 0)
    assert not b.defaulted.any()


@settings(max_examples=30, deadline=None)
@given(b=st.floats(-0.5, -0.01), D=st.floats(0.05, 0.95), h=st.floats(0.01, 1.0))
def test_deterministic_closed_form(b, D, h):
    firm = levy.FirmValue(1.0, levy.brownian(b=b))
    crossing = math.log(D) / b
    K = int(crossing / h) + 3
    o = dt.sample_default_outcome(firm, dt.DebtSchedule(h, D, K), RngStream(0, 0))
    k_exp = math.ceil(crossing / h - 1e-12)
    assert o.defaulted and abs(o.k - k_exp) <= 1
    assert o.tau_e == pytest.approx(crossing, rel=1e-9, abs=1e-12)
    assert o.gap == pytest.approx(o.tau_r - crossing, abs=1e-9)


def test_monotone_single_crossing():
    # strongly negative drift, tiny noise: one crossing, tau_e matches the linear crossing
    firm = levy.FirmValue(1.0, levy.brownian(-1.0, 1e-4))
    s = dt.DebtSchedule(0.3, math.exp(-0.5), 5)
    o = dt.sample_default_outcome(firm, s, RngStream(1, 0))
    assert o.tau_e == pytest.approx(0.5, abs=1e-3)


def test_economic_default_brownian():
    m = levy.brownian(0.0, 0.3)
    s = dt.DebtSchedule(0.5, 1.0, 10)
    t = dt.economic_default(m, s, 3, 0.1, -0.05, RngStream(2, 0))
    assert 1.0 <= t <= 1.5
    with pytest.raises(ValueError):
        dt.economic_default(m, s, 3, -0.1, -0.05, RngStream(2, 0))


def test_example1_regression_baseline():
    # Monte Carlo self-oracle at seed 42, 1e5 paths (full run gives 0.11653)
    p = dt.estimate_default_probabilities(EX1, EX1_SCHED, 20000, seed=42)
    assert p.total <= 1.0
    assert abs(p.total - 0.11653) < 4 * p.total_se


def test_example1_outputs_consistent():
    b = dt.simulate_defaults(EX1, EX1_SCHED, 20000, seed=7)
    d = b.defaulted
    N = EX1_SCHED.n_interval
    assert np.all((b.gap[d] >= 0) & (b.gap[d] <= N))
    assert np.all((b.tau_e[d] >= 0) & (b.tau_e[d] <= EX1_SCHED.horizon_payments * N))
    assert np.all(b.tau_e[d] <= b.tau_r[d])
    te = dt.tau_e_distribution_from(b)
    g = dt.gap_distribution_from(b, dt.GIVEN_DEFAULT)
    assert te.mean() == pytest.approx(np.mean(b.tau_r[d]) - g.mean(), abs=1e-12)
    un = dt.gap_distribution_from(b, dt.UNCONDITIONAL)
    assert un.total_weight == pytest.approx(d.mean())


def test_example2_outcomes_recorded():
    s = dt.DebtSchedule(0.25, 0.1, 40)
    b = dt.simulate_defaults(EX1, s, 20000, seed=42)
    assert b.defaulted.mean() < 0.01
    k_first = b.k[b.defaulted].min() if b.defaulted.any() else 40
    assert k_first > 4        # D = 0.1 from S0 = 1 needs several years


def test_workers_and_chunks_do_not_matter():
    a = dt.simulate_defaults(EX1, EX1_SCHED, 3000, seed=3)
    b = dt.simulate_defaults(EX1, EX1_SCHED, 3000, seed=3, workers=4, chunk=333)
    for f in ("k", "tau_e", "log_before", "log_at"):
        assert np.array_equal(getattr(a, f), getattr(b, f), equal_nan=True)


def test_gap_near_barrier_start():
    # a start just above D: default at the first date usually, with the gap arcsine on [0, N]
    firm = levy.FirmValue(1.0 + 1e-10, levy.brownian(0.0, 0.3))
    b = dt.simulate_defaults(firm, dt.DebtSchedule(1.0, 1.0, 1), 20000, seed=4)
    g = b.gap[b.defaulted]
    assert g.mean() == pytest.approx(0.5, abs=0.01)
    ks, p = ks_1samp(g, lambda s: (2 / np.pi) * np.arcsin(np.sqrt(np.clip(s, 0, 1))))
    assert p > 0.001


def test_gap_conditioning_modes():
    b = dt.simulate_defaults(EX1, EX1_SCHED, 5000, seed=1)
    k = int(np.bincount(b.k[b.defaulted]).argmax())
    g = dt.gap_distribution_from(b, k)
    assert g.total_weight == pytest.approx(1.0)
    with pytest.raises(NoDefaults):
        dt.gap_distribution_from(b, 10**6)
    with pytest.raises(ValueError):
        dt.gap_distribution_from(b, "bogus")


def test_lattice_u_matches_dp():
    walk = fl.LatticeWalk.from_ints([-1, 1], [0.5, 0.5], pitch=0.1)
    firm = dt.LatticeFirm(1.0, walk)
    s = dt.DebtSchedule(1.0, math.exp(-0.3), 30)
    n = 40000
    p = dt.estimate_default_probabilities(firm, s, n, seed=9)
    exact = fl.dp_default_probabilities(walk, 1.0, s.barrier, 30)
    se = np.sqrt(exact * (1 - exact) / n)
    assert np.all(np.abs(p.u - exact) <= 3 * se + 1e-12)
    # joint law from the ladder tables sums to u_k
    for k in (3, 7, 12):
        _, mass = fl.joint_first_passage_law(walk, 1.0, s.barrier, k)
        assert mass.sum() == pytest.approx(exact[k - 1], abs=1e-14)


def test_lattice_tau_e_law_matches_mc():
    walk = fl.LatticeWalk.from_ints([-1, 1], [0.55, 0.45], pitch=0.1)
    firm = dt.LatticeFirm(1.0, walk, bridge_sigma=0.1)
    s = dt.DebtSchedule(1.0, math.exp(-0.25), 12)
    edges = np.linspace(0, 12, 25)
    mass, total = dt.lattice_tau_e_law(firm, s, edges)
    b = dt.simulate_defaults(firm, s, 40000, seed=5)
    d = b.defaulted
    assert d.mean() == pytest.approx(total, abs=4 * math.sqrt(total * (1 - total) / d.size))
    emp = np.histogram(b.tau_e[d], edges)[0] / d.sum()
    se = np.sqrt(mass * (1 - mass) / d.sum())
    assert np.all(np.abs(emp - mass) <= 4 * se + 1e-3)


def test_markov_restart_mixture():
    # the gap law rebuilt from restarts matches an independent direct sample
    bA = dt.simulate_defaults(EX1, EX1_SCHED, 30000, seed=11, lane=0)
    bB = dt.simulate_defaults(EX1, EX1_SCHED, 30000, seed=11, lane=1)
    r = dt.markov_restart_gaps(bA, EX1.model, seed=11)
    edges = np.linspace(0, EX1_SCHED.n_interval, 16)
    _, _, p = chi2_homogeneity(np.histogram(r, edges)[0], np.histogram(bB.gap[bB.defaulted], edges)[0])
    assert p > 0.001


def test_restart_at_barrier_jump_diffusion():
    # gap given default at the first date, two constructions (direct rejection vs barrier restart)
    m = levy.jump_diffusion(b=-0.2, sigma=0.3, intensity=2.0, dist="exponential", rate=5.0)
    x = math.log(1.3)
    gb, drawn = dt.barrier_restart_gaps(m, x, 0.0, 1.0, 4000, seed=5)
    ga = dt.one_period_gaps(m, np.full(4000, x), 0.0, 1.0, seed=6)
    assert drawn >= gb.size == 4000
    assert stats.ks_2samp(ga, gb).pvalue > 0.001


def test_one_period_gaps_brownian_arcsine():
    m = levy.brownian(0.0, 1.0)
    g = dt.one_period_gaps(m, np.zeros(20000), 0.0, 1.0, seed=2)
    ks, p = ks_1samp(g, lambda s: (2 / np.pi) * np.arcsin(np.sqrt(np.clip(s, 0, 1))))
    assert p > 0.001


def test_stable_engine_runs():
    firm = levy.FirmValue(1.0, levy.alpha_stable(1.5, 0.1, 0.0))
    s = dt.DebtSchedule(0.25, 0.7, 8)
    b = dt.simulate_defaults(firm, s, 500, seed=1, substeps=32)
    d = b.defaulted
    assert d.any()
    assert np.all((b.gap[d] >= 0) & (b.gap[d] <= 0.25 + 1e-12))
