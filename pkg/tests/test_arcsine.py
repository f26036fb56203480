import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from defaultgap import arcsine as A
from defaultgap import default_times as dt, levy
from defaultgap.errors import OutOfSupport
from defaultgap.stats import ks_1samp


def test_phi_values():
    assert A.phi_aux(0.0) == pytest.approx(1.0, abs=1e-12)
    assert A.phi_quad(1.0) == pytest.approx(A.phi_laguerre(1.0), abs=1e-8)
    assert A.phi_aux(1.0) == pytest.approx(float(A.phi_closed(1.0)), abs=1e-10)


def test_phi_increasing_convex():
    grid = [0.0, 0.5, 1.0, 2.0, 4.0]
    v = np.array([A.phi_aux(a) for a in grid])
    assert np.all(np.diff(v) > 0)
    slopes = np.diff(v) / np.diff(grid)
    assert np.all(np.diff(slopes) > 0)


@settings(max_examples=30, deadline=None)
@given(a=st.floats(0.0, 5.0))
def test_phi_closed_matches_quadrature(a):
    assert float(A.phi_closed(a)) == pytest.approx(A.phi_quad(a), rel=1e-9)


def test_arcsine_case():
    p = A.GapDensityParams(1.0, 0.0, 0.0)
    assert A.gap_density(0.5, p) == pytest.approx(2 / math.pi)
    assert A.gap_mass(p) == pytest.approx(1.0, abs=1e-9)
    assert A.gap_cdf(0.0, p) == 0.0 and A.gap_cdf(1.0, p) == 1.0
    assert A.gap_cdf(0.5, p) == pytest.approx(0.5)
    assert A.gap_cdf(0.25, p) == pytest.approx(1 / 3)
    with pytest.raises(OutOfSupport):
        A.gap_density(1.0, p)
    with pytest.raises(OutOfSupport):
        A.gap_cdf(1.5, p)


@settings(max_examples=20, deadline=None)
@given(mu=st.floats(0.01, 3.0), u=st.floats(0.0, 0.8))
def test_literal_mass_closed_form(mu, u):
    # the literal density has mass exp(kappa^2 L / 2), not 1, once mu > 0
    p = A.GapDensityParams(1.0, u, mu)
    assert A.gap_mass(p) == pytest.approx(math.exp(p.kappa**2 * p.length / 2), rel=1e-9)


@settings(max_examples=20, deadline=None)
@given(mu=st.floats(0.0, 4.0), L=st.floats(0.1, 3.0))
def test_conditional_density_normalized(mu, L):
    p = A.GapDensityParams(L, 0.0, mu)
    f = lambda th: float(A.conditional_gap_density(L * math.sin(th) ** 2, p)) * 2 * L * math.sin(th) * math.cos(th)
    tot, _ = integrate.quad(f, 1e-12, math.pi / 2 - 1e-12, limit=200)
    assert tot == pytest.approx(1.0, abs=1e-8)
    assert A.conditional_gap_cdf(L, p) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("mu", [0.04, 1.0, 2.0])
def test_conditional_density_matches_mc(mu):
    p = A.GapDensityParams(1.0, 0.0, mu)
    gaps = dt.one_period_gaps(levy.brownian(-0.5 * mu * mu, mu), np.zeros(30000), 0.0, 1.0, seed=3)
    th = np.linspace(0, math.pi / 2, 301)
    cdf = A.conditional_gap_cdf(np.sin(th) ** 2, p)
    ks, pval = ks_1samp(gaps, lambda s: np.interp(np.arcsin(np.sqrt(np.clip(s, 0, 1))), th, cdf))
    assert pval > 0.001


def test_literal_normalized_shape_at_small_mu():
    # at mu = 0.04 the normalized literal density is close to the truth (KS < 0.015)
    p = A.GapDensityParams(1.0, 0.0, 0.04)
    gaps = dt.one_period_gaps(levy.brownian(-0.0008, 0.04), np.zeros(100000), 0.0, 1.0, seed=4)
    th = np.linspace(0, math.pi / 2, 301)
    cdf = A.gap_cdf(np.sin(th) ** 2, p)
    ks, _ = ks_1samp(gaps, lambda s: np.interp(np.arcsin(np.sqrt(np.clip(s, 0, 1))), th, cdf))
    assert ks < 0.015


def test_density_table(tmp_path):
    p = A.GapDensityParams(1.0, 0.2, 0.5)
    s, pdf, cdf = A.density_table(p, 50, tmp_path / "d.csv")
    assert np.all(pdf > 0) and np.all(np.diff(cdf) > 0) and s.max() < p.length
    assert (tmp_path / "d.csv").read_text().splitlines()[0] == "s,pdf,cdf"
