import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from defaultgap import enumeration as E
from defaultgap import fluctuation as fl
from defaultgap.errors import ModelError, TruncationTooSevere

SYM = fl.LatticeWalk.from_ints([-1, 1], [0.5, 0.5])
UP = fl.LatticeWalk.from_ints([1], [1.0])
DOWN = fl.LatticeWalk.from_ints([-2, -1], [0.5, 0.5])


@st.composite
def walks(draw, max_steps=4):
    steps = draw(st.lists(st.integers(-3, 3), min_size=2, max_size=max_steps, unique=True))
    w = np.array(draw(st.lists(st.integers(1, 9), min_size=len(steps), max_size=len(steps))), dtype=float)
    return fl.LatticeWalk.from_ints(steps, tuple(w / w.sum()))


def test_walk_validation():
    with pytest.raises(ModelError):
        fl.LatticeWalk((0.15,), (1.0,), 0.1)
    with pytest.raises(ModelError):
        fl.LatticeWalk((1.0, -1.0), (0.5, 0.6))
    w = fl.LatticeWalk.from_ints([-1, 2], [0.4, 0.6], pitch=0.05)
    assert list(w.steps) == [-1, 2] and w.step_pmf(2) == 0.6


def test_discretize_gaussian():
    walk, rep = fl.discretize(stats.norm(0, 0.2).cdf, 0.01, 1.0)
    assert walk.probs.sum() == pytest.approx(1.0)
    m = np.dot(walk.steps * walk.pitch, walk.probs)
    v = np.dot((walk.steps * walk.pitch) ** 2, walk.probs)
    assert abs(m) < 1e-12 and v == pytest.approx(0.04 + 0.01**2 / 12, rel=1e-3)
    assert rep["tail_mass_folded"] < 1e-6


def test_first_ladder_symmetric_16():
    tables = fl.build_ladder_tables(SYM, n_max=16)
    ref = E.first_ladder_law(SYM, 16)
    assert all(j == 1 for (_, j) in ref)
    dp = tables.first_up[1:17, 1].sum()
    assert dp == pytest.approx(sum(ref.values()), abs=1e-12)
    for (n, j), p in ref.items():
        assert tables.first_up[n, j] == pytest.approx(p, abs=1e-12)


def test_degenerate_walks():
    t = fl.build_ladder_tables(UP, n_max=6)
    U = t.u_plus
    for i in range(U.shape[0]):
        for j in range(U.shape[1]):
            assert U[i, j] == (1.0 if i == j else 0.0)
    t = fl.build_ladder_tables(DOWN, n_max=6)
    assert t.u_plus[0, 0] == 1.0 and t.u_plus[1:].sum() == 0.0


@settings(max_examples=25, deadline=None)
@given(walk=walks(), i=st.integers(0, 6))
def test_renewal_tables_vs_enumeration(walk, i):
    t = fl.build_ladder_tables(walk, n_max=6)
    cases = [(t.up_strict, True, True), (t.up_weak, True, False),
             (t.down_weak, False, False), (t.down_strict, False, True)]
    for table, asc, strict in cases:
        ref = E.renewal_mass(walk, i, ascending=asc, strict=strict)
        for z, p in ref.items():
            h = z if asc else -z
            assert table[i, h] == pytest.approx(p, abs=1e-14)
        assert table[i].sum() == pytest.approx(sum(ref.values()), abs=1e-13)


@settings(max_examples=25, deadline=None)
@given(walk=walks(), k=st.integers(1, 7), A=st.integers(1, 4),
       conv=st.sampled_from([fl.STRICT_ASC, fl.WEAK_ASC]))
def test_joint_law_vs_enumeration(walk, k, A, conv):
    t = fl.build_ladder_tables(walk, n_max=max(k - 1, 1), convention=conv)
    w, m = fl.joint_first_passage_law(walk, math.exp(A), 1.0, k, tables=t)
    ref = E.first_passage_law(walk, A, k)
    dp = dict(zip(w.tolist(), m.tolist()))
    tv = 0.5 * sum(abs(dp.get(q, 0.0) - ref.get(q, 0.0)) for q in set(dp) | set(ref))
    assert tv < 1e-12
    v, w2, joint = fl.joint_first_passage_law(walk, math.exp(A), 1.0, k, tables=t, with_prefix=True)
    ref2 = E.first_passage_with_prefix(walk, A, k)
    for (vv, ww), p in ref2.items():
        assert joint[vv - v[0], ww - w2[0]] == pytest.approx(p, abs=1e-13)


def test_joint_law_single_step():
    walk = fl.LatticeWalk.from_ints([-4, -2, -1, 1, 3], [0.1, 0.2, 0.2, 0.3, 0.2])
    w, m = fl.joint_first_passage_law(walk, math.exp(2), 1.0, 1)
    assert {a: b for a, b in zip(w.tolist(), m.tolist()) if b} == {-4: 0.1, -2: 0.2}


def test_joint_law_matches_dp_u():
    walk = fl.LatticeWalk.from_ints([-2, -1, 1, 2], [0.2, 0.3, 0.3, 0.2], pitch=0.1)
    u = fl.dp_default_probabilities(walk, 1.0, math.exp(-0.3), 15)
    t = fl.build_ladder_tables(walk, n_max=14)
    for k in range(1, 16):
        assert fl.joint_first_passage_law(walk, 1.0, math.exp(-0.3), k, tables=t)[1].sum() == \
            pytest.approx(u[k - 1], abs=1e-15)


def test_fristedt_examples():
    w = fl.LatticeWalk.from_ints([-1, 0, 1], [0.3, 0.3, 0.4])
    r = 1e-4
    lhs, rhs, _ = fl.fristedt_check(w, r, 0.0)
    first = 1 - r * 0.4
    assert abs(lhs - first) < 1e-6 and abs(rhs - first) < 1e-6
    lhs, rhs, bound = fl.fristedt_check(SYM, 0.5, 1.0)
    assert abs(lhs - rhs) < 1e-8 and abs(lhs - rhs) <= bound
    for r, t in ((0.5, 1.0), (0.9, 2.5)):
        lhs, rhs, bound = fl.fristedt_check(UP, r, t)
        exact = 1 - r * np.exp(1j * t)
        assert abs(lhs - exact) < 1e-14 and abs(rhs - exact) <= bound


@settings(max_examples=20, deadline=None)
@given(walk=walks(), r=st.floats(0.05, 0.95), t=st.floats(0.0, 6.3))
def test_fristedt_within_bound(walk, r, t):
    lhs, rhs, bound = fl.fristedt_check(walk, r, t, n_max=150)
    assert abs(lhs - rhs) <= bound


def test_lemma_degenerate_epochs():
    walk = fl.LatticeWalk.from_ints([-1, 1, 3, 4], [0.4, 0.3, 0.2, 0.1])
    x = 2
    L = fl.ladder_lemma_law(walk, x, 6)
    for u in range(1, 5):
        assert L[0, 0, x, x, u - 1] == pytest.approx(walk.step_pmf(u + x))


@pytest.mark.parametrize("conv,last", [(fl.STRICT_ASC, False), (fl.WEAK_ASC, True)])
def test_lemma_vs_enumeration_simple_walk(conv, last):
    walk = fl.LatticeWalk.from_ints([-1, 0, 1], [0.3, 0.3, 0.4])
    L = fl.ladder_lemma_law(walk, 2, 10, convention=conv)
    ref = E.lemma_law(walk, 2, 10, last_argmax=last)
    for (i, j, y, v, u), p in ref.items():
        assert L[i, j, y, v, u - 1] == pytest.approx(p, abs=1e-14)
    assert L.sum() == pytest.approx(sum(ref.values()), abs=1e-13)
    assert np.allclose(L.sum(axis=(0, 1, 2, 3)), fl.overshoot_law(walk, 2, 10), atol=1e-14)


def test_symmetric_lemma_n12():
    L = fl.ladder_lemma_law(SYM, 2, 12)
    ref = E.lemma_law(SYM, 2, 12)
    err = max(abs(L[i, j, y, v, u - 1] - p) for (i, j, y, v, u), p in ref.items())
    assert err < 1e-14


def test_truncation_reported():
    drifting_down = fl.LatticeWalk.from_ints([-1, 1], [0.7, 0.3])
    t = fl.build_ladder_tables(drifting_down, n_max=5)
    assert t.tail["ascending_epoch"] > 0.1
    with pytest.raises(TruncationTooSevere):
        fl.build_ladder_tables(drifting_down, n_max=5, tol=1e-3)


def test_tables_csv(tmp_path):
    t = fl.build_ladder_tables(SYM, n_max=4)
    t.to_csv(tmp_path / "u.csv")
    lines = (tmp_path / "u.csv").read_text().splitlines()
    assert lines[0] == "height,epoch,mass" and len(lines) > 3
