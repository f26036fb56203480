"""Exact ladder computations for random walks on a lattice ``h * Z``.

All renewal tables are indexed by (height, time).  With ``S`` the walk,

* ``U+(z, i) = P(S_i = z, S_i > S_l for all l < i)`` (strict ascending), or
  with ``>=`` for the weak variant;
* ``U-(d, i) = P(S_i = -d, S_i <= S_l for all l < i)`` (weak descending), or
  with ``<`` for the strict variant.

Reversing time turns "``S_i`` is a running maximum" into "the walk stays
above its start", so every table is the survivor mass of a walk killed on
leaving a half-line, computed by :func:`defaultgap.kernels.walk_dp`.  Both
include the unit mass at ``(0, 0)``.

Heights and positions below are integers in units of the pitch.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelError, TruncationTooSevere
from .kernels import walk_dp
from .stats import write_rows

STRICT_ASC = "strict_ascending"    # strict up / weak down (ties go down)
WEAK_ASC = "weak_ascending"        # weak up / strict down


@dataclass(frozen=True)
class LatticeWalk:
    step_values: tuple
    step_probs: tuple
    pitch: float = 1.0

    def __post_init__(self):
        vals = np.asarray(self.step_values, dtype=float)
        probs = np.asarray(self.step_probs, dtype=float)
        problems = []
        if not self.pitch > 0:
            problems.append("pitch must be positive")
        if vals.shape != probs.shape or vals.size == 0:
            problems.append("step values and probabilities must be nonempty and aligned")
        elif np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            problems.append("step probabilities must be nonnegative and sum to 1")
        elif self.pitch > 0:
            q = vals / self.pitch
            if np.any(np.abs(q - np.round(q)) > 1e-9 * np.maximum(1.0, np.abs(q))):
                problems.append("step values must be integer multiples of the pitch")
        if problems:
            raise ModelError(problems)
        object.__setattr__(self, "step_values", tuple(float(v) for v in vals))
        object.__setattr__(self, "step_probs", tuple(float(p) for p in probs))

    @classmethod
    def from_ints(cls, steps, probs, pitch=1.0):
        return cls(tuple(float(s) * pitch for s in steps), tuple(probs), pitch)

    @property
    def steps(self):
        """Integer steps (lattice units)."""
        return np.rint(np.asarray(self.step_values) / self.pitch).astype(np.int64)

    @property
    def probs(self):
        return np.asarray(self.step_probs)

    def step_pmf(self, j):
        """``F({j})`` for integer ``j`` (vectorised)."""
        j = np.asarray(j)
        out = np.zeros(j.shape)
        for s, p in zip(self.steps, self.probs):
            out = out + np.where(j == s, p, 0.0)
        return out

    def sample_steps(self, gen, size):
        return self.steps[gen.choice(len(self.step_probs), size=size, p=self.probs)]


def discretize(cdf, pitch, span):
    """Lattice walk with cell masses ``F((j+1/2)h) - F((j-1/2)h)``, ``|j h| <= span``.

    The two end cells absorb the tails.  Returns ``(walk, report)``; the report
    gives the tail mass folded into the end cells and the variance error.
    """
    J = int(math.ceil(span / pitch))
    j = np.arange(-J, J + 1)
    edges = np.concatenate([[-np.inf], (j[:-1] + 0.5) * pitch, [np.inf]])
    probs = np.diff(cdf(edges))
    probs = np.clip(probs, 0.0, None)
    probs = probs / probs.sum()
    folded = float(cdf(np.array([(-J + 0.5) * pitch]))[0] + 1 - cdf(np.array([(J - 0.5) * pitch]))[0])
    keep = probs > 0
    walk = LatticeWalk.from_ints(j[keep], probs[keep], pitch)
    return walk, {"pitch": pitch, "span": J * pitch, "tail_mass_folded": folded}


def _survivor(walk, n, lo, hi):
    return walk_dp(walk.steps, walk.probs, n, lo, hi)


@dataclass
class LadderTables:
    """Renewal tables ``[time, height]`` for both ladder pairings."""
    walk: LatticeWalk
    n_max: int
    up_strict: np.ndarray
    up_weak: np.ndarray
    down_weak: np.ndarray
    down_strict: np.ndarray
    first_up: np.ndarray                # P(T1+ = n, H1+ = j), strict ladder
    first_down: np.ndarray              # P(T1- = n, depth = d), weak ladder
    convention: str = STRICT_ASC
    tail: dict = field(default_factory=dict)

    @property
    def u_plus(self):
        return self.up_strict if self.convention == STRICT_ASC else self.up_weak

    @property
    def u_minus(self):
        return self.down_weak if self.convention == STRICT_ASC else self.down_strict

    @property
    def tail_bound(self):
        return max(self.tail.values()) if self.tail else 0.0

    def to_csv(self, path, which="plus"):
        table = self.u_plus if which == "plus" else self.u_minus
        rows = ((z, i, table[i, z]) for i in range(table.shape[0])
                for z in range(table.shape[1]) if table[i, z] != 0.0)
        write_rows(path, ["height", "epoch", "mass"], rows)


def _ascending(walk, n, lowest):
    """Survivor mass of the walk kept in ``[lowest, inf)``, as ``[time, height]``."""
    pos, kept, gone = _survivor(walk, n, lowest, None)
    origin = -pos[0]
    return kept[:, origin:], gone, pos


def _descending(walk, n, highest):
    pos, kept, gone = _survivor(walk, n, None, highest)
    origin = -pos[0]
    return kept[:, origin::-1], gone, pos


def build_ladder_tables(walk, h_max=None, i_max=None, n_max=32, convention=STRICT_ASC, tol=None):
    """Renewal tables for epochs ``<= min(i_max, n_max)`` and heights ``<= h_max``.

    ``tail`` reports the mass lost to each truncation: ladder epochs beyond
    ``n_max`` (``P(T1 > n_max)`` for each direction) and renewal mass above
    ``h_max``.  With ``tol`` set, a tail above it raises
    :class:`TruncationTooSevere`.
    """
    if convention not in (STRICT_ASC, WEAK_ASC):
        raise ValueError(f"unknown convention {convention!r}")
    n = int(n_max if i_max is None else min(i_max, n_max))
    up_s, _, _ = _ascending(walk, n, 1)
    up_w, _, _ = _ascending(walk, n, 0)
    dn_w, _, _ = _descending(walk, n, 0)
    dn_s, _, _ = _descending(walk, n, -1)
    # first strict ascent: walk kept in (-inf, 0], killed on the way up
    pos, kept_neg, gone_up = _survivor(walk, n_max, None, 0)
    origin = -pos[0]
    first_up = gone_up[:, origin:]
    pos2, kept_pos, gone_dn = _survivor(walk, n_max, 1, None)
    origin2 = -pos2[0]
    first_down = gone_dn[:, origin2::-1]
    tail = {
        "ascending_epoch": float(kept_neg[-1].sum()),
        "descending_epoch": float(kept_pos[-1].sum()),
    }
    tables = [up_s, up_w, dn_w, dn_s]
    if h_max is not None:
        h_max = int(h_max)
        tail["height"] = float(max(t[:, h_max + 1:].sum(axis=1).max(initial=0.0) for t in tables))
        tables = [t[:, :h_max + 1] for t in tables]
    lt = LadderTables(walk, int(n_max), *tables, first_up, first_down, convention, tail)
    if tol is not None and lt.tail_bound > tol:
        raise TruncationTooSevere(f"truncation tail {lt.tail_bound:.3g} exceeds {tol:.3g}")
    return lt


def _barrier_units(walk, x0, barrier):
    """Distance ``A >= 1`` (lattice units) so that default means ``W <= -A``."""
    if not (x0 > barrier > 0):
        raise ValueError("need x0 > barrier > 0")
    a = math.log(x0 / barrier) / walk.pitch
    if abs(a - round(a)) < 1e-9:
        return max(int(round(a)), 1)
    return int(math.ceil(a))


def prefix_law(tables, A, k):
    """``P(tau > k-1, W_{k-1} = v)`` assembled from the renewal tables.

    Decomposes each surviving path at its running minimum (last or first
    argmin according to the convention); returns ``(mass, v_lo)``.
    """
    up, dn = tables.u_plus, tables.u_minus
    m = k - 1
    if m >= up.shape[0]:
        raise ValueError("k exceeds the tables' epoch range + 1")
    total = None
    for i in range(m + 1):
        # pre-part: minimum z = -d with 0 <= d <= A-1
        pre = np.zeros(A)
        d = dn[i, :A]
        pre[:d.size] = d
        pre = pre[::-1]                         # index 0 <-> z = -(A-1)
        post = up[m - i]
        conv = np.convolve(pre, post)
        if total is None:
            total = conv
        else:
            n = max(total.size, conv.size)
            total = np.pad(total, (0, n - total.size)) + np.pad(conv, (0, n - conv.size))
    return total, -(A - 1)


def joint_first_passage_law(walk, x0, barrier, k, tables=None, with_prefix=False):
    """Law of ``(tau_r = k, W_k)`` for ``log S = log x0 + h * W``.

    Returns ``(w, mass)`` over terminal lattice positions ``w <= -A``
    (``log S_{tau_r} = log x0 + h w``).  With ``with_prefix=True`` returns
    ``(v, w, mass[v, w])``, the joint law with the pre-default position.
    """
    A = _barrier_units(walk, x0, barrier)
    if tables is None:
        tables = build_ladder_tables(walk, n_max=max(k - 1, 1))
    pre, v_lo = prefix_law(tables, A, k)
    v = v_lo + np.arange(pre.size)
    smin, smax = int(walk.steps.min()), int(walk.steps.max())
    w_lo = v[0] + smin
    w = np.arange(w_lo, min(-A, v[-1] + smax) + 1)
    if w.size == 0:
        w = np.array([-A])
        return (v, w, np.zeros((v.size, 1))) if with_prefix else (w, np.zeros(1))
    joint = pre[:, None] * walk.step_pmf(w[None, :] - v[:, None])
    if with_prefix:
        return v, w, joint
    return w, joint.sum(axis=0)


def dp_default_probabilities(walk, x0, barrier, K):
    """``u_k = P(tau_r = k)`` for ``k = 1..K`` by direct killed-walk DP."""
    A = _barrier_units(walk, x0, barrier)
    _, _, gone = walk_dp(walk.steps, walk.probs, K, -A + 1, None)
    return gone[1:].sum(axis=1)


def fristedt_check(walk, r, t, n_max=200, tables=None):
    """Both sides of ``1 - E[r^T e^{itH}] = exp(-sum r^n/n E[e^{itS_n}; S_n > 0])``.

    ``(T, H)`` is the first strict ascending ladder epoch and height; ``t``
    multiplies the physical height ``j * pitch``.  Returns ``(lhs, rhs,
    bound)``; ``bound`` covers both truncations at ``n_max`` plus rounding.
    """
    if not 0 < abs(r) < 1:
        raise ValueError("need 0 < |r| < 1")
    if tables is None or tables.n_max < n_max:
        tables = build_ladder_tables(walk, n_max=n_max, i_max=0)
    n_max = tables.n_max
    h = walk.pitch
    fu = tables.first_up[: n_max + 1]
    n = np.arange(fu.shape[0])
    j = np.arange(fu.shape[1])
    rn = float(r) ** n
    lhs = 1.0 - np.sum(rn[:, None] * np.exp(1j * t * j * h)[None, :] * fu)
    pos, free, _ = walk_dp(walk.steps, walk.probs, n_max, None, None)
    posmask = pos > 0
    ph = np.exp(1j * t * pos[posmask] * h)
    series = 0.0 + 0.0j
    for m in range(1, n_max + 1):
        series += rn[m] / m * np.sum(free[m, posmask] * ph)
    rhs = np.exp(-series)
    left_tail = abs(r) ** (n_max + 1) * tables.tail["ascending_epoch"]
    delta = abs(r) ** (n_max + 1) / ((n_max + 1) * (1 - abs(r)))
    right_tail = abs(rhs) * math.expm1(delta)
    rounding = 8.0 * n_max * np.finfo(float).eps
    return complex(lhs), complex(rhs), float(left_tail + right_tail + rounding)


def ladder_lemma_law(walk, x, n_max, convention=STRICT_ASC, tables=None):
    """Joint law at the first strict passage above ``x`` (lattice units).

    With ``sigma = inf{n : S_n > x}`` and ``theta`` the argmax of ``S`` on
    ``[0, sigma-1]`` (first argmax under ``STRICT_ASC``, last under
    ``WEAK_ASC``) the entry ``[i, j, y, v, u]`` is the probability that
    ``sigma - 1 - theta = i``, ``theta = j``, ``x - S_theta = y``,
    ``x - S_{sigma-1} = v`` and ``S_sigma - x = u`` (index ``u - 1``), for
    ``sigma <= n_max``.  Each entry is ``U+(x-y, j) U-(v-y, i) F(u+v)``.
    """
    if tables is None or tables.n_max < n_max or tables.convention != convention:
        tables = build_ladder_tables(walk, n_max=n_max, convention=convention)
    up, dn = tables.u_plus, tables.u_minus
    smax = int(walk.steps.max())
    if smax <= 0:
        return np.zeros((n_max, n_max, x + 1, 1, 1))
    vmax = n_max * max(0, -int(walk.steps.min())) + x
    umax = smax
    out = np.zeros((n_max, n_max, x + 1, vmax + 1, umax))
    u = np.arange(1, umax + 1)
    for j in range(n_max):
        for i in range(n_max - j):
            for y in range(x + 1):
                a = up[j, x - y] if x - y < up.shape[1] else 0.0
                if a == 0.0:
                    continue
                for v in range(y, vmax + 1):
                    d = v - y
                    b = dn[i, d] if d < dn.shape[1] else 0.0
                    if b == 0.0:
                        continue
                    out[i, j, y, v] = a * b * walk.step_pmf(u + v)
    return out


def overshoot_law(walk, x, n_max):
    """``P(sigma_x <= n_max, S_sigma - x = u)`` for ``u = 1..max step``, by DP."""
    pos, _, gone = walk_dp(walk.steps, walk.probs, n_max, None, x)
    smax = int(walk.steps.max())
    out = np.zeros(max(smax, 1))
    for uu in range(1, smax + 1):
        idx = np.nonzero(pos == x + uu)[0]
        if idx.size:
            out[uu - 1] = gone[1:, idx[0]].sum()
    return out
