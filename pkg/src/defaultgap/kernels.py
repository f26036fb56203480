"""Hot inner loops, each in a numba loop form and a vectorised numpy form.

The public names dispatch on :data:`defaultgap._accel.USE_NUMBA`.  Both forms
accumulate in the same order, so the simulation kernels agree bit for bit;
the lattice DP differs only by floating-point summation order.
"""
import math

import numpy as np

from . import _accel
from ._accel import jit


# -- discrete first passage -------------------------------------------------

@jit
def _first_passage_nb(x0, level, inc):
    n, m = inc.shape
    k = np.zeros(n, dtype=np.int64)
    before = np.full(n, np.nan)
    at = np.full(n, np.nan)
    for p in range(n):
        x = x0[p]
        for j in range(m):
            y = x + inc[p, j]
            if y <= level:
                k[p] = j + 1
                before[p] = x
                at[p] = y
                break
            x = y
    return k, before, at


def _first_passage_np(x0, level, inc):
    n = inc.shape[0]
    path = np.cumsum(np.column_stack([x0, inc]), axis=1)
    hit = path[:, 1:] <= level
    anyhit = hit.any(axis=1)
    first = np.argmax(hit, axis=1)
    k = np.where(anyhit, first + 1, 0).astype(np.int64)
    rows = np.arange(n)
    before = np.where(anyhit, path[rows, first], np.nan)
    at = np.where(anyhit, path[rows, first + 1], np.nan)
    return k, before, at


def first_passage(x0, level, increments):
    """First index ``k >= 1`` with ``x0 + sum(inc[:k]) <= level`` per row.

    Returns ``(k, x_before, x_at)``; ``k = 0`` (and NaN values) when the row
    never reaches the level.
    """
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    inc = np.ascontiguousarray(increments, dtype=np.float64)
    if _accel.USE_NUMBA:
        return _first_passage_nb(x0, float(level), inc)
    return _first_passage_np(x0, float(level), inc)


# -- continuous-barrier first hit with Brownian-bridge correction -----------

@jit
def _bridge_first_hit_nb(x0, level, inc, unif, sigma, dt):
    n, m = inc.shape
    out = np.zeros(n, dtype=np.int64)
    c = 2.0 / (sigma * sigma * dt)
    for p in range(n):
        x = x0[p]
        for j in range(m):
            y = x + inc[p, j]
            if y <= level or unif[p, j] < math.exp(-c * (x - level) * (y - level)):
                out[p] = j + 1
                break
            x = y
    return out


def _bridge_first_hit_np(x0, level, inc, unif, sigma, dt):
    path = np.cumsum(np.column_stack([x0, inc]), axis=1)
    left, right = path[:, :-1], path[:, 1:]
    c = 2.0 / (sigma * sigma * dt)
    with np.errstate(over="ignore"):
        prob = np.exp(-c * (left - level) * (right - level))
    hit = (right <= level) | (unif < prob)
    return np.where(hit.any(axis=1), np.argmax(hit, axis=1) + 1, 0).astype(np.int64)


def bridge_first_hit(x0, level, increments, uniforms, sigma, dt):
    """First step whose Brownian bridge touches ``level`` (0 if none).

    Step ``j`` is flagged when its right endpoint is at or below the level or
    when ``uniforms[:, j]`` falls under the bridge crossing probability.
    """
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    inc = np.ascontiguousarray(increments, dtype=np.float64)
    unif = np.ascontiguousarray(uniforms, dtype=np.float64)
    if _accel.USE_NUMBA:
        return _bridge_first_hit_nb(x0, float(level), inc, unif, float(sigma), float(dt))
    return _bridge_first_hit_np(x0, float(level), inc, unif, float(sigma), float(dt))


# -- sub-grid monitoring ----------------------------------------------------

@jit
def _subgrid_nb(x0, level, fine, m):
    n, total = fine.shape
    K = total // m
    k_out = np.zeros(n, dtype=np.int64)
    j_out = np.zeros(n, dtype=np.int64)
    at = np.full(n, np.nan)
    before = np.full(n, np.nan)
    buf = np.empty(m + 1)
    for p in range(n):
        x = x0[p]
        for k in range(K):
            buf[0] = x
            for s in range(m):
                x = x + fine[p, k * m + s]
                buf[s + 1] = x
            if x <= level:
                k_out[p] = k + 1
                at[p] = x
                before[p] = buf[0]
                last = 0
                for s in range(m, -1, -1):
                    if buf[s] >= level:
                        last = s
                        break
                j_out[p] = last
                break
    return k_out, j_out, before, at


def _subgrid_np(x0, level, fine, m):
    n, total = fine.shape
    K = total // m
    path = np.cumsum(np.column_stack([x0, fine]), axis=1)
    pay = path[:, m::m]
    hit = pay <= level
    anyhit = hit.any(axis=1)
    k0 = np.argmax(hit, axis=1)
    k = np.where(anyhit, k0 + 1, 0).astype(np.int64)
    rows = np.arange(n)
    idx = k0[:, None] * m + np.arange(m + 1)[None, :]
    seg = path[rows[:, None], np.minimum(idx, total)]
    above = seg >= level
    rev_first = np.argmax(above[:, ::-1], axis=1)
    j = np.where(anyhit, m - rev_first, 0).astype(np.int64)
    before = np.where(anyhit, seg[:, 0], np.nan)
    at = np.where(anyhit, seg[:, m], np.nan)
    return k, j, before, at


def subgrid_first_passage(x0, level, fine_increments, substeps):
    """Payment-date first passage with sub-grid location of the last visit.

    ``fine_increments`` holds ``K * substeps`` increments per row.  Returns
    ``(k, j, x_before, x_at)`` where ``j`` is the last sub-grid index inside
    the defaulting interval whose value is at or above ``level``.
    """
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    fine = np.ascontiguousarray(fine_increments, dtype=np.float64)
    if _accel.USE_NUMBA:
        return _subgrid_nb(x0, float(level), fine, int(substeps))
    return _subgrid_np(x0, float(level), fine, int(substeps))


# -- lattice walk dynamic programming --------------------------------------

@jit
def _walk_dp_nb(steps, probs, n_steps, origin, width, lo, hi):
    kept = np.zeros((n_steps + 1, width))
    gone = np.zeros((n_steps + 1, width))
    kept[0, origin] = 1.0
    cur = kept[0].copy()
    for t in range(1, n_steps + 1):
        new = np.zeros(width)
        for q in range(width):
            mq = cur[q]
            if mq == 0.0:
                continue
            for s in range(steps.size):
                r = q + steps[s]
                if 0 <= r < width:
                    new[r] += mq * probs[s]
        for q in range(width):
            pos = q - origin
            if lo <= pos <= hi:
                kept[t, q] = new[q]
            else:
                gone[t, q] = new[q]
        cur = kept[t].copy()
    return kept, gone


def _walk_dp_np(steps, probs, n_steps, origin, width, lo, hi):
    smin = int(steps.min())
    kernel = np.zeros(int(steps.max()) - smin + 1)
    np.add.at(kernel, steps - smin, probs)
    pos = np.arange(width) - origin
    keep = (pos >= lo) & (pos <= hi)
    kept = np.zeros((n_steps + 1, width))
    gone = np.zeros((n_steps + 1, width))
    kept[0, origin] = 1.0
    cur = kept[0]
    for t in range(1, n_steps + 1):
        full = np.convolve(cur, kernel)
        # full[i] sits at array index i + smin
        new = np.zeros(width)
        a = max(0, smin)
        b = min(width, full.size + smin)
        new[a:b] = full[a - smin:b - smin]
        kept[t] = np.where(keep, new, 0.0)
        gone[t] = np.where(keep, 0.0, new)
        cur = kept[t]
    return kept, gone


def walk_dp(steps, probs, n_steps, lo, hi):
    """Distribution of a lattice walk killed on leaving ``[lo, hi]``.

    Positions are integers (units of the lattice pitch); the walk starts at 0
    and the constraint applies from time 1 on.  Returns ``(positions, kept,
    gone)`` where ``kept[t, q]`` is the mass at ``positions[q]`` at time ``t``
    among survivors and ``gone[t, q]`` the mass killed at time ``t`` landing
    at ``positions[q]``.
    """
    steps = np.ascontiguousarray(steps, dtype=np.int64)
    probs = np.ascontiguousarray(probs, dtype=np.float64)
    n_steps = int(n_steps)
    pmin = n_steps * min(int(steps.min()), 0)
    pmax = n_steps * max(int(steps.max()), 0)
    origin = -pmin
    width = pmax - pmin + 1
    lo = max(int(lo), pmin) if lo is not None else pmin
    hi = min(int(hi), pmax) if hi is not None else pmax
    if _accel.USE_NUMBA:
        kept, gone = _walk_dp_nb(steps, probs, n_steps, origin, width, lo, hi)
    else:
        kept, gone = _walk_dp_np(steps, probs, n_steps, origin, width, lo, hi)
    return np.arange(pmin, pmax + 1), kept, gone


IMPLEMENTATIONS = {
    "first_passage": (_first_passage_nb, _first_passage_np),
    "bridge_first_hit": (_bridge_first_hit_nb, _bridge_first_hit_np),
    "subgrid_first_passage": (_subgrid_nb, _subgrid_np),
    "walk_dp": (_walk_dp_nb, _walk_dp_np),
}
