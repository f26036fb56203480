"""Brute-force oracles: enumerate every step sequence of a lattice walk.

Shares nothing with the dynamic programs in :mod:`defaultgap.fluctuation`
beyond the walk definition.  Cost is ``len(steps) ** n``; keep ``n`` small.
"""
import itertools

import numpy as np


def all_paths(walk, n):
    """Every length-``n`` path: ``(positions[path, 0..n], prob[path])``."""
    steps, probs = walk.steps, walk.probs
    if n == 0:
        return np.zeros((1, 1), dtype=np.int64), np.ones(1)
    idx = np.array(list(itertools.product(range(len(steps)), repeat=n)), dtype=np.int64)
    pos = np.concatenate([np.zeros((idx.shape[0], 1), dtype=np.int64), np.cumsum(steps[idx], axis=1)], axis=1)
    prob = np.prod(probs[idx], axis=1)
    keep = prob > 0
    return pos[keep], prob[keep]


def first_passage_law(walk, A, k):
    """``{w: P(tau = k, W_k = w)}`` with ``tau = min{n : W_n <= -A}``."""
    pos, prob = all_paths(walk, k)
    alive = np.all(pos[:, 1:k] > -A, axis=1) & (pos[:, k] <= -A)
    out = {}
    for w, p in zip(pos[alive, k], prob[alive]):
        out[int(w)] = out.get(int(w), 0.0) + float(p)
    return out


def first_passage_with_prefix(walk, A, k):
    pos, prob = all_paths(walk, k)
    alive = np.all(pos[:, 1:k] > -A, axis=1) & (pos[:, k] <= -A)
    out = {}
    for v, w, p in zip(pos[alive, k - 1], pos[alive, k], prob[alive]):
        key = (int(v), int(w))
        out[key] = out.get(key, 0.0) + float(p)
    return out


def first_ladder_law(walk, n_max):
    """``{(n, j): P(T1+ = n, H1+ = j)}`` for the first strict ascent, ``n <= n_max``."""
    pos, prob = all_paths(walk, n_max)
    out = {}
    running = np.maximum.accumulate(pos[:, 1:], axis=1)
    for r in range(pos.shape[0]):
        hit = np.nonzero(running[r] > 0)[0]
        if hit.size:
            n = int(hit[0]) + 1
            key = (n, int(pos[r, n]))
            out[key] = out.get(key, 0.0) + float(prob[r])
    return out


def renewal_mass(walk, i, ascending=True, strict=True):
    """``{z: P(S_i = z, S_i is a (strict/weak) running max or min)}``."""
    pos, prob = all_paths(walk, i)
    end = pos[:, i:i + 1]
    prev = pos[:, :i]
    if ascending:
        ok = np.all(end > prev, axis=1) if strict else np.all(end >= prev, axis=1)
    else:
        ok = np.all(end < prev, axis=1) if strict else np.all(end <= prev, axis=1)
    out = {}
    for z, p in zip(end[ok, 0], prob[ok]):
        out[int(z)] = out.get(int(z), 0.0) + float(p)
    return out


def lemma_law(walk, x, n_max, last_argmax=False):
    """``{(i, j, y, v, u): mass}`` at the first passage strictly above ``x``."""
    pos, prob = all_paths(walk, n_max)
    out = {}
    for r in range(pos.shape[0]):
        above = np.nonzero(pos[r, 1:] > x)[0]
        if not above.size:
            continue
        sig = int(above[0]) + 1
        pre = pos[r, :sig]
        mx = pre.max()
        ties = np.nonzero(pre == mx)[0]
        theta = int(ties[-1] if last_argmax else ties[0])
        key = (sig - 1 - theta, theta, int(x - mx), int(x - pre[-1]), int(pos[r, sig] - x))
        out[key] = out.get(key, 0.0) + float(prob[r])
    return out
