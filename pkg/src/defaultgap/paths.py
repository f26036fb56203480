"""Sampling of log-value increments, grid paths and sub-interval passages.

Inside a monitoring interval the diffusive part of the path, given its
endpoints, is a Brownian bridge.  Passage times of a bridge across a level are
sampled exactly: reversing time turns the last passage into a first passage,
and for a bridge of length ``h`` the first passage time ``T`` at distance
``d`` satisfies ``T / (h - T) ~ InverseGaussian(d / e, d^2 / (sigma^2 h))``
where ``e`` is the distance of the other endpoint from the level (conditional
on the crossing when both endpoints lie on the same side).
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import levy
from .errors import NotApplicable
from .rng import RngStream
from .stable import sample_stable


@dataclass(frozen=True)
class TimeGrid:
    t0: float = 0.0
    dt: float = 1.0
    steps: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t0 < 0 or self.steps < 0:
            raise ValueError("t0 and steps must be nonnegative")

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(self.steps + 1)


@dataclass(frozen=True)
class PathSample:
    grid: TimeGrid
    log_values: np.ndarray

    def __post_init__(self):
        if len(self.log_values) != self.grid.steps + 1:
            raise ValueError("log_values must have steps + 1 entries")

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write("t,log_s\n")
            for t, x in zip(self.grid.times, self.log_values):
                fh.write(f"{t!r},{x!r}\n")


def _gen(rng):
    if isinstance(rng, RngStream):
        return rng.generator()
    return rng


def sample_increments(model, dt, size, rng):
    """``size`` independent draws of ``X_{t+dt} - X_t``.

    Draw order (normals, then Poisson counts, then jump sizes) is fixed so a
    stream always reproduces the same values.
    """
    gen = _gen(rng)
    if dt == 0:
        return np.zeros(size)
    if model.kind == levy.STABLE:
        st = model.stable
        x = sample_stable(gen, st.alpha, st.scale * dt ** (1.0 / st.alpha), st.beta, model.b * dt, size=size)
        if model.sigma > 0:
            x = x + model.sigma * math.sqrt(dt) * gen.standard_normal(size)
        return x
    x = model.path_drift * dt + model.sigma * math.sqrt(dt) * gen.standard_normal(size)
    if model.kind == levy.JUMP_DIFFUSION and model.jump_intensity > 0:
        counts = gen.poisson(model.jumps.intensity * dt, size=size)
        x = x + _sum_by_count(model.jumps.sample(gen, int(counts.sum())), counts)
    return x


def _sum_by_count(values, counts):
    out = np.zeros(counts.size)
    if values.size:
        idx = np.repeat(np.arange(counts.size), counts)
        np.add.at(out, idx, values)
    return out


def sample_increment(model, dt, rng):
    return float(sample_increments(model, dt, 1, rng)[0])


def sample_grid_path(firm, grid, rng):
    inc = sample_increments(firm.model, grid.dt, grid.steps, rng)
    return PathSample(grid, np.concatenate([[firm.log_s0], firm.log_s0 + np.cumsum(inc)]))


# -- Brownian bridge passages -----------------------------------------------

def bridge_crossing_prob(x_left, x_right, level, sigma, dt):
    """Probability that a Brownian bridge between the endpoints reaches ``level``.

    Written for a level below both endpoints (the default direction); the
    formula is symmetric, so a level above both endpoints works too.
    """
    if not sigma > 0:
        raise NotApplicable("bridge correction needs sigma > 0; refine the grid instead")
    a = np.asarray(x_left, dtype=float) - level
    c = np.asarray(x_right, dtype=float) - level
    with np.errstate(over="ignore"):
        p = np.exp(-2.0 * a * c / (sigma * sigma * dt))
    p = np.where(a * c <= 0, 1.0, p)
    return p[()] if p.ndim == 0 else p


def inverse_gaussian(inv_mean, shape, z, u):
    """Michael-Schucany-Haas transform of draws ``z ~ N(0,1)``, ``u ~ U(0,1)``.

    Parameterised by ``1/mean`` so the infinite-mean (Levy) limit is exact.
    """
    inv_mean = np.asarray(inv_mean, dtype=float)
    shape = np.asarray(shape, dtype=float)
    y = np.maximum(np.asarray(z, dtype=float) ** 2, 1e-300)
    root = np.sqrt(y * y + 4.0 * shape * y * inv_mean)
    x1 = 4.0 * shape * y / (y + root) ** 2
    accept = np.asarray(u) * (1.0 + x1 * inv_mean) <= 1.0
    with np.errstate(divide="ignore"):
        x2 = 1.0 / (inv_mean * inv_mean * x1)
    return np.where(accept, x1, x2)


def bridge_last_passage(a, c, sigma, h, z, u, v):
    """Last time in ``[0, h]`` a bridge from ``a`` to ``c`` sits at level 0.

    ``a``/``c`` are endpoint offsets from the level; ``z, u, v`` are a normal
    and two uniforms per bridge.  NaN where the bridge misses the level.
    """
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    h = np.asarray(h, dtype=float)
    s2h = sigma * sigma * h
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        cross_p = np.where(a * c <= 0, 1.0, np.exp(-2.0 * a * c / s2h))
        d = np.abs(c)
        e = np.abs(a)
        inv_mean = np.where(d > 0, e / np.where(d > 0, d, 1.0), 0.0)
        w = inverse_gaussian(inv_mean, d * d / s2h, z, u)
        back = np.where(np.isinf(w), h, h * w / (1.0 + w))
    back = np.where(d > 0, back, 0.0)
    t = h - back
    out = np.where(np.asarray(v) < cross_p, t, np.nan)
    return out[()] if out.ndim == 0 else out


def bridge_first_passage(a, c, sigma, h, z, u, v):
    """First time a bridge from ``a`` to ``c`` reaches level 0 (NaN if never)."""
    h = np.asarray(h, dtype=float)
    return h - bridge_last_passage(c, a, sigma, h, z, u, v)


def sample_last_crossing_in_interval(x_left, x_right, level, sigma, dt, rng):
    """Last time in ``[0, dt]`` the bridge is at ``level``; ``None`` if it never is.

    When ``x_left`` is above and ``x_right`` at or below the level this is the
    last time the path is at or above the level, i.e. the economic default
    time measured from the interval start.
    """
    if not sigma > 0:
        raise NotApplicable("bridge correction needs sigma > 0; refine the grid instead")
    gen = _gen(rng)
    z = gen.standard_normal()
    u, v = gen.random(2)
    t = bridge_last_passage(x_left - level, x_right - level, sigma, dt, z, u, v)
    return None if np.isnan(t) else float(t)


# -- jump-diffusion intervals -----------------------------------------------

def jump_interval_segments(x_left, cont, sizes, h, sigma, drift, gen):
    """Continuous segments of a jump-diffusion interval of length ``h``.

    ``cont`` is the interval's continuous increment (drift plus Brownian) and
    ``sizes`` its jump sizes; jump epochs and the Brownian values at them are
    drawn from ``gen``.  Returns ``(edges, left, right)`` with the path
    continuous on ``[edges[s], edges[s+1])`` running from ``left[s]`` to
    ``right[s]``.
    """
    m = len(sizes)
    times = np.sort(gen.random(m) * h)
    edges = np.concatenate([[0.0], times, [h]])
    b = np.empty(m + 2)
    b[0] = 0.0
    b[-1] = cont
    if sigma > 0:
        z = gen.standard_normal(m)
        for j in range(1, m + 1):
            span = h - edges[j - 1]
            frac = (edges[j] - edges[j - 1]) / span
            mean = b[j - 1] + (cont - b[j - 1]) * frac
            var = sigma * sigma * (edges[j] - edges[j - 1]) * (h - edges[j]) / span
            b[j] = mean + math.sqrt(max(var, 0.0)) * z[j - 1]
    else:
        b[1:-1] = drift * times
    jumps = np.concatenate([[0.0], np.cumsum(sizes)])
    left = x_left + b[:-1] + jumps
    right = x_left + b[1:] + jumps
    return edges, left, right


def segments_last_passage(edges, left, right, level, sigma, gen):
    """Last time the segmented path is at or above ``level`` (None if never)."""
    n = len(left)
    draws = gen.standard_normal(n), gen.random(n), gen.random(n)
    for s in range(n - 1, -1, -1):
        h = edges[s + 1] - edges[s]
        a, c = left[s] - level, right[s] - level
        if sigma > 0:
            t = bridge_last_passage(a, c, sigma, h, draws[0][s], draws[1][s], draws[2][s])
            if not np.isnan(t):
                return float(edges[s] + t)
        elif a >= 0 >= c:
            return float(edges[s] + (h if a == c else h * a / (a - c)))
    return None


def segments_first_passage(edges, left, right, level, sigma, gen):
    """First time the segmented path is at or below ``level`` (None if never)."""
    n = len(left)
    draws = gen.standard_normal(n), gen.random(n), gen.random(n)
    for s in range(n):
        h = edges[s + 1] - edges[s]
        a, c = left[s] - level, right[s] - level
        if sigma > 0:
            t = bridge_first_passage(a, c, sigma, h, draws[0][s], draws[1][s], draws[2][s])
            if not np.isnan(t):
                return float(edges[s] + t)
        elif a >= 0 >= c:
            return float(edges[s] + (0.0 if a == c else h * a / (a - c)))
        elif a < 0:
            return float(edges[s])
    return None


def sample_jump_interval(x_left, h, model, gen):
    """Fresh jump-diffusion interval from ``x_left``; returns its segments."""
    cont = model.path_drift * h + model.sigma * math.sqrt(h) * gen.standard_normal()
    m = gen.poisson(model.jump_intensity * h) if model.jump_intensity > 0 else 0
    sizes = model.jumps.sample(gen, m) if m else np.zeros(0)
    return jump_interval_segments(x_left, cont, sizes, h, model.sigma, model.path_drift, gen)


def bridge_gap_cdf(above, below, sigma, h, s):
    """``P(h - last passage <= s)`` for a bridge from ``level + above`` to ``level - below``.

    Closed-form inverse Gaussian CDF of ``W = T / (h - T)`` at ``s / (h - s)``;
    ``above > 0`` and ``below >= 0``.  Companion of :func:`bridge_last_passage`.
    """
    s = np.asarray(s, dtype=float)
    if below <= 0:
        return np.where(s >= 0, 1.0, 0.0)
    nu = below / above
    lam = below * below / (sigma * sigma * h)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(s < h, s / (h - s), np.inf)
        r = np.sqrt(lam / w)
        t1 = special.ndtr(r * (w / nu - 1.0))
        # e^{2 lam / nu} Phi(-r (w/nu + 1)), evaluated in log space
        t2 = np.exp(2.0 * lam / nu + special.log_ndtr(-r * (w / nu + 1.0)))
        out = np.where(w > 0, t1 + t2, 0.0)
    out = np.where(np.isinf(w), 1.0, out)
    return np.clip(out, 0.0, 1.0)
