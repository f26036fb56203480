"""Recorded and economic default times.

``tau_r`` is the first payment date ``kN`` with ``S_{kN} <= D``; ``tau_e`` is
the last time in ``[tau_r - N, tau_r]`` with ``S_t >= D``.  Everything is
computed in log space with ``l = log D``.

How ``tau_e`` is located depends on the model:

* Brownian with ``sigma > 0``: exact bridge last-passage sample;
* Brownian with ``sigma = 0``: exact linear crossing;
* jump-diffusion: jumps of the interval are laid down first, then each
  continuous segment is scanned backwards (bridge or linear);
* alpha-stable: sub-grid monitoring with ``substeps`` points per interval;
* lattice skeletons: bridge with ``bridge_sigma`` between payment dates, or
  linear interpolation when it is zero.

Every path draws from its own :class:`~defaultgap.rng.RngStream`, so batches
are reproducible for any chunking and worker count.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import levy, paths
from .errors import BadStart, NoDefaults
from .fluctuation import LatticeWalk, build_ladder_tables, joint_first_passage_law
from .kernels import first_passage, subgrid_first_passage
from .rng import RngStream, generators, map_chunks, stream_id
from .stats import EmpiricalDistribution

DEFAULTED = "Defaulted"
SURVIVED = "Survived"


@dataclass(frozen=True)
class DebtSchedule:
    n_interval: float
    barrier: float
    horizon_payments: int = 40

    def __post_init__(self):
        if not self.n_interval > 0:
            raise ValueError("n_interval must be positive")
        # barrier 0 is allowed as "no debt": S_t > 0 never defaults
        if not self.barrier >= 0:
            raise ValueError("barrier must be nonnegative")
        if int(self.horizon_payments) < 1:
            raise ValueError("horizon_payments must be >= 1")

    @property
    def log_barrier(self):
        return math.log(self.barrier) if self.barrier > 0 else -math.inf

    @property
    def payment_dates(self):
        return self.n_interval * np.arange(1, self.horizon_payments + 1)


@dataclass(frozen=True)
class DefaultOutcome:
    status: str
    k: int = None
    tau_r: float = None
    tau_e: float = None
    gap: float = None
    value_at_default: float = None

    @property
    def defaulted(self):
        return self.status == DEFAULTED


@dataclass(frozen=True)
class LatticeFirm:
    """Firm whose log value at payment dates is a lattice walk.

    Between payment dates the log value is a Brownian bridge with volatility
    ``bridge_sigma`` (linear when zero).  The walk's pitch is in log units.
    """
    s0: float
    walk: LatticeWalk
    bridge_sigma: float = 0.0

    def __post_init__(self):
        if not self.s0 > 0:
            raise ValueError("s0 must be positive")

    @property
    def log_s0(self):
        return math.log(self.s0)


@dataclass
class OutcomeBatch:
    """Per-path results; ``k == 0`` marks survival to the horizon."""
    schedule: DebtSchedule
    k: np.ndarray
    tau_e: np.ndarray
    log_before: np.ndarray
    log_at: np.ndarray

    @property
    def n_paths(self):
        return self.k.size

    @property
    def defaulted(self):
        return self.k > 0

    @property
    def tau_r(self):
        return np.where(self.defaulted, self.k * self.schedule.n_interval, np.nan)

    @property
    def gap(self):
        return self.tau_r - self.tau_e

    def outcome(self, i):
        if self.k[i] == 0:
            return DefaultOutcome(SURVIVED)
        tr = float(self.k[i] * self.schedule.n_interval)
        te = float(self.tau_e[i])
        return DefaultOutcome(DEFAULTED, int(self.k[i]), tr, te, tr - te, float(np.exp(self.log_at[i])))

    @classmethod
    def concat(cls, schedule, parts):
        return cls(schedule, *(np.concatenate([getattr(p, f) for p in parts])
                               for f in ("k", "tau_e", "log_before", "log_at")))


# -- economic default inside one interval ------------------------------------

def economic_default(model, schedule, k, log_before, log_at, rng):
    """``tau_e`` for a Brownian model given the endpoints of defaulting interval ``k``.

    For Brownian motion the path inside the interval, given its endpoints,
    is a bridge, so the endpoints are the whole sampler context.  Other
    models need their interval internals; use :func:`sample_default_outcome`.
    """
    if model.kind != levy.BROWNIAN:
        raise ValueError("economic_default needs a Brownian model; jump and stable paths are resolved by the batch samplers")
    h = schedule.n_interval
    l = schedule.log_barrier
    if not log_before > l >= log_at:
        raise ValueError("interval must start above and end at or below the barrier")
    if model.sigma > 0:
        t = paths.sample_last_crossing_in_interval(log_before, log_at, l, model.sigma, h, rng)
    else:
        t = _linear_crossing(log_before - l, log_at - l, h)
    return (k - 1) * h + t


def _linear_crossing(a, c, h):
    return np.where(a == c, h, h * a / np.where(a == c, 1.0, a - c))


def _bridge_or_linear(a, c, sigma, h, z, u, v):
    if sigma > 0:
        return paths.bridge_last_passage(a, c, sigma, h, z, u, v)
    return _linear_crossing(a, c, h)


# -- engines: each returns (k, tau_e, log_before, log_at) for a list of gens --

def _brownian_rows(model, x0, l, h, K, gens):
    n = len(gens)
    z = np.empty((n, K))
    extra = np.empty((n, 3))
    for r, g in enumerate(gens):
        z[r] = g.standard_normal(K)
        extra[r, 0] = g.standard_normal()
        extra[r, 1:] = g.random(2)
    inc = model.b * h + model.sigma * math.sqrt(h) * z
    k, before, at = first_passage(np.full(n, x0), l, inc)
    te = np.full(n, np.nan)
    hit = k > 0
    if hit.any():
        t = _bridge_or_linear(before[hit] - l, at[hit] - l, model.sigma, h,
                              extra[hit, 0], extra[hit, 1], extra[hit, 2])
        te[hit] = (k[hit] - 1) * h + t
    return k, te, before, at


def _jump_row(model, x0, l, h, K, g):
    cont = model.path_drift * h + model.sigma * math.sqrt(h) * g.standard_normal(K)
    lam = model.jump_intensity
    counts = g.poisson(lam * h, size=K) if lam > 0 else np.zeros(K, dtype=np.int64)
    sizes = model.jumps.sample(g, int(counts.sum())) if counts.sum() else np.zeros(0)
    jumps = paths._sum_by_count(sizes, counts)
    x = x0 + np.cumsum(cont + jumps)
    below = np.nonzero(x <= l)[0]
    if not below.size:
        return 0, np.nan, np.nan, np.nan
    k = int(below[0]) + 1
    xb = x0 if k == 1 else x[k - 2]
    start = int(counts[:k - 1].sum())
    seg = paths.jump_interval_segments(xb, cont[k - 1], sizes[start:start + counts[k - 1]], h,
                                       model.sigma, model.path_drift, g)
    t = paths.segments_last_passage(*seg, l, model.sigma, g)
    return k, (k - 1) * h + t, xb, x[k - 1]


def _jump_rows(model, x0, l, h, K, gens):
    out = [_jump_row(model, x0, l, h, K, g) for g in gens]
    k = np.array([o[0] for o in out], dtype=np.int64)
    return k, *(np.array([o[i] for o in out], dtype=float) for i in (1, 2, 3))


def _stable_rows(model, x0, l, h, K, gens, substeps):
    n = len(gens)
    fine = np.empty((n, K * substeps))
    for r, g in enumerate(gens):
        fine[r] = paths.sample_increments(model, h / substeps, K * substeps, g)
    k, j, before, at = subgrid_first_passage(np.full(n, x0), l, fine, substeps)
    te = np.where(k > 0, (k - 1) * h + j * (h / substeps), np.nan)
    return k, te, before, at


def _lattice_rows(firm, l, h, K, gens):
    n = len(gens)
    walk = firm.walk
    steps = np.empty((n, K))
    extra = np.empty((n, 3))
    for r, g in enumerate(gens):
        steps[r] = walk.sample_steps(g, K)
        extra[r, 0] = g.standard_normal()
        extra[r, 1:] = g.random(2)
    x0 = firm.log_s0
    k, before, at = first_passage(np.full(n, x0), l, steps * walk.pitch)
    te = np.full(n, np.nan)
    hit = k > 0
    if hit.any():
        t = _bridge_or_linear(before[hit] - l, at[hit] - l, firm.bridge_sigma, h,
                              extra[hit, 0], extra[hit, 1], extra[hit, 2])
        te[hit] = (k[hit] - 1) * h + t
    return k, te, before, at


def _rows(firm, schedule, gens, substeps):
    h, K, l = schedule.n_interval, int(schedule.horizon_payments), schedule.log_barrier
    if isinstance(firm, LatticeFirm):
        return _lattice_rows(firm, l, h, K, gens)
    model = firm.model
    if model.kind == levy.BROWNIAN:
        return _brownian_rows(model, firm.log_s0, l, h, K, gens)
    if model.kind == levy.JUMP_DIFFUSION:
        return _jump_rows(model, firm.log_s0, l, h, K, gens)
    return _stable_rows(model, firm.log_s0, l, h, K, gens, substeps)


def _check_start(firm, schedule):
    if firm.s0 <= schedule.barrier:
        raise BadStart(f"s0 = {firm.s0} is not above the barrier {schedule.barrier}")


def simulate_defaults(firm, schedule, n_paths, seed, lane=0, workers=1, chunk=None, substeps=256):
    """Simulate ``n_paths`` paths; path ``i`` uses stream ``(seed, stream_id(i, lane))``."""
    _check_start(firm, schedule)
    if chunk is None:
        stable = not isinstance(firm, LatticeFirm) and firm.model.kind == levy.STABLE
        chunk = max(1, 2 ** 20 // (schedule.horizon_payments * substeps)) if stable else 4096

    def run(lo, hi):
        gens = list(generators(seed, lo, hi - lo, lane))
        k, te, xb, xa = _rows(firm, schedule, gens, substeps)
        return OutcomeBatch(schedule, np.asarray(k, dtype=np.int64), te, xb, xa)

    parts = map_chunks(run, int(n_paths), chunk=chunk, workers=workers)
    return OutcomeBatch.concat(schedule, parts)


def recorded_default(path, schedule):
    """``(status, k, tau_r)`` for a :class:`~defaultgap.paths.PathSample` at payment dates."""
    lv = np.asarray(path.log_values, dtype=float)
    if lv[0] <= schedule.log_barrier:
        raise BadStart("path starts at or below the barrier")
    below = np.nonzero(lv[1:] <= schedule.log_barrier)[0]
    if not below.size:
        return SURVIVED, None, None
    k = int(below[0]) + 1
    return DEFAULTED, k, k * schedule.n_interval


def sample_default_outcome(firm, schedule, rng, substeps=256):
    """One path's :class:`DefaultOutcome` from ``rng`` (stream or generator)."""
    _check_start(firm, schedule)
    g = rng.generator() if isinstance(rng, RngStream) else rng
    k, te, xb, xa = _rows(firm, schedule, [g], substeps)
    batch = OutcomeBatch(schedule, np.asarray(k, dtype=np.int64).reshape(1),
                         np.atleast_1d(te), np.atleast_1d(xb), np.atleast_1d(xa))
    return batch.outcome(0)


# -- estimators ---------------------------------------------------------------

@dataclass(frozen=True)
class DefaultProbabilities:
    u: np.ndarray           # u[k-1] = P(tau_r = kN)
    std_err: np.ndarray
    total: float            # P(tau_r <= KN)
    total_se: float
    n_paths: int

    @property
    def distribution(self):
        return EmpiricalDistribution(np.arange(1, self.u.size + 1), self.u)


def default_probabilities_from(batch):
    n = batch.n_paths
    K = int(batch.schedule.horizon_payments)
    counts = np.bincount(batch.k, minlength=K + 1)[1:K + 1]
    u = counts / n
    total = float(u.sum())
    return DefaultProbabilities(u, np.sqrt(u * (1 - u) / n), total, math.sqrt(total * (1 - total) / n), n)


def estimate_default_probabilities(firm, schedule, n_paths, seed, **kw):
    return default_probabilities_from(simulate_defaults(firm, schedule, n_paths, seed, **kw))


UNCONDITIONAL = "unconditional"
GIVEN_DEFAULT = "given_default"


def gap_distribution_from(batch, condition=UNCONDITIONAL):
    """Gap sample under ``condition``: ``"unconditional"`` (sub-probability,
    each defaulted path weighing ``1/n_paths``), ``"given_default"``
    (normalized over paths defaulting within the horizon) or an integer ``k``
    (normalized, given ``tau_r = kN``)."""
    d = batch.defaulted
    if condition == UNCONDITIONAL:
        sel = d
    elif condition == GIVEN_DEFAULT:
        sel = d
    elif isinstance(condition, (int, np.integer)) and not isinstance(condition, bool):
        sel = batch.k == int(condition)
    else:
        raise ValueError(f"unknown condition {condition!r}")
    if not sel.any():
        raise NoDefaults("no defaulted path under the requested condition")
    gaps = batch.gap[sel]
    if condition == UNCONDITIONAL:
        return EmpiricalDistribution(gaps, np.full(gaps.size, 1.0 / batch.n_paths))
    return EmpiricalDistribution(gaps, normalized=True)


def estimate_gap_distribution(firm, schedule, n_paths, seed, condition=UNCONDITIONAL, **kw):
    return gap_distribution_from(simulate_defaults(firm, schedule, n_paths, seed, **kw), condition)


def tau_e_distribution_from(batch):
    d = batch.defaulted
    if not d.any():
        raise NoDefaults("no defaulted path")
    return EmpiricalDistribution(batch.tau_e[d], normalized=True)


def estimate_tau_e_distribution(firm, schedule, n_paths, seed, **kw):
    return tau_e_distribution_from(simulate_defaults(firm, schedule, n_paths, seed, **kw))


# -- restart samplers ----------------------------------------------------------

def one_period_gaps(model, x_log, level, h, seed, lane=0, max_tries=100000):
    """Gap ``h - tau_e`` of one interval started at ``x_log``, given it ends at or below ``level``.

    ``x_log`` is an array of starting points (``>= level``); sample ``i``
    uses stream ``(seed, stream_id(i, lane))``.  Brownian endpoints come from
    the truncated normal; jump-diffusion intervals are drawn by rejection.
    """
    x_log = np.atleast_1d(np.asarray(x_log, dtype=float))
    n = x_log.size
    if np.any(x_log < level):
        raise BadStart("start below the level")
    out = np.empty(n)
    if model.kind == levy.BROWNIAN and model.sigma > 0:
        draws = np.empty((n, 4))
        for r, g in enumerate(generators(seed, 0, n, lane)):
            draws[r] = g.random(4)
        sd = model.sigma * math.sqrt(h)
        alpha = (level - x_log - model.b * h) / sd
        # P(end <= level) in log space keeps deep starts finite
        q = np.log(draws[:, 0]) + special.log_ndtr(alpha)
        end = x_log + model.b * h + sd * special.ndtri(np.exp(q))
        end = np.minimum(end, level)
        z = special.ndtri(draws[:, 1])
        t = paths.bridge_last_passage(x_log - level, end - level, model.sigma, h, z, draws[:, 2], draws[:, 3])
        return h - t
    if model.kind == levy.JUMP_DIFFUSION:
        for r, g in enumerate(generators(seed, 0, n, lane)):
            for _ in range(max_tries):
                seg = paths.sample_jump_interval(x_log[r], h, model, g)
                if seg[2][-1] <= level:
                    out[r] = h - paths.segments_last_passage(*seg, level, model.sigma, g)
                    break
            else:
                raise NoDefaults("rejection sampler found no default within max_tries")
        return out
    raise ValueError("one_period_gaps supports Brownian (sigma > 0) and jump-diffusion models")


def markov_restart_gaps(batch, model, seed, lane=7):
    """Gaps re-simulated from each defaulted path's last pre-default value.

    By the Markov property at ``tau_r - N`` this sample has the law of the
    gap given default within the horizon, built from ``u_k`` and the
    one-period gap laws rather than from the original paths' interiors.
    """
    d = batch.defaulted
    if not d.any():
        raise NoDefaults("no defaulted path")
    return one_period_gaps(model, batch.log_before[d], batch.schedule.log_barrier,
                           batch.schedule.n_interval, seed, lane)


def barrier_restart_gaps(model, x_log, level, h, n_target, seed, lane=11, max_draws=None):
    """Gap given ``tau_r = h`` via the first hitting time of the level.

    Draw ``H = inf{t : X_t <= level}`` on ``[0, h]`` from ``x_log``; restart
    an independent copy at the level for the remaining ``h - H`` and keep the
    draw when that copy ends at or below the level.  For spectrally positive
    models (downward motion is continuous) the accepted gaps follow the law
    of ``tau_r - tau_e`` given ``tau_r = h``.  Returns ``(gaps, n_drawn)``.
    """
    if not model.spectrally_positive:
        raise ValueError("barrier restart needs a spectrally positive model")
    if not model.sigma > 0:
        raise ValueError("barrier restart sampler needs sigma > 0")
    max_draws = max_draws or 1000 * n_target
    gaps = []
    i = 0
    while len(gaps) < n_target and i < max_draws:
        g = RngStream(seed, stream_id(i, lane)).generator()
        i += 1
        if model.kind == levy.JUMP_DIFFUSION and model.jump_intensity > 0:
            seg = paths.sample_jump_interval(x_log, h, model, g)
            hit = paths.segments_first_passage(*seg, level, model.sigma, g)
        else:
            end = x_log + model.b * h + model.sigma * math.sqrt(h) * g.standard_normal()
            z = g.standard_normal()
            u, v = g.random(2)
            t = paths.bridge_first_passage(x_log - level, end - level, model.sigma, h, z, u, v)
            hit = None if np.isnan(t) else float(t)
        if hit is None:
            continue
        rest = h - hit
        if model.kind == levy.JUMP_DIFFUSION and model.jump_intensity > 0:
            seg = paths.sample_jump_interval(level, rest, model, g)
            if seg[2][-1] > level:
                continue
            gaps.append(rest - paths.segments_last_passage(*seg, level, model.sigma, g))
        else:
            end = level + model.b * rest + model.sigma * math.sqrt(rest) * g.standard_normal()
            if end > level:
                continue
            z = g.standard_normal()
            u, v = g.random(2)
            gaps.append(rest - float(paths.bridge_last_passage(0.0, end - level, model.sigma, rest, z, u, v)))
    return np.asarray(gaps), i


# -- lattice oracle -------------------------------------------------------------

def lattice_tau_e_law(firm, schedule, edges):
    """Bin masses of ``tau_e`` given default within the horizon, exactly.

    Combines the joint law of ``(tau_r, W_{tau_r - 1}, W_{tau_r})`` from the
    ladder tables with the closed-form bridge gap law of each interval.
    """
    walk = firm.walk
    h, K, l = schedule.n_interval, int(schedule.horizon_payments), schedule.log_barrier
    x0 = firm.log_s0
    tables = build_ladder_tables(walk, n_max=max(K - 1, 1))
    edges = np.asarray(edges, dtype=float)
    mass = np.zeros(edges.size - 1)
    total = 0.0
    for k in range(1, K + 1):
        v, w, joint = joint_first_passage_law(walk, firm.s0, schedule.barrier, k, tables=tables, with_prefix=True)
        for a_i, vv in enumerate(v):
            above = x0 + walk.pitch * vv - l
            if above <= 0:
                continue
            for b_i, ww in enumerate(w):
                p = joint[a_i, b_i]
                if p == 0.0:
                    continue
                below = l - (x0 + walk.pitch * ww)
                # tau_e = kN - gap; the gap CDF at kN - edge gives P(tau_e >= edge)
                s = k * h - edges
                if firm.bridge_sigma > 0:
                    surv = paths.bridge_gap_cdf(above, below, firm.bridge_sigma, h, np.clip(s, 0.0, h))
                    surv = np.where(s < 0, 0.0, np.where(s > h, 1.0, surv))
                else:
                    gap = h * below / (above + below)
                    surv = (s >= gap).astype(float)
                # P(edge_j <= tau_e < edge_{j+1}) = surv_j - surv_{j+1}
                mass += p * (surv[:-1] - surv[1:])
                total += p
    return mass / total, total
