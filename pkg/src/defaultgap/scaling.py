"""Rescaled return models, their first-passage limits and return-series estimators.

A base model gives i.i.d. returns ``Y_k`` over intervals of length ``N``.
Rescaling by ``n`` puts monitoring dates ``j N / n`` and uses returns
``Y_k / zeta_n`` with ``zeta_n = sqrt(n)`` (finite variance) or
``n^{1/alpha}`` (alpha-stable), so that

    log S^n_{jN/n} = log x + sum_{k <= j} Y_k / zeta_n - phi_n(jN/n),

where the compensator ``phi_n(t) = [nt/N] log E[exp(Y / zeta_n)]`` is applied
when it exists.
"""
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import NoExponentialMoment, OutOfDomain, SeriesTooShort
from .kernels import bridge_first_hit, first_passage
from .paths import bridge_last_passage, bridge_crossing_prob
from .rng import generators, map_chunks
from .stable import StableCDFTable, ks_distance, sample_stable
from .stats import ks_quantile

SQRT_N = "sqrt"
POWER_ALPHA = "power_alpha"


# -- base return laws --------------------------------------------------------

@dataclass(frozen=True)
class GaussianReturns:
    mean: float = 0.0
    sd: float = 1.0

    def sample(self, gen, size):
        return self.mean + self.sd * gen.standard_normal(size)

    def log_mgf(self, theta):
        return self.mean * theta + 0.5 * (self.sd * theta) ** 2


@dataclass(frozen=True)
class DiscreteReturns:
    values: tuple
    probs: tuple

    def sample(self, gen, size):
        return np.asarray(self.values)[gen.choice(len(self.values), size=size, p=np.asarray(self.probs))]

    def log_mgf(self, theta):
        v = np.asarray(self.values, dtype=float)
        return float(special.logsumexp(theta * v, b=np.asarray(self.probs, dtype=float)))


@dataclass(frozen=True)
class StableReturns:
    alpha: float
    scale: float = 1.0
    beta: float = 0.0

    def sample(self, gen, size):
        return sample_stable(gen, self.alpha, self.scale, self.beta, 0.0, size=size)

    def log_mgf(self, theta):
        raise NoExponentialMoment("stable returns have no exponential moment")


@dataclass(frozen=True)
class ParetoReturns:
    """Symmetric Pareto: ``P(|Y| > y) = (y / scale)^-alpha`` for ``y >= scale``."""
    alpha: float
    scale: float = 1.0

    def sample(self, gen, size):
        mag = self.scale * gen.random(size) ** (-1.0 / self.alpha)
        sign = np.where(gen.random(size) < 0.5, -1.0, 1.0)
        return sign * mag

    def log_mgf(self, theta):
        raise NoExponentialMoment("Pareto returns have no exponential moment")

    def stable_limit_scale(self):
        """Scale of the stable law attracting ``sum Y_k / n^{1/alpha}``.

        With tail constant ``C = scale^alpha``:
        ``scale_lim^alpha = C Gamma(2 - alpha) cos(pi alpha / 2) / (1 - alpha)``.
        """
        a = self.alpha
        if a == 1.0:
            c = math.pi / 2
        else:
            c = math.gamma(2 - a) * math.cos(math.pi * a / 2) / (1 - a)
        return (self.scale ** a * c) ** (1.0 / a)


@dataclass(frozen=True)
class RescaledModel:
    base: object
    n: int = 1
    zeta: str = SQRT_N
    alpha: float = None
    n_interval: float = 1.0
    compensate: bool = True

    def __post_init__(self):
        if int(self.n) < 1:
            raise ValueError("n must be >= 1")
        if self.zeta == POWER_ALPHA and not (self.alpha is not None and 0 < self.alpha < 2):
            raise ValueError("alpha out of (0,2)")
        if self.zeta not in (SQRT_N, POWER_ALPHA):
            raise ValueError(f"unknown scaling rule {self.zeta!r}")

    @property
    def zeta_n(self):
        return math.sqrt(self.n) if self.zeta == SQRT_N else self.n ** (1.0 / self.alpha)

    @property
    def dt(self):
        return self.n_interval / self.n

    def step_compensator(self):
        return self.base.log_mgf(1.0 / self.zeta_n) if self.compensate else 0.0

    def sample_steps(self, gen, size):
        """Log-value increments over successive monitoring dates."""
        return self.base.sample(gen, size) / self.zeta_n - self.step_compensator()


def compensator(model, t):
    """``phi_n(t) = [n t / N] log E[exp(Y / zeta_n)]``."""
    j = math.floor(model.n * t / model.n_interval + 1e-12)
    if j == 0:
        return 0.0
    return j * model.base.log_mgf(1.0 / model.zeta_n)


# -- first passage of the GBM limit -------------------------------------------

def hitting_density_gbm(x, s, sigma, n_interval, barrier):
    """First hitting density of ``D`` for ``x exp(sigma_f B_t - sigma_f^2 t / 2)``.

    ``sigma_f = sigma / sqrt(N)``; the prefactor uses ``|log(D/x)|``.
    """
    if not (x >= barrier > 0 and sigma > 0 and n_interval > 0):
        raise OutOfDomain("need x >= barrier > 0, sigma > 0, N > 0")
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise OutOfDomain("s must be positive")
    a = math.log(barrier / x)
    out = abs(a) / (math.sqrt(2 * math.pi * n_interval) * s ** 1.5 * sigma) * np.exp(
        -((a / (math.sqrt(n_interval) * sigma) + sigma * s / (2 * math.sqrt(n_interval))) ** 2) / (2 * s))
    return out[()] if out.ndim == 0 else out


def hitting_cdf_reflection(x, t, sigma_f, drift, barrier):
    """``P(inf_{u <= t} log S_u <= log D)`` for ``log S = log x + drift u + sigma_f B_u``."""
    a = math.log(x / barrier)
    t = np.asarray(t, dtype=float)
    if a <= 0:
        return np.ones_like(t)
    s = sigma_f
    with np.errstate(divide="ignore", invalid="ignore"):
        r = s * np.sqrt(t)
        p1 = special.ndtr((-a - drift * t) / r)
        p2 = np.exp(-2 * drift * a / s ** 2 + special.log_ndtr((-a + drift * t) / r))
    out = np.where(t > 0, p1 + p2, 0.0)
    if np.isinf(t).any():
        total = 1.0 if drift <= 0 else math.exp(-2 * drift * a / s ** 2)
        out = np.where(np.isinf(t), total, out)
    return out


def hitting_window_integral(x, sigma, n_interval, barrier, T1, T2):
    """``int_{T1}^{T2} p ds`` by quadrature in ``log s``.

    Near the barrier the density is a narrow spike at ``s ~ a^2 / sigma_f^2``,
    so cut points are placed geometrically around that scale.
    """
    if T2 <= T1:
        return 0.0
    a = abs(math.log(barrier / x))
    if a == 0.0:
        return 0.0
    sf2 = sigma * sigma / n_interval
    peak = a * a / sf2
    f = lambda u: float(hitting_density_gbm(x, math.exp(u), sigma, n_interval, barrier)) * math.exp(u)
    lo = max(T1, peak * 1e-6)
    # beyond this the integrand is below exp(-700)
    hi = min(T2, 1e4 * peak + 6000.0 / sf2)
    if hi <= lo:
        return 0.0
    cuts = np.log(peak) + np.arange(-14.0, 16.0, 2.0)
    cuts = np.concatenate([[math.log(lo)], cuts[(cuts > math.log(lo)) & (cuts < math.log(hi))], [math.log(hi)]])
    val = 0.0
    for u0, u1 in zip(cuts[:-1], cuts[1:]):
        v, _ = integrate.quad(f, u0, u1, epsabs=1e-14, epsrel=1e-11, limit=200)
        val += v
    return val


# -- Monte Carlo window probabilities ------------------------------------------

def _window_hits(k, dt, T1, T2):
    t = k * dt
    return (k > 0) & (t > T1 + 1e-12 * dt) & (t <= T2 + 1e-12 * dt)


def default_window_probability(model, x, barrier, T1, T2, n_paths, seed, lane=0, workers=1):
    """``P(T1 < tau_r <= T2)`` under monitoring every ``N / n``; returns ``(p, se)``."""
    if T2 <= T1 or barrier <= 0:
        return 0.0, 0.0
    dt = model.dt
    steps = int(math.floor(T2 / dt + 1e-9))
    x_log, l = math.log(x), math.log(barrier)

    def run(lo, hi):
        inc = np.empty((hi - lo, steps))
        for r, g in enumerate(generators(seed, lo, hi - lo, lane)):
            inc[r] = model.sample_steps(g, steps)
        k, _, _ = first_passage(np.full(hi - lo, x_log), l, inc)
        return int(_window_hits(k, dt, T1, T2).sum())

    hits = sum(map_chunks(run, n_paths, chunk=max(1, 2 ** 21 // max(steps, 1)), workers=workers))
    p = hits / n_paths
    return p, math.sqrt(p * (1 - p) / n_paths)


def window_convergence(base, x, barrier, T1, T2, n_grid, n_paths, seed, n_interval=1.0,
                       lane=0, workers=1):
    """Window probabilities and mean gaps for every ``n`` in ``n_grid`` on shared paths.

    Paths are drawn at the finest ``n`` and summed in blocks for coarser
    ones, which gives the exact law at each level for Gaussian and stable
    bases (a sum of ``m`` scaled returns is again a scaled return).  The
    economic default inside each defaulting interval is the bridge last
    passage over the fine points, so gap means are comparable across ``n``.
    """
    n_grid = sorted(int(n) for n in n_grid)
    fine_n = n_grid[-1]
    if any(fine_n % n for n in n_grid):
        raise ValueError("every n must divide the largest n")
    if isinstance(base, GaussianReturns):
        zeta = SQRT_N
        alpha = None
        sigma_f = base.sd / math.sqrt(n_interval)
    elif isinstance(base, StableReturns):
        zeta, alpha, sigma_f = POWER_ALPHA, base.alpha, 0.0
    else:
        raise ValueError("shared-path aggregation is exact only for Gaussian or stable bases")
    fine = RescaledModel(base, fine_n, zeta, alpha, n_interval, compensate=zeta == SQRT_N)
    dt = fine.dt
    steps = int(math.floor(T2 / dt + 1e-9))
    x_log, l = math.log(x), math.log(barrier)

    def run(lo, hi):
        m = hi - lo
        inc = np.empty((m, steps))
        gens = list(generators(seed, lo, m, lane))
        for r, g in enumerate(gens):
            inc[r] = fine.sample_steps(g, steps)
        path = np.concatenate([np.full((m, 1), x_log), x_log + np.cumsum(inc, axis=1)], axis=1)
        out = {}
        for n in n_grid:
            block = fine_n // n
            coarse_steps = steps // block
            cinc = path[:, block::block][:, :coarse_steps] - path[:, 0:coarse_steps * block:block]
            k, _, _ = first_passage(path[:, 0], l, cinc)
            hit = _window_hits(k, n_interval / n, T1, T2)
            gaps = []
            for r in np.nonzero(k > 0)[0]:
                seg = path[r, (k[r] - 1) * block:k[r] * block + 1]
                gaps.append(_last_passage_gap(seg, l, sigma_f, dt, gens[r]))
            out[n] = (int(hit.sum()), float(np.sum(gaps)), len(gaps))
        return out

    parts = map_chunks(run, n_paths, chunk=max(1, 2 ** 20 // max(steps, 1)), workers=workers)
    rows = []
    limit = hitting_window_integral(x, sigma_f * math.sqrt(n_interval), n_interval, barrier, T1, T2) \
        if sigma_f > 0 else float("nan")
    for n in n_grid:
        hits = sum(p[n][0] for p in parts)
        gsum = sum(p[n][1] for p in parts)
        gcount = sum(p[n][2] for p in parts)
        prob = hits / n_paths
        se = math.sqrt(prob * (1 - prob) / n_paths)
        rows.append({"n": n, "estimate": prob, "std_err": se, "limit": limit,
                     "gap": abs(prob - limit), "mean_default_gap": gsum / gcount if gcount else float("nan"),
                     "n_defaults": gcount})
    return rows


def _last_passage_gap(seg, l, sigma, dt, gen):
    """Gap from the end of ``seg`` back to its last bridge visit at or above ``l``."""
    m = seg.size - 1
    if sigma <= 0:
        above = np.nonzero(seg >= l)[0]
        return (m - above[-1]) * dt
    left, right = seg[:-1], seg[1:]
    # the last fine step whose bridge touches l holds the last passage
    p = bridge_crossing_prob(left, right, l, sigma, dt)
    u = gen.random(m)
    z = gen.standard_normal()
    w = gen.random()
    j = np.nonzero(u < p)[0][-1]
    # v = 0 skips the crossing draw: the step is already known to touch l
    t = float(bridge_last_passage(left[j] - l, right[j] - l, sigma, dt, z, w, 0.0))
    return (m - j) * dt - t


def continuous_window_mc(x, sigma_f, drift, barrier, T1, T2, n_paths, seed, dt=None, lane=0, workers=1):
    """``P(T1 < H <= T2)`` for the continuous-barrier hitting time ``H``.

    Brownian steps with exact bridge crossing flags; the grid is aligned to
    ``T1`` and ``T2``.  Returns ``(p, se)``.
    """
    if dt is None:
        dt = T1 / 8 if T1 > 0 else T2 / 32
    j1, j2 = T1 / dt, T2 / dt
    if abs(j1 - round(j1)) > 1e-9 or abs(j2 - round(j2)) > 1e-9:
        raise ValueError("dt must divide T1 and T2")
    j1, j2 = int(round(j1)), int(round(j2))
    x_log, l = math.log(x), math.log(barrier)

    def run(lo, hi):
        m = hi - lo
        inc = np.empty((m, j2))
        un = np.empty((m, j2))
        for r, g in enumerate(generators(seed, lo, m, lane)):
            inc[r] = drift * dt + sigma_f * math.sqrt(dt) * g.standard_normal(j2)
            un[r] = g.random(j2)
        k = bridge_first_hit(np.full(m, x_log), l, inc, un, sigma_f, dt)
        return int(np.sum((k > j1) & (k <= j2)))

    hits = sum(map_chunks(run, n_paths, chunk=8192, workers=workers))
    p = hits / n_paths
    return p, math.sqrt(p * (1 - p) / n_paths)


# -- estimators -----------------------------------------------------------------

@dataclass(frozen=True)
class ReturnSeries:
    values: np.ndarray
    n_interval: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValueError("returns must be finite")
        object.__setattr__(self, "values", v)


def _sigma_f2(y, lag_cutoff, centered, exact=True):
    s = math.fsum if exact else (lambda a: float(np.sum(a)))
    n = y.size
    m = s(y) / n
    d = y - m
    first = s(d * d) / n if centered else s(y * y) / n
    cov = 0.0
    for l in range(1, lag_cutoff + 1):
        cov += s(d[:-l] * d[l:]) / n
    return first + 2.0 * cov


def estimate_sigma_f(series, lag_cutoff=0, centered=False, n_blocks=20):
    """``sigma_f^2 = (E[Y^2] + 2 sum_{l=1}^{L} Cov(Y_1, Y_{1+l})) / N``.

    The default uses the uncentered second moment; ``centered=True`` uses the
    variance.  Returns ``(sigma_f, std_err)`` with a delete-one-block
    jackknife standard error.  Sums are exactly rounded, so the estimate is
    invariant under reversing the series.
    """
    y = series.values
    L = int(lag_cutoff)
    if L < 0 or y.size <= max(L, 1):
        raise SeriesTooShort(f"need more than {max(L, 1)} returns")
    N = series.n_interval
    est2 = _sigma_f2(y, L, centered)
    est = math.sqrt(max(est2, 0.0) / N)
    G = min(n_blocks, y.size // max(2 * L, 2))
    if G < 2:
        return est, float("nan")
    bounds = np.linspace(0, y.size, G + 1).astype(int)
    reps = []
    for g in range(G):
        rest = np.concatenate([y[:bounds[g]], y[bounds[g + 1]:]])
        reps.append(math.sqrt(max(_sigma_f2(rest, L, centered, exact=False), 0.0) / N))
    reps = np.asarray(reps)
    se = math.sqrt((G - 1) / G * np.sum((reps - reps.mean()) ** 2))
    return est, se


def estimate_tail_index(series, k_order):
    """Hill estimate from the ``k`` largest ``|Y|``; returns ``(alpha, se)``."""
    a = np.abs(series.values)
    k = int(k_order)
    if k < 1 or k >= a.size:
        raise SeriesTooShort("need 1 <= k < len(series)")
    top = np.sort(a)[::-1][:k + 1]
    if top[k] <= 0:
        raise ValueError("order statistic k+1 is zero")
    alpha = 1.0 / np.mean(np.log(top[:k] / top[k]))
    return float(alpha), float(alpha / math.sqrt(k))


# -- stable limit -----------------------------------------------------------------

def stable_limit_check(alpha, scale=1.0, n_grid=(1, 10, 100), n_paths=100000, seed=0,
                       base=None, lane=0, workers=1):
    """KS distance of ``sum_{k <= n} Y_k / n^{1/alpha}`` to its stable limit, per ``n``.

    ``base`` defaults to symmetric Pareto returns with the given scale.  No
    compensator is applied (there is no exponential moment).
    """
    if not 0 < alpha < 2:
        raise ValueError("alpha out of (0,2)")
    if base is None:
        base = ParetoReturns(alpha, scale)
    if isinstance(base, ParetoReturns):
        lim_scale = base.stable_limit_scale()
        beta = 0.0
    elif isinstance(base, StableReturns):
        lim_scale, beta = base.scale, base.beta
    else:
        raise ValueError("base must be Pareto or stable returns")
    table = StableCDFTable(alpha, lim_scale, beta)
    rows = []
    for n in n_grid:
        zeta = n ** (1.0 / alpha)

        def run(lo, hi, n=n, zeta=zeta):
            out = np.empty(hi - lo)
            for r, g in enumerate(generators(seed, lo, hi - lo, lane)):
                out[r] = base.sample(g, n).sum() / zeta
            return out

        sample = np.concatenate(map_chunks(run, n_paths, workers=workers))
        rows.append({"n": int(n), "ks": ks_distance(sample, table), "ks_95": ks_quantile(n_paths)})
    ks = [r["ks"] for r in rows]
    return {
        "alpha": alpha,
        "limit_scale": lim_scale,
        "rows": rows,
        "decreasing": bool(all(b < a for a, b in zip(ks[:-1], ks[1:]))),
        "compensator": "not applied: no exponential moment",
    }


def convergence_report_json(rows, path=None):
    text = json.dumps({"rows": rows}, indent=2, sort_keys=True)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text
