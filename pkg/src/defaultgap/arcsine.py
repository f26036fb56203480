"""Gap densities for a Brownian firm value started at the barrier.

The model is ``S_t = exp(mu W_t - mu^2 t / 2)`` with barrier 1, watched for a
remaining time ``L = N - u``.  Two densities for the gap ``s`` are provided:

``gap_density``
    ``phi((mu/2) sqrt(L - s)) / (pi sqrt(s (L - s)))`` with
    ``phi(a) = int_0^inf e^{-t} cosh(a sqrt(2t)) dt``.  It is not a
    probability density for ``mu > 0``; :func:`gap_mass` gives its total mass
    and ``normalized=True`` divides by it.

``conditional_gap_density``
    The exact density of the gap given ``S_L <= 1``, from the last-exit
    decomposition of drifted Brownian motion at its last zero.

Both reduce to the arcsine density ``1 / (pi sqrt(s (L - s)))`` at ``mu = 0``.
All quadratures use ``s = L sin^2(theta)``, which removes the endpoint
singularities.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import OutOfSupport, QuadratureFailure
from .stats import write_rows


@dataclass(frozen=True)
class GapDensityParams:
    n_interval: float = 1.0
    u: float = 0.0
    mu: float = 0.0

    def __post_init__(self):
        if not self.n_interval > 0:
            raise ValueError("n_interval must be positive")
        if not 0 <= self.u < self.n_interval:
            raise ValueError("need 0 <= u < n_interval")
        if self.mu < 0:
            raise ValueError("mu must be nonnegative")

    @property
    def length(self):
        return self.n_interval - self.u

    @property
    def kappa(self):
        """Downward drift of ``log S / mu`` per unit time."""
        return self.mu / 2.0


# -- the auxiliary function --------------------------------------------------

def phi_closed(a):
    """``1 + sqrt(pi) m e^{m^2} erf(m)`` with ``m = a / sqrt(2)``.

    Substituting ``t = v^2`` turns the defining integral into two shifted
    Gaussian integrals.
    """
    m = np.asarray(a, dtype=float) / math.sqrt(2.0)
    out = 1.0 + math.sqrt(math.pi) * m * np.exp(m * m) * special.erf(m)
    return out[()] if out.ndim == 0 else out


def phi_quad(a, tol=1e-10):
    if a < 0:
        raise ValueError("argument must be nonnegative")
    # e^{-t} cosh(a sqrt(2t)) = (e^{-t + a sqrt(2t)} + e^{-t - a sqrt(2t)}) / 2
    f = lambda t: 0.5 * (math.exp(-t + a * math.sqrt(2 * t)) + math.exp(-t - a * math.sqrt(2 * t)))
    peak = a * a / 2.0
    pts = [0.0, peak, peak + 10.0 + 10.0 * a] if peak > 0 else [0.0, 10.0]
    total, err = 0.0, 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        v, e = integrate.quad(f, lo, hi, epsabs=tol / 4, epsrel=1e-13, limit=200)
        total += v
        err += e
    v, e = integrate.quad(f, pts[-1], np.inf, epsabs=tol / 4, epsrel=1e-13, limit=200)
    total += v
    err += e
    if not err <= tol * max(1.0, abs(total)):
        raise QuadratureFailure(f"phi quadrature error {err:.2g} above tolerance")
    return total


def phi_laguerre(a, n=120):
    """Gauss-Laguerre evaluation; ``cosh(a sqrt(2t))`` is entire in ``t``."""
    x, w = special.roots_laguerre(n)
    return float(np.sum(w * np.cosh(a * np.sqrt(2 * x))))


def phi_aux(a, tol=1e-10):
    """``phi(a)`` by adaptive quadrature, checked against the closed form."""
    q = phi_quad(a, tol)
    c = float(phi_closed(a))
    if abs(q - c) > 1e-8 * max(1.0, c):
        raise QuadratureFailure(f"phi({a}): quadrature {q!r} disagrees with closed form {c!r}")
    return q


# -- densities ----------------------------------------------------------------

def _check_support(s, L):
    s = np.asarray(s, dtype=float)
    if np.any((s <= 0) | (s >= L)):
        raise OutOfSupport(f"gap must lie in (0, {L})")
    return s


def gap_density(s, params, normalized=False):
    L = params.length
    s = _check_support(s, L)
    out = phi_closed(params.kappa * np.sqrt(L - s)) / (math.pi * np.sqrt(s * (L - s)))
    if normalized:
        out = out / gap_mass(params)
    return out[()] if np.ndim(out) == 0 else out


def gap_mass(params):
    """Total mass ``Z`` of :func:`gap_density` over ``(0, L)``."""
    return _theta_integral(params, math.pi / 2)


def _theta_integral(params, upper):
    # s = L sin^2 th: ds / (pi sqrt(s (L - s))) = (2 / pi) d th, and L - s = L cos^2 th
    k = params.kappa * math.sqrt(params.length)
    f = lambda th: (2.0 / math.pi) * float(phi_closed(k * math.cos(th)))
    v, err = integrate.quad(f, 0.0, upper, epsabs=1e-13, epsrel=1e-12, limit=200)
    if err > 1e-9:
        raise QuadratureFailure("gap density quadrature did not converge")
    return v


def gap_cdf(s, params):
    """Normalized CDF of :func:`gap_density`."""
    L = params.length
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any((s < 0) | (s > L)):
        raise OutOfSupport(f"s must lie in [0, {L}]")
    if params.mu == 0:
        out = (2.0 / math.pi) * np.arcsin(np.sqrt(s / L))
    else:
        z = gap_mass(params)
        out = np.array([_theta_integral(params, math.asin(math.sqrt(x / L))) / z for x in s])
    out = np.clip(out, 0.0, 1.0)
    return out[0] if out.size == 1 else out


def arcsine_cdf(s, length=1.0):
    s = np.clip(np.asarray(s, dtype=float) / length, 0.0, 1.0)
    return (2.0 / math.pi) * np.arcsin(np.sqrt(s))


def conditional_gap_density(s, params):
    """Exact density of the gap given the path ends at or below the barrier.

    With ``k = kappa``:
    ``e^{-k^2 L / 2} [1 + k sqrt(2 pi s) e^{k^2 s / 2} Phi(k sqrt(s))]
    / (2 pi Phi(k sqrt(L)) sqrt(s (L - s)))``.
    """
    L = params.length
    s = _check_support(s, L)
    k = params.kappa
    # e^{-k^2 (L - s)/2} * k sqrt(2 pi s) Phi(k sqrt s) keeps the exponent bounded
    first = np.exp(-0.5 * k * k * L)
    second = k * np.sqrt(2 * math.pi * s) * np.exp(-0.5 * k * k * (L - s)) * special.ndtr(k * np.sqrt(s))
    norm = 2.0 * math.pi * special.ndtr(k * math.sqrt(L))
    out = (first + second) / (norm * np.sqrt(s * (L - s)))
    return out[()] if np.ndim(out) == 0 else out


def conditional_gap_cdf(s, params):
    L = params.length
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any((s < 0) | (s > L)):
        raise OutOfSupport(f"s must lie in [0, {L}]")

    def dens_theta(th):
        x = L * math.sin(th) ** 2
        if x <= 0 or x >= L:
            x = min(max(x, 1e-300), L * (1 - 1e-16))
        # ds = 2 L sin cos d th = 2 sqrt(s (L - s)) d th
        return float(conditional_gap_density(x, params)) * 2.0 * math.sqrt(x * (L - x))

    out = []
    for x in s:
        v, _ = integrate.quad(dens_theta, 0.0, math.asin(math.sqrt(x / L)), epsabs=1e-13, epsrel=1e-12, limit=200)
        out.append(v)
    out = np.clip(np.array(out), 0.0, 1.0)
    return out[0] if out.size == 1 else out


def density_table(params, n_points=201, path=None):
    """``(s, pdf, cdf)`` on an interior grid; pdf and cdf are normalized."""
    L = params.length
    th = np.linspace(0, math.pi / 2, n_points + 2)[1:-1]
    s = L * np.sin(th) ** 2
    pdf = gap_density(s, params, normalized=True)
    cdf = gap_cdf(s, params)
    if path is not None:
        write_rows(path, ["s", "pdf", "cdf"], zip(s, pdf, cdf))
    return s, pdf, cdf
