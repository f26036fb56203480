"""Firm-value dynamics: exponential Lévy models with parametric jump measures.

The log-value ``X_t`` has Lévy triplet ``(b, sigma, nu)`` and exponent

    psi(theta) = i b theta - sigma^2 theta^2 / 2
                 + int (e^{i theta x} - 1 - i theta x 1{|x| < 1}) nu(dx)

for the jump-diffusion family; the alpha-stable family uses the standard
stable exponent with ``b`` as location.  Jumps of the jump-diffusion family
are positive (spectrally positive process).
"""
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate, special

from .errors import ModelError, NoExponentialMoment, QuadratureFailure

BROWNIAN = "BrownianDrift"
JUMP_DIFFUSION = "SpectrallyPositiveJumpDiffusion"
STABLE = "AlphaStable"
KINDS = (BROWNIAN, JUMP_DIFFUSION, STABLE)

JUMP_DISTS = ("point", "exponential", "lognormal")
_JUMP_FIELDS = {
    "point": {"size"},
    "exponential": {"rate"},
    "lognormal": {"mu", "s"},
}


@dataclass(frozen=True)
class JumpSpec:
    """Compound-Poisson jumps with intensity ``intensity`` and positive sizes.

    ``dist`` selects the size law: ``point`` (always ``size``), ``exponential``
    (rate ``rate``) or ``lognormal`` (``log J ~ N(mu, s^2)``).
    """

    intensity: float
    dist: str = "point"
    size: float = None
    rate: float = None
    mu: float = None
    s: float = None

    def problems(self):
        out = []
        if self.dist not in JUMP_DISTS:
            return [f"unknown jump distribution {self.dist!r}"]
        if not self.intensity >= 0:
            out.append("jump intensity negative")
        if self.dist == "point":
            if self.size is None or not self.size > 0:
                out.append("jump support must be positive")
        elif self.dist == "exponential":
            if self.rate is None or not self.rate > 0:
                out.append("exponential jump rate must be positive")
        else:
            if self.mu is None or self.s is None or not self.s > 0:
                out.append("lognormal jumps need mu and s > 0")
        return out

    def char(self, theta):
        """E[exp(i theta J)]."""
        theta = np.asarray(theta, dtype=float)
        if self.dist == "point":
            return np.exp(1j * theta * self.size)
        if self.dist == "exponential":
            return self.rate / (self.rate - 1j * theta)
        return np.vectorize(self._lognormal_char, otypes=[complex])(theta)

    def _lognormal_char(self, theta):
        if theta == 0.0:
            return 1.0 + 0.0j
        pdf = lambda x: _lognormal_pdf(x, self.mu, self.s)
        re, _ = integrate.quad(pdf, 0.0, np.inf, weight="cos", wvar=theta, limlst=200)
        im, _ = integrate.quad(pdf, 0.0, np.inf, weight="sin", wvar=theta, limlst=200)
        return complex(re, im)

    def small_mean(self):
        """E[J; J < 1], the part of the mean removed by the truncation."""
        if self.dist == "point":
            return self.size if self.size < 1.0 else 0.0
        if self.dist == "exponential":
            r = self.rate
            return (1.0 - math.exp(-r) * (1.0 + r)) / r
        return math.exp(self.mu + 0.5 * self.s**2) * special.ndtr((-self.mu - self.s**2) / self.s)

    def exp_moment(self):
        """E[exp(J)]; raises when infinite."""
        if self.dist == "point":
            return math.exp(self.size)
        if self.dist == "exponential":
            if self.rate <= 1.0:
                raise NoExponentialMoment("exponential jumps need rate > 1 for E[exp(J)] < inf")
            return self.rate / (self.rate - 1.0)
        raise NoExponentialMoment("lognormal jump sizes have no exponential moment")

    def density(self, x):
        if self.dist == "exponential":
            return self.rate * np.exp(-self.rate * x)
        if self.dist == "lognormal":
            return _lognormal_pdf(x, self.mu, self.s)
        raise ValueError("point-mass jumps have no density")

    def sample(self, gen, n):
        if self.dist == "point":
            return np.full(n, float(self.size))
        if self.dist == "exponential":
            return gen.exponential(1.0 / self.rate, size=n)
        return np.exp(self.mu + self.s * gen.standard_normal(n))


def _lognormal_pdf(x, mu, s):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.exp(-0.5 * ((np.log(x) - mu) / s) ** 2) / (x * s * math.sqrt(2 * math.pi))
    return np.where(x > 0, out, 0.0)


@dataclass(frozen=True)
class StableSpec:
    """alpha-stable law S_alpha(scale, beta, 0) per unit time."""

    alpha: float
    scale: float = 1.0
    beta: float = 0.0

    def problems(self):
        out = []
        if not 0.0 < self.alpha < 2.0:
            out.append("alpha out of (0,2)")
        if not self.scale > 0:
            out.append("stable scale must be positive")
        if not -1.0 <= self.beta <= 1.0:
            out.append("beta out of [-1,1]")
        return out


@dataclass(frozen=True)
class LevyModel:
    kind: str
    b: float = 0.0
    sigma: float = 0.0
    jumps: JumpSpec = None
    stable: StableSpec = None

    def __post_init__(self):
        problems = validate_model(self)
        if problems:
            raise ModelError(problems)

    @property
    def has_diffusion(self):
        return self.sigma > 0

    @property
    def jump_intensity(self):
        return self.jumps.intensity if self.jumps is not None else 0.0

    @property
    def spectrally_positive(self):
        return self.kind in (BROWNIAN, JUMP_DIFFUSION)

    @property
    def path_drift(self):
        """Drift of the representation ``b' t + sigma W_t + (sum of jumps)``."""
        if self.kind == JUMP_DIFFUSION and self.jump_intensity > 0:
            return self.b - self.jumps.intensity * self.jumps.small_mean()
        return self.b

    def with_drift(self, b):
        return replace(self, b=float(b))

    def risk_neutral(self):
        """Copy with ``b`` set so that ``exp(X_t)`` is a martingale."""
        return self.with_drift(martingale_drift(self))


@dataclass(frozen=True)
class FirmValue:
    s0: float
    model: LevyModel = field(default=None)

    def __post_init__(self):
        if not self.s0 > 0:
            raise ModelError("s0 must be positive")

    @property
    def log_s0(self):
        return math.log(self.s0)


def brownian(b=0.0, sigma=0.0):
    return LevyModel(BROWNIAN, b=float(b), sigma=float(sigma))


def jump_diffusion(b=0.0, sigma=0.0, intensity=0.0, dist="point", **params):
    return LevyModel(JUMP_DIFFUSION, b=float(b), sigma=float(sigma), jumps=JumpSpec(float(intensity), dist, **params))


def alpha_stable(alpha, scale=1.0, beta=0.0, b=0.0, sigma=0.0):
    return LevyModel(STABLE, b=float(b), sigma=float(sigma), stable=StableSpec(float(alpha), float(scale), float(beta)))


def validate_model(model):
    """Return the list of violated parameter constraints (empty when valid).

    Accepts a ``LevyModel`` or its JSON-style mapping.
    """
    if isinstance(model, dict):
        try:
            model = _parse_fields(model)
        except ModelError as exc:
            return exc.problems
        kind, b, sigma, jumps, stable = model
    else:
        kind, b, sigma, jumps, stable = model.kind, model.b, model.sigma, model.jumps, model.stable
    out = []
    if kind not in KINDS:
        return [f"unknown kind {kind!r}"]
    if not np.isfinite(b):
        out.append("b not finite")
    if not sigma >= 0:
        out.append("sigma negative")
    if kind == BROWNIAN and (jumps is not None or stable is not None):
        out.append("BrownianDrift takes no jumps")
    if kind == JUMP_DIFFUSION:
        if jumps is None:
            out.append("jump-diffusion needs a jump specification")
        else:
            out.extend(jumps.problems())
        if stable is not None:
            out.append("jump-diffusion takes no stable parameters")
    if kind == STABLE:
        if stable is None:
            out.append("AlphaStable needs alpha, scale and beta")
        else:
            out.extend(stable.problems())
        if jumps is not None:
            out.append("AlphaStable takes no compound-Poisson jumps")
    return out


def characteristic_exponent(model, theta):
    """psi(theta) with E[exp(i theta X_t)] = exp(t psi(theta))."""
    theta = np.asarray(theta, dtype=float)
    psi = 1j * model.b * theta - 0.5 * model.sigma**2 * theta**2
    if model.kind == JUMP_DIFFUSION and model.jump_intensity > 0:
        j = model.jumps
        psi = psi + j.intensity * (j.char(theta) - 1.0 - 1j * theta * j.small_mean())
    elif model.kind == STABLE:
        psi = psi + stable_exponent(theta, model.stable.alpha, model.stable.scale, model.stable.beta)
    psi = np.asarray(psi, dtype=complex)
    return psi[()] if psi.ndim == 0 else psi


def stable_exponent(theta, alpha, scale, beta):
    """Log characteristic function of S_alpha(scale, beta, 0)."""
    theta = np.asarray(theta, dtype=float)
    at = np.abs(theta)
    sgn = np.sign(theta)
    if alpha != 1.0:
        return -(scale * at) ** alpha * (1.0 - 1j * beta * sgn * math.tan(math.pi * alpha / 2))
    with np.errstate(divide="ignore", invalid="ignore"):
        logt = np.where(at > 0, np.log(np.where(at > 0, at, 1.0)), 0.0)
    return -scale * at * (1.0 + 1j * beta * (2 / math.pi) * sgn * logt)


def martingale_drift(model, method="closed"):
    """Drift ``b`` such that ``E[exp(X_t)] = 1`` (the given ``b`` is ignored).

    ``method="quad"`` evaluates the jump integral by adaptive quadrature
    instead of the closed form (continuous jump laws only).
    """
    compensation = 0.5 * model.sigma**2
    if model.kind == JUMP_DIFFUSION and model.jump_intensity > 0:
        compensation += model.jumps.intensity * _jump_exp_integral(model.jumps, method)
    elif model.kind == STABLE:
        st = model.stable
        if st.beta != -1.0:
            raise NoExponentialMoment("alpha-stable law with positive-tail mass has no exponential moment")
        if st.alpha == 1.0:
            log_mgf = 0.0
        else:
            # E exp(S) for S ~ S_alpha(c, -1, 0): exp(-c^alpha / cos(pi alpha / 2))
            log_mgf = -st.scale**st.alpha / math.cos(math.pi * st.alpha / 2)
        compensation += log_mgf
    return -compensation


def _jump_exp_integral(jumps, method):
    # int (e^z - 1 - z 1{z<1}) nu(dz) / intensity
    if method == "closed" or jumps.dist == "point":
        return jumps.exp_moment() - 1.0 - jumps.small_mean()
    if method != "quad":
        raise ValueError(f"unknown method {method!r}")
    if jumps.dist == "lognormal":
        raise NoExponentialMoment("lognormal jump sizes have no exponential moment")
    jumps.exp_moment()
    def f(z):
        d = float(jumps.density(z))
        if d <= 0.0:
            return 0.0
        # e^z d(z) combined in log space: e^z alone overflows far in the tail
        lead = math.expm1(z) * d if z < 1.0 else math.exp(z + math.log(d)) - d
        return lead - (z * d if z < 1.0 else 0.0)
    total = 0.0
    for lo, hi in ((0.0, 1.0), (1.0, np.inf)):
        val, err = integrate.quad(f, lo, hi, epsabs=1e-12, epsrel=1e-10, limit=200)
        if not np.isfinite(val) or err > 1e-8 * max(1.0, abs(val)):
            raise QuadratureFailure(f"jump integral did not converge (estimate {val}, error {err})")
        total += val
    return total


def model_from_dict(spec):
    """Parse the JSON model object.

    Fields: ``kind``; ``b`` (default 0); ``sigma`` (default 0); ``jumps`` -
    ``{"intensity", "dist", "size"|"rate"|"mu","s"}`` for the jump-diffusion,
    ``{"alpha", "scale", "beta"}`` for AlphaStable; ``risk_neutral`` (default
    false, sets ``b`` by the martingale condition and then ``b`` must be
    omitted).  Unknown fields are rejected.
    """
    kind, b, sigma, jumps, stable = _parse_fields(spec)
    model = LevyModel(kind, b=b, sigma=sigma, jumps=jumps, stable=stable)
    if spec.get("risk_neutral", False):
        model = model.risk_neutral()
    return model


def model_to_dict(model):
    out = {"kind": model.kind, "b": model.b, "sigma": model.sigma}
    if model.jumps is not None:
        j = model.jumps
        out["jumps"] = {"intensity": j.intensity, "dist": j.dist}
        out["jumps"].update({k: getattr(j, k) for k in sorted(_JUMP_FIELDS[j.dist])})
    if model.stable is not None:
        st = model.stable
        out["jumps"] = {"alpha": st.alpha, "scale": st.scale, "beta": st.beta}
    return out


def _parse_fields(spec):
    if not isinstance(spec, dict):
        raise ModelError("model specification must be a JSON object")
    unknown = set(spec) - {"kind", "b", "sigma", "jumps", "risk_neutral"}
    if unknown:
        raise ModelError(f"unknown model fields: {sorted(unknown)}")
    kind = spec.get("kind")
    if kind not in KINDS:
        raise ModelError(f"unknown kind {kind!r}")
    rn = spec.get("risk_neutral", False)
    if not isinstance(rn, bool):
        raise ModelError("risk_neutral must be a boolean")
    if rn and "b" in spec:
        raise ModelError("b must be omitted when risk_neutral is true")
    b = _num(spec.get("b", 0.0), "b")
    sigma = _num(spec.get("sigma", 0.0), "sigma")
    jumps = stable = None
    raw = spec.get("jumps")
    if raw is not None:
        if not isinstance(raw, dict):
            raise ModelError("jumps must be an object")
        if kind == STABLE:
            unknown = set(raw) - {"alpha", "scale", "beta"}
            if unknown:
                raise ModelError(f"unknown stable fields: {sorted(unknown)}")
            if "alpha" not in raw:
                raise ModelError("AlphaStable needs alpha")
            stable = StableSpec(_num(raw["alpha"], "alpha"), _num(raw.get("scale", 1.0), "scale"),
                                _num(raw.get("beta", 0.0), "beta"))
        else:
            dist = raw.get("dist", "point")
            if dist not in JUMP_DISTS:
                raise ModelError(f"unknown jump distribution {dist!r}")
            unknown = set(raw) - {"intensity", "dist"} - _JUMP_FIELDS[dist]
            if unknown:
                raise ModelError(f"unknown jump fields: {sorted(unknown)}")
            params = {k: _num(raw[k], k) for k in _JUMP_FIELDS[dist] if k in raw}
            jumps = JumpSpec(_num(raw.get("intensity", 0.0), "intensity"), dist, **params)
    return kind, b, sigma, jumps, stable


def _num(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ModelError(f"{name} must be a number")
    return float(value)
