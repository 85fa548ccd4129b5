"""Controlled recurrences and analytic pass/fail verifiers.

Four schemes drive x_{n+1} from x_n, a map and one noise draw xi in [-1, 1]:

* ``StabilizeZero(sigma)``:    x' = (1 + sigma xi) x f(x)
* ``StabilizeK(K, sigma)``:    x' = x f(x) + sigma (x f(x) - K) xi
* ``DestabilizeZero(profile)``: x' = x f(x) + sigma_b(x) x xi, where the
  state-dependent amplitude sigma(x) is switched off above the truncation
  level b (and optionally outside an activity window [p, q]); the result
  may be clamped from below at -b.
* ``DestabilizeK(K, profile)``: x' = x f(x) + (x - K) sigma(x - K) xi with
  sigma built on the shifted map, optionally windowed in x.

The verifiers turn the analytic sufficient conditions into reports:
stabilization needs ln(bound) < eta, destabilization needs
sup_x E|f(x) + sigma(x) xi|^(-alpha) < 1 for some alpha, and the trap check
tests F-invariance of [b, d].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .distributions import (
    DiscreteUniform,
    DomainError,
    NoiseSpec,
    PolynomialSymmetric,
    inverse_power_expectation,
    log_gain_eta,
    stabilization_threshold,
    ThresholdParams,
)
from .maps import MapSpec, Shifted, bound_H, shifted_bound

__all__ = [
    "Constant",
    "DiscreteBound",
    "ContinuousBound",
    "SigmaProfile",
    "sigma_profile_value",
    "StabilizeZero",
    "StabilizeK",
    "DestabilizeZero",
    "DestabilizeK",
    "ControlScheme",
    "make_step",
    "step",
    "ThresholdReport",
    "check_stabilize_zero",
    "check_stabilize_K",
    "DestabilizeCheck",
    "check_destabilize",
    "TrapCheck",
    "check_trap",
]

_DEFAULT_ALPHA_GRID = (1.0, 0.5, 0.25, 0.1, 0.05, 0.01)
_STRICT_SLACK = 1e-9


# ---------------------------------------------------------------------------
# sigma(x) profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Constant:
    sigma: float

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"Constant profile requires sigma >= 0, got {self.sigma}")


@dataclass(frozen=True)
class DiscreteBound:
    """sigma(x) = (1 + margin) (2l-1) (1 + sqrt(1 + 4 f(x)^2)) / 2."""

    l: int
    margin: float = 0.01

    def __post_init__(self):
        if self.l < 1:
            raise ValueError(f"DiscreteBound requires l >= 1, got {self.l}")
        if self.margin < 0:
            raise ValueError(f"margin must be >= 0, got {self.margin}")


@dataclass(frozen=True)
class ContinuousBound:
    """sigma(x) = (1 + margin) max{f(x), e}."""

    margin: float = 0.01

    def __post_init__(self):
        if self.margin < 0:
            raise ValueError(f"margin must be >= 0, got {self.margin}")


SigmaProfile = Union[Constant, DiscreteBound, ContinuousBound]


def sigma_profile_value(profile: SigmaProfile, map_spec: MapSpec, x: float) -> float:
    """Evaluate the state-dependent noise amplitude sigma(x)."""
    if isinstance(profile, Constant):
        return profile.sigma
    fv = map_spec.f(x)
    if isinstance(profile, DiscreteBound):
        return (1.0 + profile.margin) * (2 * profile.l - 1) \
            * (1.0 + math.sqrt(1.0 + 4.0 * fv * fv)) / 2.0
    return (1.0 + profile.margin) * max(fv, math.e)


# ---------------------------------------------------------------------------
# Schemes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StabilizeZero:
    sigma: float

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")


@dataclass(frozen=True)
class StabilizeK:
    K: float
    sigma: float

    def __post_init__(self):
        if self.K <= 0:
            raise ValueError(f"K must be positive, got {self.K}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")


@dataclass(frozen=True)
class DestabilizeZero:
    profile: SigmaProfile
    truncation_b: float | None = None
    clamp: bool = False
    window: tuple[float, float] | None = None

    def __post_init__(self):
        if self.truncation_b is not None and self.truncation_b <= 0:
            raise ValueError(f"truncation_b must be positive, got {self.truncation_b}")
        if self.clamp and self.truncation_b is None:
            raise ValueError("clamping requires truncation_b (the floor is -b)")
        if self.window is not None and self.window[0] > self.window[1]:
            raise ValueError(f"window must satisfy p <= q, got {self.window}")


@dataclass(frozen=True)
class DestabilizeK:
    K: float
    profile: SigmaProfile
    window: tuple[float, float] | None = None

    def __post_init__(self):
        if self.K <= 0:
            raise ValueError(f"K must be positive, got {self.K}")
        if self.window is not None and self.window[0] > self.window[1]:
            raise ValueError(f"window must satisfy p <= q, got {self.window}")


ControlScheme = Union[StabilizeZero, StabilizeK, DestabilizeZero, DestabilizeK]


def make_step(scheme: ControlScheme, map_spec: MapSpec) -> Callable[[float, float], float]:
    """Compile the scheme's one-step update x, xi -> x' into a closure."""
    if isinstance(scheme, StabilizeZero):
        sigma = scheme.sigma
        F = map_spec.F

        def step_sz(x: float, xi: float) -> float:
            return (1.0 + sigma * xi) * F(x)

        return step_sz

    if isinstance(scheme, StabilizeK):
        sigma, K = scheme.sigma, scheme.K
        F = map_spec.F

        def step_sk(x: float, xi: float) -> float:
            Fx = F(x)
            return Fx + sigma * (Fx - K) * xi

        return step_sk

    if isinstance(scheme, DestabilizeZero):
        profile, b, clamp, window = (scheme.profile, scheme.truncation_b,
                                     scheme.clamp, scheme.window)
        F = map_spec.F

        def step_dz(x: float, xi: float) -> float:
            active = (b is None or x < b) and (window is None or window[0] <= x <= window[1])
            out = F(x)
            if active and x != 0.0:
                out += sigma_profile_value(profile, map_spec, x) * x * xi
            if clamp and out < -b:
                out = -b
            return out

        return step_dz

    if isinstance(scheme, DestabilizeK):
        profile, K, window = scheme.profile, scheme.K, scheme.window
        shifted = Shifted(map_spec, K)
        F = map_spec.F

        def step_dk(x: float, xi: float) -> float:
            out = F(x)
            if window is None or window[0] <= x <= window[1]:
                u = x - K
                if u != 0.0:
                    out += u * sigma_profile_value(profile, shifted, u) * xi
            return out

        return step_dk

    raise TypeError(f"unknown scheme {scheme!r}")


def step(scheme: ControlScheme, map_spec: MapSpec, x: float, xi: float) -> float:
    """Single update of the controlled recurrence (xi in [-1, 1])."""
    return make_step(scheme, map_spec)(x, xi)


# ---------------------------------------------------------------------------
# Threshold reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThresholdReport:
    """Analytic stabilization check: satisfied iff ln(bound) < eta (strict)."""

    bound: float
    eta: float
    satisfied: bool
    margin: float
    bound_kind: str
    recommended: ThresholdParams | None = None
    paper_bound: float | None = None

    def describe(self) -> str:
        lines = [
            f"bound {self.bound_kind} = {self.bound:.6g} (ln = {math.log(self.bound):.6g})"
            if self.bound > 0 else f"bound {self.bound_kind} = {self.bound:.6g}",
            f"eta = {self.eta:.6g}",
            f"satisfied = {self.satisfied} (margin eta - ln bound = {self.margin:.6g})",
        ]
        if self.paper_bound is not None:
            lines.append(f"coarse formula bound = {self.paper_bound:.6g}")
        if self.recommended is not None:
            rec = self.recommended
            parts = []
            if rec.s is not None:
                parts.append(f"s >= {rec.s} at sigma = 1")
            if rec.sigma is not None and rec.s is None:
                parts.append(f"sigma > {rec.sigma:.6g}")
            if rec.delta is not None:
                parts.append(f"delta <= {rec.delta:.6g}")
            lines.append("recommended: " + ", ".join(parts))
        return "\n".join(lines)


def _report(bound: float, eta: float, kind: str,
            recommended: ThresholdParams | None,
            paper_bound: float | None = None) -> ThresholdReport:
    margin = eta - math.log(bound)
    return ThresholdReport(bound=bound, eta=eta, satisfied=margin > 0.0, margin=margin,
                           bound_kind=kind, recommended=recommended, paper_bound=paper_bound)


def check_stabilize_zero(map_spec: MapSpec, interval: tuple[float, float],
                         noise: NoiseSpec, sigma: float) -> ThresholdReport:
    """ln H < eta check for driving the zero equilibrium to a.s. stability."""
    H = bound_H(map_spec, interval[0], interval[1])
    eta = log_gain_eta(noise, sigma)
    rec = stabilization_threshold(noise, H) if H > 1.0 else None
    return _report(H, eta, "H", rec)


def check_stabilize_K(map_spec: MapSpec, K: float, noise: NoiseSpec,
                      sigma: float, n_grid: int = 100_000) -> ThresholdReport:
    """ln calH < eta check for the shifted system around the equilibrium K.

    calH is the numeric supremum of the shifted per-capita map over the
    working domain; the coarse formula estimate is carried alongside.
    """
    sb = shifted_bound(map_spec, K, n_grid=n_grid)
    eta = log_gain_eta(noise, sigma)
    rec = stabilization_threshold(noise, sb.numeric_sup) if sb.numeric_sup > 1.0 else None
    return _report(sb.numeric_sup, eta, "calH", rec, paper_bound=sb.paper_bound)


# ---------------------------------------------------------------------------
# Destabilization condition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DestabilizeCheck:
    ok: bool
    worst_expectation: float
    alpha: float | None

    def __bool__(self) -> bool:
        return self.ok


def _expectation_grid(noise: NoiseSpec, f_vals: np.ndarray, s_vals: np.ndarray,
                      alpha: float) -> np.ndarray:
    """Vectorized E|f + sigma xi|^(-alpha) over paired arrays of f and sigma."""
    if isinstance(noise, DiscreteUniform):
        atoms = np.array(noise.atoms())
        args = np.abs(f_vals[:, None] + s_vals[:, None] * atoms[None, :])
        if np.any(args < 1e-12):
            return np.full(len(f_vals), np.inf)
        return np.mean(args ** (-alpha), axis=1)

    if isinstance(noise, PolynomialSymmetric) and noise.s == 0:
        if alpha >= 1.0:
            return np.full(len(f_vals), np.inf)
        up = f_vals + s_vals
        dn = f_vals - s_vals
        with np.errstate(divide="ignore", invalid="ignore"):
            anti = lambda u: np.sign(u) * np.abs(u) ** (1.0 - alpha) / (s_vals * (1.0 - alpha))
            vals = 0.5 * (anti(up) - anti(dn))
        return np.where(np.isfinite(vals), vals, np.inf)

    out = np.empty(len(f_vals))
    for i, (fv, sv) in enumerate(zip(f_vals, s_vals)):
        try:
            out[i] = inverse_power_expectation(noise, float(fv), float(sv), alpha)
        except DomainError:
            out[i] = np.inf
    return out


def check_destabilize(map_spec: MapSpec, interval: tuple[float, float],
                      noise: NoiseSpec, profile: SigmaProfile,
                      alpha_grid: Sequence[float] | None = None,
                      n_grid: int = 10_000) -> DestabilizeCheck:
    """Search the alpha grid for sup_x E|f(x) + sigma(x) xi|^(-alpha) < 1.

    Returns ok = True for the first alpha whose grid supremum stays below
    1 - 1e-9; alpha = 1 is only attempted for the discrete and piecewise
    families. worst_expectation is the supremum for the successful alpha,
    or the smallest supremum seen when the check fails.
    """
    if alpha_grid is None:
        alpha_grid = _DEFAULT_ALPHA_GRID
    xs = np.linspace(interval[0], interval[1], n_grid)
    f_vals = np.array([map_spec.f(float(x)) for x in xs])
    s_vals = np.array([sigma_profile_value(profile, map_spec, float(x)) for x in xs])

    best = math.inf
    for alpha in alpha_grid:
        if alpha >= 1.0 and isinstance(noise, PolynomialSymmetric):
            continue
        sup = float(np.max(_expectation_grid(noise, f_vals, s_vals, alpha)))
        if sup < 1.0 - _STRICT_SLACK:
            return DestabilizeCheck(ok=True, worst_expectation=sup, alpha=alpha)
        best = min(best, sup)
    return DestabilizeCheck(ok=False, worst_expectation=best, alpha=None)


# ---------------------------------------------------------------------------
# Trap check
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrapCheck:
    invariant: bool
    f_positive: bool
    jump_ok: bool | None
    F_max: float
    sup_jump: float | None

    def __bool__(self) -> bool:
        return self.invariant and self.f_positive and (self.jump_ok is not False)


def check_trap(map_spec: MapSpec, b: float, d: float,
               profile: SigmaProfile | None = None,
               n_grid: int = 10_000, atol: float = 1e-9) -> TrapCheck:
    """Grid check that [b, d] traps the dynamics.

    Conditions: F maps [b, d] into [b, d]; f > 0 on (0, d]; and, when a
    noise profile is supplied, d > sup_{x in [-b, b]} x (f(x) + sigma(x))
    so that no single noisy step can jump over the trap.
    """
    if not 0.0 < b < d:
        raise ValueError(f"trap requires 0 < b < d, got b={b}, d={d}")

    xs = np.linspace(b, d, n_grid)
    F_vals = np.array([map_spec.F(float(x)) for x in xs])
    invariant = bool(np.all(F_vals >= b - atol) and np.all(F_vals <= d + atol))
    F_max = float(np.max(F_vals))

    pos_xs = np.linspace(1e-9, d, n_grid)
    f_positive = bool(all(map_spec.f(float(x)) > 0.0 for x in pos_xs))

    jump_ok: bool | None = None
    sup_jump: float | None = None
    if profile is not None:
        jxs = np.linspace(-b, b, n_grid)
        jump = np.array([x * (map_spec.f(float(x)) + sigma_profile_value(profile, map_spec, float(x)))
                         for x in jxs])
        sup_jump = float(np.max(jump))
        jump_ok = d > sup_jump

    return TrapCheck(invariant=invariant, f_positive=f_positive,
                     jump_ok=jump_ok, F_max=F_max, sup_jump=sup_jump)
