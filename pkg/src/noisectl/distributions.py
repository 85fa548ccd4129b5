"""Bounded symmetric noise families on [-1, 1].

Three families are supported, each with zero mean and support inside
[-1, 1]:

* ``PolynomialSymmetric(s)`` -- continuous, density ((2s+1)/2) x^(2s);
  s = 0 is the uniform distribution on [-1, 1].
* ``DiscreteUniform(l)`` -- 2l equally likely atoms at -1 + 2i/(2l-1);
  l = 1 is the symmetric Bernoulli distribution on {-1, +1}.
* ``PiecewiseUniform(l, delta)`` -- constant density 1/(2 delta (2l-1))
  on a union of 2l windows of half-width delta centred at the same 2l
  points (half windows at the endpoints +-1).

Besides densities/CDFs and inverse-transform samplers, the module provides
the two expectations the threshold checks are built on:

* ``log_gain_eta`` -- eta = -E ln|1 + sigma xi|, the mean per-step log
  contraction of the multiplicative noise factor (exact closed forms);
* ``inverse_power_expectation`` -- E |f + sigma xi|^(-alpha), used by the
  destabilization condition (closed forms where available, adaptive
  quadrature otherwise).

All functions are pure; the dataclasses are immutable and hashable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.integrate import quad

__all__ = [
    "DomainError",
    "PolynomialSymmetric",
    "DiscreteUniform",
    "PiecewiseUniform",
    "NoiseSpec",
    "density",
    "cdf",
    "sample",
    "sample_array",
    "log_gain_eta",
    "inverse_power_expectation",
    "stabilization_threshold",
    "ThresholdParams",
]

_ATOM_TOL = 1e-12


class DomainError(ValueError):
    """A parameter lies outside the validity domain of an analytic formula."""


@dataclass(frozen=True)
class PolynomialSymmetric:
    """Continuous noise with density ((2s+1)/2) x^(2s) on [-1, 1]."""

    s: int = 0

    def __post_init__(self):
        if not isinstance(self.s, (int, np.integer)) or self.s < 0:
            raise DomainError(f"PolynomialSymmetric requires integer s >= 0, got {self.s!r}")

    def density(self, x: float) -> float:
        if abs(x) > 1.0:
            return 0.0
        return (2 * self.s + 1) / 2.0 * x ** (2 * self.s)

    def cdf(self, x: float) -> float:
        if x <= -1.0:
            return 0.0
        if x >= 1.0:
            return 1.0
        return (x ** (2 * self.s + 1) + 1.0) / 2.0

    def sample(self, u: float) -> float:
        t = 2.0 * u - 1.0
        return math.copysign(abs(t) ** (1.0 / (2 * self.s + 1)), t)

    def sample_array(self, u: np.ndarray) -> np.ndarray:
        t = 2.0 * np.asarray(u, dtype=float) - 1.0
        return np.sign(t) * np.abs(t) ** (1.0 / (2 * self.s + 1))

    def validate_sigma(self, sigma: float) -> None:
        # sigma = 1 is admissible: the endpoint singularity of ln|1 - x| is integrable.
        if not 0.0 < sigma <= 1.0:
            raise DomainError(
                f"PolynomialSymmetric noise requires sigma in (0, 1], got {sigma}"
            )


@dataclass(frozen=True)
class DiscreteUniform:
    """2l equally likely atoms at -1 + 2i/(2l-1), i = 0..2l-1."""

    l: int = 1

    def __post_init__(self):
        if not isinstance(self.l, (int, np.integer)) or self.l < 1:
            raise DomainError(f"DiscreteUniform requires integer l >= 1, got {self.l!r}")

    def atoms(self) -> tuple[float, ...]:
        n = 2 * self.l
        return tuple(-1.0 + 2.0 * i / (n - 1) for i in range(n))

    def density(self, x: float) -> float:
        """Point-mass weight at x (0 away from the atoms)."""
        for a in self.atoms():
            if abs(x - a) <= _ATOM_TOL:
                return 1.0 / (2 * self.l)
        return 0.0

    def cdf(self, x: float) -> float:
        return sum(1 for a in self.atoms() if a <= x + _ATOM_TOL) / (2.0 * self.l)

    def sample(self, u: float) -> float:
        i = min(int(2 * self.l * u), 2 * self.l - 1)
        return -1.0 + 2.0 * i / (2 * self.l - 1)

    def sample_array(self, u: np.ndarray) -> np.ndarray:
        i = np.minimum((2 * self.l * np.asarray(u, dtype=float)).astype(np.int64),
                       2 * self.l - 1)
        return -1.0 + 2.0 * i / (2 * self.l - 1)

    def validate_sigma(self, sigma: float) -> None:
        # At sigma = 1 the atom xi = -1 gives ln|1 + sigma xi| = -inf.
        if not 0.0 < sigma < 1.0:
            raise DomainError(
                f"DiscreteUniform noise requires sigma in (0, 1), got {sigma}"
            )


@dataclass(frozen=True)
class PiecewiseUniform:
    """Constant density on 2l windows of half-width delta around the atom grid.

    The two windows at the endpoints are the half windows [-1, -1+delta] and
    [1-delta, 1]; the 2l-2 interior windows are full ones. delta < 1/(2l-1)
    keeps the windows pairwise disjoint.
    """

    l: int = 1
    delta: float = 0.05

    def __post_init__(self):
        if not isinstance(self.l, (int, np.integer)) or self.l < 1:
            raise DomainError(f"PiecewiseUniform requires integer l >= 1, got {self.l!r}")
        if not 0.0 < self.delta < 1.0 / (2 * self.l - 1):
            raise DomainError(
                f"PiecewiseUniform requires delta in (0, 1/(2l-1)) = "
                f"(0, {1.0 / (2 * self.l - 1):.6g}), got {self.delta}"
            )

    def windows(self) -> tuple[tuple[float, float, float], ...]:
        """(lo, hi, mass) for each of the 2l windows, in increasing order."""
        l, d = self.l, self.delta
        edge_mass = 1.0 / (2 * (2 * l - 1))
        inner_mass = 1.0 / (2 * l - 1)
        out = [(-1.0, -1.0 + d, edge_mass)]
        for i in range(1, 2 * l - 1):
            c = -1.0 + 2.0 * i / (2 * l - 1)
            out.append((c - d, c + d, inner_mass))
        out.append((1.0 - d, 1.0, edge_mass))
        return tuple(out)

    def density(self, x: float) -> float:
        if abs(x) > 1.0:
            return 0.0
        h = 1.0 / (2 * self.delta * (2 * self.l - 1))
        for lo, hi, _ in self.windows():
            if lo <= x <= hi:
                return h
        return 0.0

    def cdf(self, x: float) -> float:
        if x <= -1.0:
            return 0.0
        if x >= 1.0:
            return 1.0
        acc = 0.0
        for lo, hi, mass in self.windows():
            if x >= hi:
                acc += mass
            elif x > lo:
                acc += mass * (x - lo) / (hi - lo)
        return acc

    def sample(self, u: float) -> float:
        acc = 0.0
        wins = self.windows()
        for k, (lo, hi, mass) in enumerate(wins):
            if u < acc + mass or k == len(wins) - 1:
                t = min(max((u - acc) / mass, 0.0), 1.0)
                return lo + (hi - lo) * t
            acc += mass
        raise AssertionError("unreachable")

    def sample_array(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        wins = self.windows()
        masses = np.array([w[2] for w in wins])
        los = np.array([w[0] for w in wins])
        widths = np.array([w[1] - w[0] for w in wins])
        cum = np.cumsum(masses)
        idx = np.minimum(np.searchsorted(cum, u, side="right"), len(wins) - 1)
        prev = np.concatenate([[0.0], cum])[idx]
        t = np.clip((u - prev) / masses[idx], 0.0, 1.0)
        return los[idx] + widths[idx] * t

    def validate_sigma(self, sigma: float) -> None:
        if not 0.0 < sigma < 1.0:
            raise DomainError(
                f"PiecewiseUniform noise requires sigma in (0, 1), got {sigma}"
            )


NoiseSpec = Union[PolynomialSymmetric, DiscreteUniform, PiecewiseUniform]


def density(spec: NoiseSpec, x: float) -> float:
    """Density of the family at x (a point-mass weight for DiscreteUniform)."""
    return spec.density(x)


def cdf(spec: NoiseSpec, x: float) -> float:
    return spec.cdf(x)


def sample(spec: NoiseSpec, u: float) -> float:
    """Inverse-transform sample from a uniform draw u in [0, 1)."""
    return spec.sample(u)


def sample_array(spec: NoiseSpec, u: np.ndarray) -> np.ndarray:
    return spec.sample_array(u)


# ---------------------------------------------------------------------------
# eta = -E ln|1 + sigma xi|
# ---------------------------------------------------------------------------

def _log1p_antiderivative(sigma: float, x: float) -> float:
    # d/dx [((1+sx) ln(1+sx) - sx)/s] = ln(1+sx), valid while 1+sx > 0
    v = 1.0 + sigma * x
    return (v * math.log(v) - sigma * x) / sigma


def _piecewise_even_moment(spec: "PiecewiseUniform", j: int) -> float:
    h = 1.0 / (2 * spec.delta * (2 * spec.l - 1))
    p = 2 * j + 1
    return sum(h * (hi ** p - lo ** p) / p for lo, hi, _ in spec.windows())


def log_gain_eta(spec: NoiseSpec, sigma: float) -> float:
    """eta = -E ln|1 + sigma xi|, in exact closed form.

    PolynomialSymmetric admits sigma in (0, 1]; the discrete and piecewise
    families require sigma in (0, 1), where 1 + sigma xi stays positive.
    """
    spec.validate_sigma(sigma)

    if isinstance(spec, PolynomialSymmetric):
        s = spec.s
        if sigma == 1.0:
            return sum(1.0 / (2 * k + 1) for k in range(s + 1)) - math.log(2.0)
        if sigma <= 0.9:
            # ln(1+sigma x) series with E[x^(2j)] = (2s+1)/(2s+2j+1); the
            # by-parts form below amplifies roundoff by sigma^-(2s+1)
            total = 0.0
            j = 1
            power = sigma * sigma
            while True:
                term = power * (2 * s + 1) / ((2 * j) * (2 * s + 2 * j + 1))
                total += term
                if term < 1e-18 * max(total, 1e-30):
                    break
                power *= sigma * sigma
                j += 1
            return total
        # E ln(1+sigma x) for density ((2s+1)/2) x^(2s), by parts:
        #   (1/2) ln(1-sigma^2)
        #   - sigma^{-(2s+1)} * sum_{k=0..s} sigma^{2k+1}/(2k+1)
        #   + ln((1+sigma)/(1-sigma)) / (2 sigma^{2s+1})
        pow_sum = sum(sigma ** (2 * k + 1) / (2 * k + 1) for k in range(s + 1))
        expectation = (
            0.5 * math.log1p(-sigma * sigma)
            - pow_sum / sigma ** (2 * s + 1)
            + math.log((1.0 + sigma) / (1.0 - sigma)) / (2.0 * sigma ** (2 * s + 1))
        )
        return -expectation

    if isinstance(spec, DiscreteUniform):
        total = sum(math.log1p(sigma * a) for a in spec.atoms())
        return -total / (2 * spec.l)

    # PiecewiseUniform: exact per-window integrals of ln(1+sigma x)
    if sigma <= 0.9:
        # series in the even moments, avoiding cancellation in the
        # antiderivative differences at small sigma
        total = 0.0
        j = 1
        power = sigma * sigma
        while True:
            term = power / (2 * j) * _piecewise_even_moment(spec, j)
            total += term
            if term < 1e-18 * max(total, 1e-30):
                break
            power *= sigma * sigma
            j += 1
        return total
    h = 1.0 / (2 * spec.delta * (2 * spec.l - 1))
    total = 0.0
    for lo, hi, _ in spec.windows():
        total += h * (_log1p_antiderivative(sigma, hi) - _log1p_antiderivative(sigma, lo))
    return -total


# ---------------------------------------------------------------------------
# E |f + sigma xi|^(-alpha)
# ---------------------------------------------------------------------------

def _abs_power_antiderivative(f: float, sigma: float, alpha: float, x: float) -> float:
    # antiderivative of |f + sigma x|^(-alpha); continuous across the root
    # for alpha < 1 (integrable singularity)
    u = f + sigma * x
    if alpha == 1.0:
        return math.copysign(math.log(abs(u)), u) / sigma
    return math.copysign(abs(u) ** (1.0 - alpha), u) / (sigma * (1.0 - alpha))


def inverse_power_expectation(spec: NoiseSpec, f: float, sigma: float, alpha: float) -> float:
    """E |f + sigma xi|^(-alpha) for the given family.

    alpha must lie in (0, 1) for the continuous family and in (0, 1] for the
    discrete and piecewise families; alpha = 1 additionally requires
    |f + sigma a| > 0 at every atom (resp. on every window) with margin
    at least 1e-12.
    """
    if sigma <= 0.0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")

    if isinstance(spec, PolynomialSymmetric):
        if alpha == 1.0:
            raise DomainError(
                "alpha = 1 gives a divergent expectation for continuous noise; use alpha < 1"
            )
        s = spec.s
        if s == 0:
            return 0.5 * (
                _abs_power_antiderivative(f, sigma, alpha, 1.0)
                - _abs_power_antiderivative(f, sigma, alpha, -1.0)
            )
        root = -f / sigma
        points = [root] if abs(root) < 1.0 else None
        val, _ = quad(
            lambda x: (2 * s + 1) / 2.0 * x ** (2 * s) * abs(f + sigma * x) ** (-alpha),
            -1.0,
            1.0,
            points=points,
            limit=400,
            epsabs=1e-12,
            epsrel=1e-12,
        )
        return val

    if isinstance(spec, DiscreteUniform):
        total = 0.0
        for a in spec.atoms():
            v = abs(f + sigma * a)
            if v < _ATOM_TOL:
                raise DomainError(
                    f"|f + sigma*a| vanishes at atom a={a:.6g} (f={f:.6g}, sigma={sigma:.6g})"
                )
            total += v ** (-alpha)
        return total / (2 * spec.l)

    # PiecewiseUniform: exact antiderivative per window, split at the root
    h = 1.0 / (2 * spec.delta * (2 * spec.l - 1))
    root = -f / sigma
    total = 0.0
    for lo, hi, _ in spec.windows():
        u_lo, u_hi = f + sigma * lo, f + sigma * hi
        if alpha == 1.0 and (u_lo * u_hi <= 0.0 or min(abs(u_lo), abs(u_hi)) < _ATOM_TOL):
            raise DomainError(
                f"alpha = 1 requires f + sigma*xi bounded away from 0 on every window; "
                f"violated on [{lo:.6g}, {hi:.6g}]"
            )
        pieces = [(lo, hi)]
        if alpha < 1.0 and lo < root < hi:
            pieces = [(lo, root), (root, hi)]
        for a, b in pieces:
            total += h * (
                _abs_power_antiderivative(f, sigma, alpha, b)
                - _abs_power_antiderivative(f, sigma, alpha, a)
            )
    return total


# ---------------------------------------------------------------------------
# Stabilization thresholds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThresholdParams:
    """Family-specific parameters that make eta exceed ln H.

    Exactly the relevant fields are set: ``s`` (with sigma = 1) for the
    polynomial family, ``sigma`` for the discrete family, ``sigma`` and
    ``delta`` for the piecewise family. For the discrete family the returned
    sigma is the exact boundary (any sigma strictly above it and below 1
    works); for the other two families the returned parameters already
    satisfy the strict condition.
    """

    sigma: float | None = None
    s: int | None = None
    delta: float | None = None


_MAX_POLY_S = 10 ** 6


def stabilization_threshold(spec: NoiseSpec, H: float) -> ThresholdParams:
    """Noise parameters guaranteeing eta > ln H for a map bounded by H > 1."""
    if H <= 1.0:
        raise DomainError(f"stabilization threshold requires H > 1, got {H}")

    if isinstance(spec, PolynomialSymmetric):
        target = math.log(2.0 * H)
        acc = 0.0
        for s in range(_MAX_POLY_S):
            acc += 1.0 / (2 * s + 1)
            if acc > target:
                return ThresholdParams(sigma=1.0, s=s)
        raise DomainError(f"no s <= {_MAX_POLY_S} reaches ln(2H) = {target:.6g}")

    if isinstance(spec, DiscreteUniform):
        return ThresholdParams(sigma=math.sqrt(1.0 - H ** (-2 * spec.l)))

    # PiecewiseUniform: shrink delta until eta can exceed ln H just below
    # sigma = 1, then bisect sigma to the boundary eta = ln H.
    target = math.log(H)
    sigma_hi = 1.0 - 1e-9
    delta = spec.delta
    while log_gain_eta(PiecewiseUniform(spec.l, delta), sigma_hi) <= target:
        delta /= 2.0
        if delta < 1e-300:
            raise DomainError(f"could not reach eta > ln H = {target:.6g}")
    probe = PiecewiseUniform(spec.l, delta)
    lo, hi = 0.0, sigma_hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= 0.0:
            break
        if log_gain_eta(probe, mid) > target:
            hi = mid
        else:
            lo = mid
    return ThresholdParams(sigma=hi, delta=delta)
