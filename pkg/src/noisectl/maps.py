"""Catalog of population maps x -> x f(x) and the equilibrium-shift construction.

Each map exposes the per-capita growth rate ``f``, its derivative
``f_prime`` (analytic for the built-ins), the full map ``F(x) = x f(x)``,
and a default working interval. All formulas extend to negative arguments
as written, which the destabilization schemes rely on.

``Shifted(base, K)`` is the map governing the deviation u = x - K from a
positive equilibrium K (f(K) = 1): its per-capita function is the
difference quotient (F(u+K) - K)/u, continuously extended through u = 0
by K f'(K) + 1 = F'(K).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.optimize import brentq, minimize_scalar

__all__ = [
    "Ricker",
    "Logistic",
    "ModifiedBevertonHolt",
    "PiecewiseBH",
    "Shifted",
    "MapSpec",
    "eval_map",
    "bound_H",
    "shifted_bound",
    "ShiftedBound",
    "fixed_points",
    "FixedPoint",
]

_SINGULARITY_GUARD = 1e-6


@dataclass(frozen=True)
class Ricker:
    """f(x) = exp(r (1 - x)); positive equilibrium at K = 1."""

    r: float

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError(f"Ricker requires r > 0, got {self.r}")

    def f(self, x: float) -> float:
        return math.exp(self.r * (1.0 - x))

    def f_prime(self, x: float) -> float:
        return -self.r * math.exp(self.r * (1.0 - x))

    def F(self, x: float) -> float:
        return x * self.f(x)

    @property
    def working_interval(self) -> tuple[float, float]:
        return (0.0, 10.0)


@dataclass(frozen=True)
class Logistic:
    """f(x) = r (1 - x); positive equilibrium at K = 1 - 1/r for r > 1."""

    r: float

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError(f"Logistic requires r > 0, got {self.r}")

    def f(self, x: float) -> float:
        return self.r * (1.0 - x)

    def f_prime(self, x: float) -> float:
        return -self.r

    def F(self, x: float) -> float:
        return self.r * x * (1.0 - x)

    @property
    def working_interval(self) -> tuple[float, float]:
        return (0.0, 1.0)


@dataclass(frozen=True)
class ModifiedBevertonHolt:
    """f(x) = 3 / (2 + (x - 3)^2); fixed points of F at 0, 2 and 4."""

    def f(self, x: float) -> float:
        return 3.0 / (2.0 + (x - 3.0) ** 2)

    def f_prime(self, x: float) -> float:
        d = 2.0 + (x - 3.0) ** 2
        return -6.0 * (x - 3.0) / (d * d)

    def F(self, x: float) -> float:
        return 3.0 * x / (2.0 + (x - 3.0) ** 2)

    @property
    def working_interval(self) -> tuple[float, float]:
        return (0.0, 10.0)


@dataclass(frozen=True)
class PiecewiseBH:
    """Two-branch Beverton-Holt-type map with fixed points 0, 1, 3, 5, 7.

    F(x) = 8.25 x / (7.25 + (x-2)^2)        for x < 3,
    F(x) = 3 (x-3) / (2 + (x-6)^2) + 3      for x >= 3.

    Both branches and their derivatives agree at x = 3 (F(3) = 3,
    F'(3) = 3/11), so F, f = F/x and F' are continuous on [0, inf).
    """

    def F(self, x: float) -> float:
        if x < 3.0:
            return 8.25 * x / (7.25 + (x - 2.0) ** 2)
        return 3.0 * (x - 3.0) / (2.0 + (x - 6.0) ** 2) + 3.0

    def f(self, x: float) -> float:
        if x < 3.0:
            # F/x simplifies; finite at x = 0
            return 8.25 / (7.25 + (x - 2.0) ** 2)
        return self.F(x) / x

    def f_prime(self, x: float) -> float:
        if x < 3.0:
            d = 7.25 + (x - 2.0) ** 2
            return -16.5 * (x - 2.0) / (d * d)
        # f = F/x  =>  f' = (F' x - F) / x^2
        return (self._F_prime_upper(x) * x - self.F(x)) / (x * x)

    def _F_prime_upper(self, x: float) -> float:
        d = 2.0 + (x - 6.0) ** 2
        return (3.0 * d - 3.0 * (x - 3.0) * 2.0 * (x - 6.0)) / (d * d)

    @property
    def working_interval(self) -> tuple[float, float]:
        return (0.0, 10.0)


@dataclass(frozen=True)
class Shifted:
    """Deviation map around an equilibrium K of the base map (f(K) = 1)."""

    base: "MapSpec"
    K: float

    def __post_init__(self):
        if self.K <= 0:
            raise ValueError(f"Shifted requires K > 0, got {self.K}")
        fK = self.base.f(self.K)
        if abs(fK - 1.0) > 1e-9:
            raise ValueError(
                f"K = {self.K} is not an equilibrium of the base map: f(K) = {fK:.12g}"
            )

    def f(self, u: float) -> float:
        if abs(u) < _SINGULARITY_GUARD:
            return self.K * self.base.f_prime(self.K) + 1.0
        x = u + self.K
        return (x * self.base.f(x) - self.K) / u

    def f_prime(self, u: float) -> float:
        h = 1e-6
        return (self.f(u + h) - self.f(u - h)) / (2.0 * h)

    def F(self, u: float) -> float:
        if u == 0.0:
            return 0.0
        return u * self.f(u)

    @property
    def working_interval(self) -> tuple[float, float]:
        lo, hi = self.base.working_interval
        return (lo - self.K, hi - self.K)


MapSpec = Union[Ricker, Logistic, ModifiedBevertonHolt, PiecewiseBH, Shifted]


def eval_map(map_spec: MapSpec, x: float) -> tuple[float, float]:
    """(f(x), F(x)) with the removable singularity of Shifted handled at 0."""
    return map_spec.f(x), map_spec.F(x)


def _abs_f_grid(map_spec: MapSpec, lo: float, hi: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    xs = np.linspace(lo, hi, n)
    vals = np.abs(np.array([map_spec.f(float(x)) for x in xs]))
    return xs, vals


def _refine_max(fn, lo: float, hi: float) -> float:
    res = minimize_scalar(lambda t: -abs(fn(float(t))), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-9})
    return float(-res.fun)


def bound_H(map_spec: MapSpec, lo: float, hi: float, n_grid: int = 100_000) -> float:
    """sup |f| over [lo, hi]: dense grid plus local refinement near the argmax.

    For the Ricker map, f is positive and decreasing, so the supremum is the
    exact endpoint value.
    """
    if lo > hi:
        raise ValueError(f"interval must satisfy lo <= hi, got [{lo}, {hi}]")
    if isinstance(map_spec, Ricker):
        return map_spec.f(lo)
    if lo == hi:
        return abs(map_spec.f(lo))
    xs, vals = _abs_f_grid(map_spec, lo, hi, n_grid)
    i = int(np.argmax(vals))
    return max(float(vals[i]),
               _refine_max(map_spec.f, xs[max(i - 1, 0)], xs[min(i + 1, n_grid - 1)]))


@dataclass(frozen=True)
class ShiftedBound:
    """Numeric sup of the shifted per-capita map and the coarse formula bound."""

    numeric_sup: float
    paper_bound: float
    arg_sup: float


def shifted_bound(map_spec: MapSpec, K: float, u_max: float | None = None,
                  n_grid: int = 100_000) -> ShiftedBound:
    """Bound of the shifted map |f_shift| over u in (lo - K, u_max].

    numeric_sup is a grid supremum (with local refinement) of the deviation
    map of ``Shifted(map_spec, K)``; the domain comes from the base map's
    working interval unless u_max is given. paper_bound is the coarse
    estimate max{ sup_{|u|<=1} |f_shift(u)|, H_t + K (H_t + 1) } where H_t
    bounds |f| on the far region |x - K| > 1 of the working interval
    (taken at least 1).
    """
    shifted = Shifted(map_spec, K)
    lo, hi = map_spec.working_interval
    u_lo = lo - K
    u_hi = (hi - K) if u_max is None else u_max
    if u_hi <= u_lo:
        raise ValueError(f"empty domain: ({u_lo}, {u_hi}]")

    us = np.linspace(u_lo + 1e-9, u_hi, n_grid)
    vals = np.abs(np.array([shifted.f(float(u)) for u in us]))
    i = int(np.argmax(vals))
    numeric = max(float(vals[i]),
                  _refine_max(shifted.f, us[max(i - 1, 0)], us[min(i + 1, n_grid - 1)]))

    near_lo, near_hi = max(u_lo + 1e-9, -1.0), min(u_hi, 1.0)
    near_us = np.linspace(near_lo, near_hi, 20_001)
    near = float(np.max(np.abs(np.array([shifted.f(float(u)) for u in near_us]))))

    tail_sup = 0.0
    for a, b in ((lo, K - 1.0), (K + 1.0, hi)):
        if b > a:
            xs = np.linspace(a, b, 20_001)
            tail_sup = max(tail_sup, float(np.max(np.abs(np.array([map_spec.f(float(x)) for x in xs])))))
    H_t = max(1.0, tail_sup)
    paper = max(near, H_t + K * (H_t + 1.0))

    return ShiftedBound(numeric_sup=numeric, paper_bound=paper, arg_sup=float(us[i]))


@dataclass(frozen=True)
class FixedPoint:
    x: float
    F_prime: float
    stable: bool


def fixed_points(map_spec: MapSpec, lo: float, hi: float, n_grid: int = 10_000) -> list[FixedPoint]:
    """Roots of F(x) - x on [lo, hi] by sign-change bracketing and bisection.

    Stability is labelled from a central-difference F' (h = 1e-6):
    |F'| < 1 is stable.
    """
    g = lambda x: map_spec.F(x) - x
    xs = np.linspace(lo, hi, n_grid)
    vals = np.array([g(float(x)) for x in xs])
    roots: list[float] = []
    for k in range(n_grid - 1):
        a, b = float(xs[k]), float(xs[k + 1])
        fa, fb = float(vals[k]), float(vals[k + 1])
        if fa == 0.0:
            roots.append(a)
        elif fa * fb < 0.0:
            roots.append(float(brentq(g, a, b, xtol=1e-10, rtol=8.9e-16)))
    if len(vals) and vals[-1] == 0.0:
        roots.append(float(xs[-1]))

    out: list[FixedPoint] = []
    seen: list[float] = []
    h = 1e-6
    for r in sorted(roots):
        if seen and abs(r - seen[-1]) < 1e-8:
            continue
        seen.append(r)
        deriv = (map_spec.F(r + h) - map_spec.F(r - h)) / (2.0 * h)
        out.append(FixedPoint(x=r, F_prime=deriv, stable=abs(deriv) < 1.0))
    return out
