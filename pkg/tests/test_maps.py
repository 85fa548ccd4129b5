"""Map catalog: evaluation identities, bounds, fixed points, equilibrium shift."""

import math

import pytest
from hypothesis import given, settings, strategies as st

from noisectl.maps import (
    Logistic,
    ModifiedBevertonHolt,
    PiecewiseBH,
    Ricker,
    Shifted,
    bound_H,
    eval_map,
    fixed_points,
    shifted_bound,
)

CATALOG = [Ricker(1.0), Ricker(2.5), Logistic(2.0), Logistic(3.3),
           ModifiedBevertonHolt(), PiecewiseBH()]


def test_eval_fixed_point_values():
    f, F = eval_map(Ricker(2.0), 1.0)
    assert f == pytest.approx(1.0) and F == pytest.approx(1.0)
    _, F = eval_map(ModifiedBevertonHolt(), 4.0)
    assert F == pytest.approx(4.0)
    _, F = eval_map(PiecewiseBH(), 3.0)
    assert F == pytest.approx(3.0)


@given(st.floats(min_value=-5, max_value=10, allow_nan=False))
@settings(max_examples=300, deadline=None)
def test_F_equals_x_times_f(x):
    for m in CATALOG:
        f, F = eval_map(m, x)
        assert F == pytest.approx(x * f, rel=1e-14, abs=1e-300)


def test_piecewise_bh_branches_agree_at_three():
    m = PiecewiseBH()
    assert m.F(3.0) == pytest.approx(8.25 * 3 / (7.25 + 1.0))
    # C1 across the branch boundary
    h = 1e-7
    left = (m.F(3.0) - m.F(3.0 - h)) / h
    right = (m.F(3.0 + h) - m.F(3.0)) / h
    assert left == pytest.approx(right, abs=1e-5)
    assert left == pytest.approx(3.0 / 11.0, abs=1e-5)


@given(st.floats(min_value=-5, max_value=10), st.floats(min_value=1e-3, max_value=4))
@settings(max_examples=200, deadline=None)
def test_analytic_derivatives_match_finite_differences(x, r):
    h = 1e-6
    for m in (Ricker(r), Logistic(r), ModifiedBevertonHolt(), PiecewiseBH()):
        if isinstance(m, PiecewiseBH) and abs(x - 3.0) < 2 * h:
            continue  # derivative is only piecewise-smooth there
        if isinstance(m, PiecewiseBH) and abs(x) < 0.1:
            continue  # f = F/x quotient loses precision near 0
        num = (m.f(x + h) - m.f(x - h)) / (2 * h)
        assert m.f_prime(x) == pytest.approx(num, rel=1e-4, abs=1e-4)


# ---------------------------------------------------------------------------
# bound_H
# ---------------------------------------------------------------------------

def test_bound_H_ricker_analytic():
    assert bound_H(Ricker(1.0), 0.0, 10.0) == pytest.approx(math.e, abs=1e-12)
    assert bound_H(Ricker(0.94), 0.0, 10.0) == pytest.approx(math.exp(0.94), abs=1e-12)


def test_bound_H_logistic_grid():
    assert bound_H(Logistic(2.0), 0.0, 1.0) == pytest.approx(2.0, abs=1e-6)


def test_bound_H_degenerate_interval():
    m = ModifiedBevertonHolt()
    assert bound_H(m, 2.5, 2.5) == pytest.approx(abs(m.f(2.5)))


def test_bound_H_interior_maximum():
    # |f| of the modified BH map peaks at x = 3
    assert bound_H(ModifiedBevertonHolt(), 0.0, 10.0) == pytest.approx(1.5, abs=1e-6)


# ---------------------------------------------------------------------------
# shifted map
# ---------------------------------------------------------------------------

def test_shifted_requires_equilibrium():
    with pytest.raises(ValueError):
        Shifted(Ricker(2.0), 1.5)
    with pytest.raises(ValueError):
        shifted_bound(Ricker(2.0), 1.7)


def test_shifted_value_at_zero():
    sh = Shifted(Ricker(3.0), 1.0)
    assert sh.f(0.0) == pytest.approx(1.0 - 3.0)  # K f'(K) + 1 = 1 - r
    sh = Shifted(Logistic(3.0), 1.0 - 1.0 / 3.0)
    assert sh.f(0.0) == pytest.approx(2.0 - 3.0)
    assert sh.F(0.0) == 0.0


@pytest.mark.parametrize("base,K", [
    (Ricker(1.0), 1.0),
    (Ricker(3.0), 1.0),
    (Logistic(3.0), 1.0 - 1.0 / 3.0),
    (ModifiedBevertonHolt(), 4.0),
    (PiecewiseBH(), 3.0),
])
def test_shifted_continuous_at_origin(base, K):
    sh = Shifted(base, K)
    center = sh.f(0.0)
    for u in (1e-4, -1e-4, 1e-6, -1e-6):
        assert abs(sh.f(u) - center) < 1e-2


def test_shifted_bound_ricker_values():
    sb1 = shifted_bound(Ricker(1.0), 1.0)
    assert sb1.numeric_sup == pytest.approx(1.0, abs=1e-3)
    assert sb1.paper_bound == pytest.approx(3.0, abs=1e-9)
    sb3 = shifted_bound(Ricker(3.0), 1.0)
    assert sb3.numeric_sup == pytest.approx(2.4925, abs=5e-3)
    assert sb3.paper_bound == pytest.approx(3.0, abs=1e-9)


def test_shifted_bound_logistic():
    # the shifted logistic per-capita map is linear: (2 - r) - r u
    r = 3.0
    K = 1.0 - 1.0 / r
    sb = shifted_bound(Logistic(r), K)
    assert sb.numeric_sup >= abs(K * (-r) + 1.0) - 1e-9  # at least |f_shift(0)| = 1
    assert sb.numeric_sup == pytest.approx(r - 1.0, abs=1e-6)


@pytest.mark.parametrize("base,K", [
    (Ricker(1.0), 1.0),
    (Ricker(3.0), 1.0),
    (Logistic(3.0), 1.0 - 1.0 / 3.0),
    (ModifiedBevertonHolt(), 4.0),
    (PiecewiseBH(), 3.0),
])
def test_paper_bound_dominates_numeric_sup(base, K):
    sb = shifted_bound(base, K)
    assert sb.paper_bound >= sb.numeric_sup - 1e-9


# ---------------------------------------------------------------------------
# fixed points
# ---------------------------------------------------------------------------

def test_fixed_points_modified_bh():
    pts = fixed_points(ModifiedBevertonHolt(), 0.5, 10.0)
    assert [round(p.x, 8) for p in pts] == [2.0, 4.0]
    p4 = pts[1]
    assert p4.F_prime == pytest.approx(-5.0 / 3.0, abs=1e-6)
    assert not p4.stable and not pts[0].stable


def test_fixed_points_piecewise_bh():
    pts = fixed_points(PiecewiseBH(), -0.5, 10.0)
    assert [round(p.x, 8) for p in pts] == [0.0, 1.0, 3.0, 5.0, 7.0]
    assert [p.x for p in pts if p.stable] == pytest.approx([0.0, 3.0])


def test_fixed_points_ricker():
    pts = fixed_points(Ricker(2.0), 0.5, 2.0)
    assert len(pts) == 1
    assert pts[0].x == pytest.approx(1.0, abs=1e-9)
