"""Densities, samplers and exact expectations of the three noise families."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.stats import kstwobign

from noisectl.distributions import (
    DiscreteUniform,
    DomainError,
    PiecewiseUniform,
    PolynomialSymmetric,
    ThresholdParams,
    inverse_power_expectation,
    log_gain_eta,
    sample_array,
    stabilization_threshold,
)
from noisectl.engine import uniform_stream

ALL_FAMILIES = [
    PolynomialSymmetric(0),
    PolynomialSymmetric(1),
    PolynomialSymmetric(3),
    DiscreteUniform(1),
    DiscreteUniform(3),
    PiecewiseUniform(1, 0.1),
    PiecewiseUniform(2, 0.02),
    PiecewiseUniform(3, 0.05),
]


# ---------------------------------------------------------------------------
# densities
# ---------------------------------------------------------------------------

def test_density_point_values():
    assert PolynomialSymmetric(0).density(0.3) == pytest.approx(0.5)
    assert PolynomialSymmetric(1).density(1.0) == pytest.approx(1.5)
    assert DiscreteUniform(1).density(1.0) == pytest.approx(0.5)
    assert DiscreteUniform(1).density(0.5) == 0.0
    h = PiecewiseUniform(2, 0.02)
    assert h.density(1.0) == pytest.approx(1.0 / (2 * 0.02 * 3))
    assert h.density(0.0) == 0.0


@pytest.mark.parametrize("s", range(0, 11))
def test_polynomial_density_normalizes(s):
    spec = PolynomialSymmetric(s)
    total, _ = quad(spec.density, -1, 1, limit=200)
    assert total == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("l", range(1, 11))
def test_discrete_weights_normalize(l):
    spec = DiscreteUniform(l)
    assert sum(spec.density(a) for a in spec.atoms()) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("l,delta", [(1, 0.3), (2, 0.02), (3, 0.05), (5, 0.04), (10, 0.01)])
def test_piecewise_density_normalizes(l, delta):
    spec = PiecewiseUniform(l, delta)
    edges = sorted({e for lo, hi, _ in spec.windows() for e in (lo, hi)})
    total, _ = quad(spec.density, -1, 1, points=edges[1:-1], limit=400)
    assert total == pytest.approx(1.0, abs=1e-9)


@given(st.floats(min_value=-1, max_value=1))
@settings(max_examples=200, deadline=None)
def test_density_even(x):
    for spec in ALL_FAMILIES:
        assert spec.density(x) == pytest.approx(spec.density(-x), abs=1e-12)


def test_density_zero_outside_support():
    for spec in ALL_FAMILIES:
        assert spec.density(1.5) == 0.0
        assert spec.density(-7.0) == 0.0


def test_piecewise_windows_disjoint():
    for l in (1, 2, 4, 10):
        delta = 0.9 / (2 * l - 1)
        wins = PiecewiseUniform(l, delta).windows()
        for (a, b, _), (c, d, _) in zip(wins, wins[1:]):
            assert b < c


def test_piecewise_rejects_bad_delta():
    with pytest.raises(DomainError):
        PiecewiseUniform(2, 1.0 / 3.0)
    with pytest.raises(DomainError):
        PiecewiseUniform(1, 0.0)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def test_sample_fixed_points():
    assert PolynomialSymmetric(0).sample(0.5) == 0.0
    assert PolynomialSymmetric(7).sample(0.5) == 0.0
    assert PolynomialSymmetric(1).sample(0.75) == pytest.approx(0.5 ** (1 / 3))
    assert DiscreteUniform(1).sample(0.25) == -1.0
    assert DiscreteUniform(1).sample(0.75) == 1.0


@given(st.floats(min_value=0, max_value=1, exclude_max=True))
@settings(max_examples=300, deadline=None)
def test_sample_stays_in_support(u):
    for spec in ALL_FAMILIES:
        assert -1.0 <= spec.sample(u) <= 1.0


def test_sample_matches_vectorized():
    us = uniform_stream(7, 0, 500)
    for spec in ALL_FAMILIES:
        vec = sample_array(spec, us)
        scal = np.array([spec.sample(float(u)) for u in us])
        np.testing.assert_allclose(vec, scal, rtol=0, atol=1e-15)


@pytest.mark.parametrize("spec", ALL_FAMILIES, ids=repr)
def test_inverse_transform_ks_distance(spec):
    """KS distance of 1e5 samples stays below the 99.9% quantile."""
    n = 10 ** 5
    xs = np.sort(sample_array(spec, uniform_stream(1234, 0, n)))
    if isinstance(spec, DiscreteUniform):
        # the empirical CDF only jumps at the atoms
        d = 0.0
        for a in spec.atoms():
            emp = np.searchsorted(xs, a + 1e-9) / n
            emp_left = np.searchsorted(xs, a - 1e-9) / n
            d = max(d, abs(emp - spec.cdf(a)), abs(emp_left - spec.cdf(a - 1e-9)))
    else:
        analytic = np.array([spec.cdf(float(x)) for x in xs])
        upper = np.arange(1, n + 1) / n
        lower = np.arange(0, n) / n
        d = max(np.max(np.abs(upper - analytic)), np.max(np.abs(analytic - lower)))
    assert d < kstwobign.ppf(0.999) / math.sqrt(n)


# ---------------------------------------------------------------------------
# eta = -E ln|1 + sigma xi|
# ---------------------------------------------------------------------------

def test_eta_polynomial_sigma1_closed_form():
    for s in range(0, 8):
        expected = sum(1.0 / (2 * k + 1) for k in range(s + 1)) - math.log(2.0)
        assert log_gain_eta(PolynomialSymmetric(s), 1.0) == pytest.approx(expected, abs=1e-14)


def test_eta_example_values():
    assert log_gain_eta(PolynomialSymmetric(3), 1.0) == pytest.approx(0.983, abs=5e-4)
    assert log_gain_eta(DiscreteUniform(1), 0.865) == pytest.approx(
        -0.5 * math.log(1 - 0.865 ** 2), abs=1e-14)
    assert log_gain_eta(DiscreteUniform(1), 0.865) == pytest.approx(0.6896, abs=5e-5)
    assert log_gain_eta(DiscreteUniform(3), 0.865) == pytest.approx(0.2872, abs=5e-5)


def test_eta_discrete_matches_paired_form():
    # independent evaluation through the pairing ln(1+sa) + ln(1-sa) = ln(1-s^2 a^2)
    for l in (1, 2, 3, 5):
        for sigma in (0.3, 0.7, 0.95):
            paired = math.log(1 - sigma ** 2)
            for j in range(1, l):
                a = -1 + 2 * j / (2 * l - 1)
                paired += math.log(1 - sigma ** 2 * a ** 2)
            assert log_gain_eta(DiscreteUniform(l), sigma) == pytest.approx(
                -paired / (2 * l), abs=1e-12)


@pytest.mark.parametrize("s", [0, 1, 2, 5])
@pytest.mark.parametrize("sigma", [0.2, 0.5, 0.9, 1.0])
def test_eta_polynomial_matches_quadrature(s, sigma):
    spec = PolynomialSymmetric(s)
    points = [-1.0 / sigma] if sigma >= 1.0 else None
    val, _ = quad(lambda x: spec.density(x) * math.log(abs(1 + sigma * x)),
                  -1, 1, points=points, limit=300)
    assert log_gain_eta(spec, sigma) == pytest.approx(-val, abs=1e-9)


@pytest.mark.parametrize("l,delta", [(1, 0.2), (2, 0.02), (4, 0.05)])
@pytest.mark.parametrize("sigma", [0.3, 0.7, 0.99])
def test_eta_piecewise_matches_quadrature(l, delta, sigma):
    spec = PiecewiseUniform(l, delta)
    total = 0.0
    h = spec.density(1.0)
    for lo, hi, _ in spec.windows():
        val, _ = quad(lambda x: h * math.log(abs(1 + sigma * x)), lo, hi, limit=200)
        total += val
    assert log_gain_eta(spec, sigma) == pytest.approx(-total, abs=1e-9)


def test_eta_vanishes_with_sigma():
    for spec in ALL_FAMILIES:
        assert abs(log_gain_eta(spec, 1e-9)) < 1e-12


def test_eta_monotone_in_s_at_sigma1():
    values = [log_gain_eta(PolynomialSymmetric(s), 1.0) for s in range(11)]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_eta_discrete_diverges_near_sigma1():
    e1 = log_gain_eta(DiscreteUniform(2), 0.9)
    e2 = log_gain_eta(DiscreteUniform(2), 0.99)
    e3 = log_gain_eta(DiscreteUniform(2), 0.999)
    assert e3 > e2 > e1


def test_eta_domain_errors():
    with pytest.raises(DomainError):
        log_gain_eta(PolynomialSymmetric(2), 0.0)
    with pytest.raises(DomainError):
        log_gain_eta(PolynomialSymmetric(2), 1.2)
    with pytest.raises(DomainError):
        log_gain_eta(DiscreteUniform(2), 1.0)
    with pytest.raises(DomainError):
        log_gain_eta(PiecewiseUniform(2, 0.02), 1.0)


def test_eta_lln_agreement():
    """Monte Carlo mean of -ln|1 + sigma xi| lies within 4 SE of the closed form."""
    cases = [
        (PolynomialSymmetric(0), 1.0),
        (PolynomialSymmetric(3), 1.0),
        (PolynomialSymmetric(2), 0.7),
        (DiscreteUniform(1), 0.865),
        (DiscreteUniform(3), 0.9),
        (PiecewiseUniform(2, 0.02), 0.7),
    ]
    n = 10 ** 6
    for i, (spec, sigma) in enumerate(cases):
        xs = sample_array(spec, uniform_stream(4242, i, n))
        draws = -np.log(np.abs(1.0 + sigma * xs))
        se = draws.std(ddof=1) / math.sqrt(n)
        assert abs(draws.mean() - log_gain_eta(spec, sigma)) < 4 * se


# ---------------------------------------------------------------------------
# E|f + sigma xi|^(-alpha)
# ---------------------------------------------------------------------------

def test_ipe_uniform_closed_form():
    # (1/2) int |v|^(-1/2) dv over [-1, 1] = 2
    assert inverse_power_expectation(PolynomialSymmetric(0), 0.0, 1.0, 0.5) == pytest.approx(2.0)
    # no singularity when sigma < f
    got = inverse_power_expectation(PolynomialSymmetric(0), 2.0, 1.0, 0.5)
    val, _ = quad(lambda x: 0.5 * abs(2.0 + x) ** -0.5, -1, 1)
    assert got == pytest.approx(val, abs=1e-10)


def test_ipe_bernoulli_closed_form():
    assert inverse_power_expectation(DiscreteUniform(1), 0.0, 2.0, 1.0) == pytest.approx(0.5)
    for f in (0.0, 0.5, 1.3):
        for sigma in (1.7, 2.5, 4.0):
            got = inverse_power_expectation(DiscreteUniform(1), f, sigma, 1.0)
            assert got == pytest.approx(sigma / (sigma ** 2 - f ** 2), abs=1e-12)


def test_ipe_polynomial_quadrature_vs_monte_carlo():
    spec = PolynomialSymmetric(2)
    f, sigma, alpha = 0.5, 3.0, 0.25
    got = inverse_power_expectation(spec, f, sigma, alpha)
    xs = sample_array(spec, uniform_stream(99, 0, 10 ** 6))
    draws = np.abs(f + sigma * xs) ** (-alpha)
    se = draws.std(ddof=1) / 1000.0
    assert abs(got - draws.mean()) < 4 * se


def test_ipe_piecewise_matches_quadrature():
    spec = PiecewiseUniform(2, 0.05)
    f, sigma, alpha = 0.4, 2.0, 0.5
    got = inverse_power_expectation(spec, f, sigma, alpha)
    total = 0.0
    for lo, hi, _ in spec.windows():
        root = -f / sigma
        pts = [root] if lo < root < hi else None
        val, _ = quad(lambda x: spec.density(x) * abs(f + sigma * x) ** (-alpha),
                      lo, hi, points=pts, limit=300)
        total += val
    assert got == pytest.approx(total, abs=1e-8)


def test_ipe_domain_errors():
    with pytest.raises(DomainError):
        inverse_power_expectation(PolynomialSymmetric(0), 0.5, 2.0, 1.0)
    with pytest.raises(DomainError):  # atom lands exactly on zero
        inverse_power_expectation(DiscreteUniform(1), 1.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        inverse_power_expectation(DiscreteUniform(1), 0.0, 2.0, 1.5)
    with pytest.raises(DomainError):  # window straddles the root at alpha = 1
        inverse_power_expectation(PiecewiseUniform(1, 0.3), 0.9, 1.0, 1.0)


def test_ipe_bernoulli_boundary_equivalence():
    """E|f + sigma xi|^(-1) < 1 exactly when sigma > (1 + sqrt(1+4f^2))/2."""
    for f in np.linspace(0.0, 2.0, 9):
        bound = (1.0 + math.sqrt(1.0 + 4.0 * f * f)) / 2.0
        for factor in (0.9, 0.99, 1.01, 1.1):
            sigma = bound * factor
            value = inverse_power_expectation(DiscreteUniform(1), float(f), float(sigma), 1.0)
            assert (value < 1.0) == (factor > 1.0)


# ---------------------------------------------------------------------------
# stabilization thresholds
# ---------------------------------------------------------------------------

def test_threshold_discrete_closed_form():
    got = stabilization_threshold(DiscreteUniform(1), 2.0)
    assert got == ThresholdParams(sigma=pytest.approx(math.sqrt(0.75)))
    # more atoms put mass closer to the interior, so larger l needs a
    # sigma closer to 1
    s1 = stabilization_threshold(DiscreteUniform(1), 3.0).sigma
    s4 = stabilization_threshold(DiscreteUniform(4), 3.0).sigma
    assert s4 > s1
    # sharp boundary at l = 1; sufficient (conservative) for l >= 2
    star1 = stabilization_threshold(DiscreteUniform(1), 2.5).sigma
    assert log_gain_eta(DiscreteUniform(1), star1 + 1e-6) > math.log(2.5)
    assert log_gain_eta(DiscreteUniform(1), star1 - 1e-6) < math.log(2.5)
    star2 = stabilization_threshold(DiscreteUniform(2), 2.5).sigma
    assert log_gain_eta(DiscreteUniform(2), star2 + 1e-6) > math.log(2.5)


def test_threshold_discrete_small_H():
    assert stabilization_threshold(DiscreteUniform(3), 1.0 + 1e-12).sigma < 1e-5


def test_threshold_polynomial_minimal_s():
    got = stabilization_threshold(PolynomialSymmetric(0), math.exp(0.983))
    assert got.s == 3 and got.sigma == 1.0
    # the found s satisfies the condition, s-1 does not
    H = 5.0
    s = stabilization_threshold(PolynomialSymmetric(0), H).s
    assert log_gain_eta(PolynomialSymmetric(s), 1.0) > math.log(H)
    assert log_gain_eta(PolynomialSymmetric(s - 1), 1.0) <= math.log(H)


def test_threshold_piecewise_satisfies_condition():
    spec = PiecewiseUniform(2, 0.05)
    H = 2.0
    got = stabilization_threshold(spec, H)
    assert got.sigma is not None and got.delta is not None
    assert log_gain_eta(PiecewiseUniform(2, got.delta), got.sigma) > math.log(H)


def test_threshold_rejects_H_below_one():
    for spec in (PolynomialSymmetric(0), DiscreteUniform(2), PiecewiseUniform(2, 0.02)):
        with pytest.raises(DomainError):
            stabilization_threshold(spec, 1.0)
