"""Energy functionals on transverse potentials: exactness, inequalities, cocycle."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sasakigeo import functionals as fn, quotient as qt


@pytest.fixture(scope="module")
def grid():
    return qt.S2Grid(n_theta=64, n_phi=128, lmax=32)


@pytest.fixture(scope="module")
def zero(grid):
    return qt.BasicPotential.zero(grid)


@pytest.fixture(scope="module")
def phi(grid):
    return qt.harmonic_potential(grid, 2, 1, 0.02).plus(
        qt.harmonic_potential(grid, 3, 0, 0.01)
    )


@st.composite
def window_potentials(draw):
    seed = draw(st.integers(min_value=0, max_value=2**31 - 1))
    g = qt.S2Grid(n_theta=64, n_phi=128, lmax=32)
    return g, qt.random_potential(g, np.random.default_rng(seed))


class TestPathIndependence:
    def test_straight_equals_reparametrized(self, zero, phi):
        # the velocity integral has an exact potential, so its value depends
        # only on the endpoints
        straight = fn.functional_L(fn.linear_path(zero, phi))
        quad = fn.functional_L(fn.power_path(zero, phi, 2.0))
        cubic = fn.functional_L(fn.power_path(zero, phi, 3.0))
        assert abs(straight - quad) < 1e-12  # Simpson is exact through cubics
        assert abs(straight - cubic) < 1e-6  # quartic integrand: quadrature error

    def test_detour_path_agrees(self, grid, zero, phi):
        detour = qt.harmonic_potential(grid, 1, 1, 0.015)
        via = fn.functional_L(fn.piecewise_linear_path([zero, detour, phi]))
        direct = fn.functional_L(fn.linear_path(zero, phi))
        assert abs(via - direct) < 1e-10

    def test_round_trip_vanishes(self, zero, phi):
        assert abs(fn.functional_L(fn.palindrome_path(zero, phi))) < 1e-12

    def test_constant_shift_value(self, grid, zero):
        # moving to the constant potential c crosses unit density: L = c
        const = zero.shifted(0.25)
        assert abs(fn.functional_L(fn.linear_path(zero, const)) - 0.25) < 1e-14


class TestEnergyInequalities:
    def test_distance_like_functional_nonnegative(self, zero, phi):
        assert fn.functional_I(zero, phi) >= 0.0
        assert fn.functional_I(zero, zero) == 0.0

    def test_j_half_of_i_on_surface_quotient(self, zero, phi):
        # n = 1 collapses the Aubin chain to equalities: J = I/2
        path = fn.linear_path(zero, phi)
        I = fn.functional_I(zero, phi)
        J, J_closed = fn.j_consistency(zero, phi, path)
        assert abs(J - 0.5 * I) < 1e-12
        assert abs(J - J_closed) < 1e-12

    @settings(max_examples=12, deadline=None)
    @given(data=window_potentials())
    def test_chain_inequalities_hold(self, data):
        g, psi = data
        zero = qt.BasicPotential.zero(g)
        I = fn.functional_I(zero, psi)
        J, _ = fn.j_consistency(zero, psi, fn.linear_path(zero, psi, 17))
        assert I >= -1e-12
        assert 2.0 * (I - J) - I >= -1e-7   # I <= (n+1)(I-J)
        assert I - 2.0 * (I - J) >= -1e-7   # (n+1)(I-J) <= nI

    def test_endpoints_must_match_path(self, grid, zero, phi):
        other = qt.harmonic_potential(grid, 2, 2, 0.01)
        path = fn.linear_path(zero, phi)
        with pytest.raises(ValueError, match="endpoints"):
            fn.functional_J(zero, other, path)


class TestCurvatureEnergy:
    def test_cocycle_over_closed_triangle(self, grid, zero):
        a = qt.harmonic_potential(grid, 2, 1, 0.015)
        b = qt.harmonic_potential(grid, 3, 2, 0.012)
        total = (
            fn.functional_M(fn.linear_path(zero, a))
            + fn.functional_M(fn.linear_path(a, b))
            + fn.functional_M(fn.linear_path(b, zero))
        )
        assert abs(total) < 1e-5

    def test_round_structure_is_critical(self, grid):
        probe = qt.harmonic_potential(grid, 2, 1, 0.01).shifted(0.02)
        assert fn.stationarity_residual(grid, probe, 0.5) < 1e-4

    def test_wrong_trace_constant_is_detected(self, grid):
        # with the doubled constant the derivative at the round structure
        # picks up -4 x mean(psi), clearly nonzero for a mean-shifted probe
        probe = qt.harmonic_potential(grid, 2, 1, 0.01).shifted(0.02)
        assert fn.stationarity_residual(grid, probe, 1.0) > 1e-2

    def test_calibration_selects_half(self, grid):
        cal = fn.calibrate_scalar_trace(grid)
        assert cal.constant == 0.5
        assert cal.residuals[0.5] < 1e-6 < cal.residuals[1.0]


class TestDerivativeIdentity:
    def test_linear_path_residual(self, zero, phi):
        res = fn.ij_derivative_check(fn.linear_path(zero, phi))
        assert res < 1e-6

    def test_curved_path_residual(self, zero, phi):
        # honest finite-difference residual on a genuinely curved path
        res = fn.ij_derivative_check(fn.power_path(zero, phi, 2.0, 65))
        assert res < 1e-4

    def test_requires_single_segment(self, grid, zero, phi):
        detour = qt.harmonic_potential(grid, 1, 1, 0.01)
        path = fn.piecewise_linear_path([zero, detour, phi])
        with pytest.raises(ValueError, match="single-segment"):
            fn.ij_derivative_check(path)

    def test_requires_constant_start(self, grid, phi):
        start = qt.harmonic_potential(grid, 1, 0, 0.01)
        with pytest.raises(ValueError, match="constant start"):
            fn.ij_derivative_check(fn.linear_path(start, phi))

    def test_requires_enough_nodes(self, zero, phi):
        with pytest.raises(ValueError, match="t-samples"):
            fn.ij_derivative_check(fn.linear_path(zero, phi, 5))


class TestPositivityWindow:
    def test_violation_reports_path_time(self, grid, zero):
        big = qt.harmonic_potential(grid, 2, 1, 0.2)
        path = fn.linear_path(zero, big)
        with pytest.raises(qt.PositivityError, match="path time"):
            path.require_positive()


class TestReport:
    def test_full_report_consistency(self, grid, phi):
        report = fn.functional_report(grid, phi, 2.0 * np.pi**2)
        assert report.path_independence_residual < 1e-6
        assert report.j_closed_form_residual < 1e-6
        assert report.chain_slack_lower > -1e-7
        assert report.chain_slack_upper > -1e-7
        assert report.I >= 0.0
        assert abs(report.J - 0.5 * report.I) < 1e-10
        assert report.V == pytest.approx(2.0 * np.pi**2)
