import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hsurflab import errors
from hsurflab.flat_curves import (
    theta_period, cylinder_mean_curvature_residual, detect_closure, discrete_curvature, hhat,
    integrate_flat_curve, ode_residual,
)
from hsurflab.sphere_field import (
    CurvatureField, closure_integral, constant_field, linear_field, zonal_poly_field,
)

from conftest import E1, E2, E3


def test_constant_circle():
    sol = integrate_flat_curve(constant_field(1.0), (E1, E2), 0.0, 2 * np.pi)
    # circle of radius 1/2 centred on the left normal
    r = np.linalg.norm(sol.points - [0.0, 0.5], axis=1)
    assert np.max(np.abs(r - 0.5)) < 1e-10
    assert sol.period_estimate == pytest.approx(np.pi)
    assert sol.closed and sol.closure_gap < 1e-8
    assert detect_closure(sol, constant_field(1.0))[0]


def test_cylinder_principal_curvatures():
    # cylinder over the curve: kappa1 = curvature of alpha, kappa2 = 0, H = kappa1 / 2
    sol = integrate_flat_curve(constant_field(1.0), (E1, E2), 0.0, 1.0, step=1e-3)
    assert np.allclose(discrete_curvature(sol) / 2, 1.0, atol=1e-6)


def test_straight_line():
    f = linear_field(1.0, 0.0, E2)
    sol = integrate_flat_curve(f, (E1, E2), np.pi / 2, 3.0)
    assert sol.straight
    assert np.allclose(sol.theta, np.pi / 2)
    assert np.allclose(sol.points[-1], [0.0, 3.0], atol=1e-12)
    assert not detect_closure(sol, f)[0]


def test_grim_reaper_closed_form():
    # H = <x, e3> in the (e1, e3) plane: theta' = 2 cos(theta)
    sol = integrate_flat_curve(linear_field(), (E1, E3), 0.0, 9.0)
    s = sol.s
    theta = 2 * np.arctan(np.tanh(s))
    assert np.max(np.abs(sol.theta - theta)) < 1e-10
    assert np.max(np.abs(sol.points[:, 0] - theta / 2)) < 1e-10
    assert np.max(np.abs(sol.points[:, 1] - 0.5 * np.log(np.cosh(2 * s)))) < 1e-10
    assert sol.theta[-1] == pytest.approx(np.pi / 2, abs=1e-6)
    assert sol.period_estimate is None


def test_unit_speed():
    sol = integrate_flat_curve(linear_field(0.4, 1.0, E1), (E1, E2), 0.2, 5.0)
    d = np.diff(sol.points, axis=0)
    speed = np.linalg.norm(d, axis=1) / np.diff(sol.s)
    assert np.max(np.abs(speed - 1)) < 1e-6


def test_even_zonal_closes():
    f = zonal_poly_field([1.0, 0.0, 0.5], axis=E1)
    sol = integrate_flat_curve(f, (E1, E2), 0.3, 4 * np.pi)
    closed, gap = detect_closure(sol, f)
    assert closed and gap < 1e-8


def test_open_curve_gap_matches_integral():
    f = linear_field(0.3, 1.0, E2)
    sol = integrate_flat_curve(f, (E1, E2), 0.0, 8 * np.pi)
    closed, gap = detect_closure(sol, f)
    assert not closed
    assert gap == pytest.approx(np.linalg.norm(closure_integral(f, (E1, E2))) / 2, rel=1e-9)


def test_closure_needs_full_turn():
    f = linear_field(0.3, 1.0, E2)
    sol = integrate_flat_curve(f, (E1, E2), 0.0, 1.0)
    with pytest.raises(errors.DiscretizationError):
        detect_closure(sol, f)


def test_rk4_convergence():
    f = linear_field(0.5, 1.0, E1)
    res = [ode_residual(integrate_flat_curve(f, (E1, E2), 0.0, 6.0, step=h), f).max()
           for h in (0.1, 0.05, 0.025)]
    assert res[0] / res[1] >= 8 and res[1] / res[2] >= 8


def test_curvature_identity_second_order():
    f = linear_field(0.5, 1.0, E1)
    res = [cylinder_mean_curvature_residual(
        integrate_flat_curve(f, (E1, E2), 0.0, 6.0, step=h), f).max() for h in (0.02, 0.01)]
    assert res[0] / res[1] > 3.5


def test_nonfinite_field():
    f = CurvatureField(func=lambda x: np.where(np.asarray(x)[..., 0] < -0.5, np.nan, 1.0))
    with pytest.raises(errors.EvaluationError):
        integrate_flat_curve(f, (E1, E2), 0.0, 3.0)


def test_bad_length():
    with pytest.raises(ValueError):
        integrate_flat_curve(constant_field(1.0), (E1, E2), 0.0, -1.0)


@settings(max_examples=12, deadline=None)
@given(a=st.floats(-0.6, 0.6), c2=st.floats(-0.3, 0.3), phi=st.floats(0, np.pi),
       even=st.booleans())
def test_criteria_equivalence(a, c2, phi, even):
    """Random positive fields: geometric closure iff the closure integral vanishes."""
    axis = np.array([np.cos(phi), np.sin(phi), 0.3])
    coeffs = [1.0, 0.0 if even else a, c2]
    f = zonal_poly_field(coeffs, axis=axis)
    assert np.min(hhat(f, (E1, E2), np.linspace(0, 2 * np.pi, 200))) > 0
    sol = integrate_flat_curve(f, (E1, E2), 0.0, 1.05 * theta_period(f, (E1, E2)), step=2e-3)
    closed, gap = detect_closure(sol, f)
    integral_small = np.linalg.norm(closure_integral(f, (E1, E2))) < 1e-6
    assert closed == integral_small
    assert gap == pytest.approx(np.linalg.norm(closure_integral(f, (E1, E2))) / 2, abs=1e-8)
