import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hsurflab import errors
from hsurflab.sphere_field import (
    CurvatureField, closure_integral, constant_field, estrella_constant, estrella_value,
    field_from_spec, grad_s, hess_s, laplace_s, linear_field, positivity_range,
    reflection_matrix, rotation_matrix, sampled_field, symmetry_residual, tangent_frame,
    validate_symmetries, zonal_field, zonal_poly_field,
)

from conftest import E1, E2, E3, random_unit

unit_vectors = st.tuples(*[st.floats(-1, 1)] * 3).filter(
    lambda v: np.linalg.norm(v) > 0.1).map(lambda v: np.asarray(v) / np.linalg.norm(v))


def _gradient_fd_oracle(f, x, h=1e-5):
    """Independent oracle: differences along great circles in the frame at x."""
    t1, t2 = tangent_frame(x)
    out = np.zeros(3)
    for t in (t1, t2):
        plus = np.cos(h) * x + np.sin(h) * t
        minus = np.cos(h) * x - np.sin(h) * t
        out += (f(plus) - f(minus)) / (2 * h) * t
    return out


class TestGrad:
    def test_constant_is_zero(self, rng):
        x = random_unit(rng, 20)
        assert np.allclose(grad_s(constant_field(1.0), x), 0)

    def test_linear_at_e1(self):
        assert np.allclose(grad_s(linear_field(), E1), E3, atol=1e-12)

    def test_linear_at_pole(self):
        assert np.allclose(grad_s(linear_field(), E3), 0, atol=1e-12)

    def test_tangent(self, rng):
        f = zonal_poly_field([1.0, 0.3, -0.7, 0.2], axis=[1, 2, 3])
        x = random_unit(rng, 50)
        g = grad_s(f, x)
        assert np.max(np.abs(np.sum(g * x, axis=1))) < 1e-10

    def test_against_great_circle_differences(self, rng):
        f = zonal_poly_field([0.5, 1.0, 2.0], axis=[0, 1, 1])
        for x in random_unit(rng, 10):
            assert np.allclose(grad_s(f, x), _gradient_fd_oracle(f, x), atol=1e-8)

    def test_nonfinite_raises(self):
        f = CurvatureField(func=lambda x: 1.0 / (np.asarray(x)[..., 2]))
        with pytest.raises(errors.EvaluationError):
            grad_s(f, E1)

    def test_rejects_non_unit(self):
        with pytest.raises(ValueError):
            constant_field(1.0)(np.array([2.0, 0, 0]))


class TestHessLaplace:
    def test_constant(self):
        assert np.allclose(hess_s(constant_field(1.0), E2), 0)
        assert laplace_s(constant_field(5.0), E2) == pytest.approx(0, abs=1e-12)

    def test_linear_is_minus_t_identity(self, rng):
        f = linear_field()
        for x in random_unit(rng, 10):
            assert np.allclose(hess_s(f, x), -x[2] * np.eye(2), atol=1e-10)

    def test_linear_laplacian(self, rng):
        x = random_unit(rng, 30)
        assert np.allclose(laplace_s(linear_field(), x), -2 * x[:, 2], atol=1e-10)

    def test_degree_two_harmonic(self, rng):
        f = zonal_poly_field([-1 / 3, 0, 1.0])
        x = random_unit(rng, 30)
        assert np.allclose(laplace_s(f, x), -6 * f(x), atol=1e-10)

    @pytest.mark.parametrize("mode", ["analytic", "fd"])
    def test_eigenvalues_general_harmonics(self, rng, mode):
        # x1 x2 is degree 2, x1 is degree 1; neither is zonal about e3
        d2 = CurvatureField(func=lambda x: x[..., 0] * x[..., 1], derivative_mode=mode,
                            grad=lambda x: np.stack([x[..., 1], x[..., 0], 0 * x[..., 0]], -1),
                            hess=lambda x: np.broadcast_to(
                                np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0.]]), x.shape + (3,)))
        x = random_unit(rng, 20)
        assert np.allclose(laplace_s(d2, x), -6 * d2(x), atol=1e-7)
        d1 = linear_field(1.0, 0.0, E1, derivative_mode=mode)
        assert np.allclose(laplace_s(d1, x), -2 * x[:, 0], atol=1e-7)

    def test_symmetric_and_trace(self, rng):
        f = zonal_poly_field([1.0, 0.4, -0.2, 0.9], axis=[1, -1, 2])
        x = random_unit(rng, 40)
        H = hess_s(f, x)
        assert np.allclose(H, np.swapaxes(H, -1, -2), atol=1e-12)
        assert np.allclose(np.trace(H, axis1=-2, axis2=-1), laplace_s(f, x), atol=1e-8)


def _hess_in_frame(field, x, t1, t2):
    from hsurflab.sphere_field import hess_s_ambient
    A = hess_s_ambient(field, x)
    T = np.stack([t1, t2])
    return T @ A @ T.T


@settings(max_examples=40, deadline=None)
@given(x=unit_vectors, angle=st.floats(0, 2 * np.pi))
def test_frame_independence(x, angle):
    f = zonal_poly_field([1.0, 0.5, 0.3, -0.4], axis=[1, 2, 2])
    t1, t2 = tangent_frame(x)
    c, s = np.cos(angle), np.sin(angle)
    H0 = hess_s(f, x)
    H1 = _hess_in_frame(f, x, c * t1 + s * t2, -s * t1 + c * t2)
    assert abs(np.linalg.det(H0) - np.linalg.det(H1)) < 1e-8
    assert abs(np.trace(H0) - np.trace(H1)) < 1e-8


@settings(max_examples=30, deadline=None)
@given(x=unit_vectors, axis=unit_vectors, angle=st.floats(-np.pi, np.pi))
def test_rotation_equivariance(x, axis, angle):
    f = zonal_poly_field([0.2, 1.0, 0.0, 0.5], axis=[0.3, 0.1, 1.0])
    R = rotation_matrix(axis, angle)
    g = CurvatureField(func=lambda y: f(np.asarray(y) @ R.T), derivative_mode="fd")
    lhs = grad_s(g, x)
    rhs = R.T @ grad_s(f, R @ x)
    assert np.allclose(lhs, rhs, atol=1e-7)


def test_fd_converges_second_order(rng):
    f = zonal_poly_field([1.0, 0.5, -0.3, 0.8, 0.2], axis=[1, 1, 0.5])
    x = random_unit(rng, 30)
    exact = hess_s(f, x)
    errs = [np.max(np.abs(hess_s(f.with_mode("fd", h), x) - exact)) for h in (4e-2, 2e-2)]
    assert errs[0] / errs[1] > 3.5
    gerr = [np.max(np.abs(grad_s(f.with_mode("fd", h), x) - grad_s(f, x))) for h in (4e-2, 2e-2)]
    assert gerr[0] / gerr[1] > 3.5


class TestEstrella:
    def test_constant(self):
        assert estrella_value(constant_field(1.0), E1) == pytest.approx(3.0)
        assert estrella_value(constant_field(2.5), E3) == pytest.approx(3 * 2.5**2)

    def test_linear(self, rng):
        x = random_unit(rng, 30)
        assert np.allclose(estrella_value(linear_field(), x), 2 * x[:, 2] ** 2 - 1, atol=1e-10)

    def test_constant_report(self):
        rep = estrella_constant(constant_field(1.0), 500)
        assert rep.min_value == pytest.approx(3.0)
        assert rep.min_value <= rep.values.min() + 1e-15

    def test_linear_report(self):
        rep = estrella_constant(linear_field(), 2000)
        assert rep.min_value == pytest.approx(-1.0, abs=1e-9)
        assert abs(rep.argmin[2]) < 1e-4
        assert not rep.certified

    def test_perturbed_constant(self):
        for eps in (1e-2, 1e-3):
            rep = estrella_constant(linear_field(eps, 2.0), 2000)
            # closed form for a<x,v>+b: 2a^2 t^2 + 4abt + 3b^2 - a^2
            t = np.linspace(-1, 1, 20001)
            oracle = np.min(2 * eps**2 * t**2 + 4 * eps * 2 * t + 12 - eps**2)
            assert rep.min_value == pytest.approx(oracle, abs=1e-9)
            assert abs(rep.min_value - 12) < 10 * eps

    def test_resolution_floor(self):
        with pytest.raises(ValueError):
            estrella_constant(constant_field(1.0), 4)


class TestClosureIntegral:
    def test_constant(self):
        assert np.allclose(closure_integral(constant_field(3.0), (E1, E2)), 0, atol=1e-14)

    def test_closed_form(self):
        # H(xi(theta)) = 1/(1 + cos(theta)/2) along the (e1, e2) circle: H = 1/(1 + <x,e1>/2)
        f = CurvatureField(func=lambda x: 1.0 / (1.0 + 0.5 * np.asarray(x)[..., 0]))
        I = closure_integral(f, (E1, E2))
        assert np.allclose(I, [np.pi / 2, 0.0], atol=1e-12)

    def test_even_field(self):
        f = zonal_poly_field([1.0, 0.0, 0.7], axis=[1, 2, 0])
        assert np.allclose(closure_integral(f, (E1, E2)), 0, atol=1e-13)

    def test_vanishing(self):
        with pytest.raises(errors.VanishingDenominatorError):
            closure_integral(linear_field(1.0, 0.0, E1), (E1, E2))

    def test_fourth_order(self):
        f = linear_field(0.5, 1.0, E1)
        exact = closure_integral(f, (E1, E2), nodes=4000)
        e1 = np.linalg.norm(closure_integral(f, (E1, E2), 16) - exact)
        e2 = np.linalg.norm(closure_integral(f, (E1, E2), 32) - exact)
        assert e1 / e2 > 15 or e2 < 1e-13


class TestSymmetry:
    def test_constant(self, rng):
        R = rotation_matrix(rng.normal(size=3), 1.1)
        assert symmetry_residual(constant_field(1.0), R) == 0

    def test_even_reflection(self):
        f = zonal_poly_field([0, 0, 1.0])
        assert symmetry_residual(f, reflection_matrix(E3)) < 1e-14

    def test_odd_reflection(self):
        assert symmetry_residual(linear_field(), reflection_matrix(E3)) == pytest.approx(2.0)

    def test_non_orthogonal(self):
        with pytest.raises(ValueError):
            symmetry_residual(constant_field(1.0), 2 * np.eye(3))

    def test_declared_tags_hold(self):
        for f in (linear_field(1.0, 0.2, [1, 1, 0]), zonal_poly_field([1, 0, 2.0], axis=E1)):
            assert all(ok for _, ok in validate_symmetries(f).values())


class TestPositivity:
    def test_constant(self):
        rep = positivity_range(constant_field(1.0))
        assert rep.as_tuple() == pytest.approx((1, 1, 1))
        assert rep.item5_holds

    def test_two_plus_height(self):
        rep = positivity_range(linear_field(1.0, 2.0))
        assert rep.as_tuple() == pytest.approx((1, 3, 2))
        assert rep.item5_holds and rep.item5_margin == pytest.approx(1.0)

    def test_linear_not_positive(self):
        assert not positivity_range(linear_field()).positive


class TestConstructors:
    def test_zonal_fd_fallback(self, rng):
        f = zonal_field(np.cosh, axis=E2)
        assert f.derivative_mode == "fd"
        x = random_unit(rng, 5)
        assert np.allclose(laplace_s(f, x), laplace_s(
            zonal_field(np.cosh, np.sinh, np.cosh, axis=E2), x), atol=1e-6)

    def test_from_spec(self):
        f = field_from_spec({"kind": "analytic", "formula": "linear",
                             "params": {"a": 2.0, "b": 1.0, "v": [0, 0, 1]}})
        assert f(E3) == pytest.approx(3.0)
        g = field_from_spec({"formula": "zonal-poly", "params": {"coefficients": [1, 0, 1]},
                             "derivative_mode": "fd"})
        assert g.derivative_mode == "fd" and g(E3) == pytest.approx(2.0)

    def test_sampled(self):
        colat = np.linspace(0.05, np.pi - 0.05, 40)
        lon = np.linspace(0, 2 * np.pi, 80, endpoint=False)
        vals = 2 + np.cos(colat)[:, None] * np.ones_like(lon)
        f = sampled_field(colat, lon, vals)
        x = np.array([0.6, 0.0, 0.8])
        assert f(x) == pytest.approx(2.8, abs=1e-3)
        assert np.allclose(grad_s(f, x), grad_s(linear_field(1.0, 2.0), x), atol=1e-2)
