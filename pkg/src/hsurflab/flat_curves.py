"""Flat H-cylinders: planar curves whose cylinder has prescribed mean curvature.

A cylinder over a planar curve ``alpha`` (arclength ``s``, turning angle
``theta``, tangent ``(cos theta, sin theta)``) has principal curvatures
``kappa_alpha`` and 0, so its mean curvature is ``kappa_alpha / 2``.  With the
unit normal ``n(theta) = -sin(theta) e1 + cos(theta) e2`` the prescribed
curvature condition becomes

    theta'(s) = 2 * H(-sin(theta) e1 + cos(theta) e2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from hsurflab.errors import DiscretizationError, EvaluationError, VanishingDenominatorError
from hsurflab.sphere_field import E1, E2, CurvatureField, closure_integral

DIM = 2
FREEZE_TOL = 1e-10
CLOSURE_TOL = 1e-6


def hhat(field: CurvatureField, plane_basis, theta) -> np.ndarray:
    """Field restricted to the great circle, as a function of the turning angle."""
    e1, e2 = plane_basis
    theta = np.asarray(theta, dtype=float)
    normals = -np.sin(theta)[..., None] * e1 + np.cos(theta)[..., None] * e2
    return field(normals)


@dataclass
class PlanarCurveSolution:
    s: np.ndarray
    theta: np.ndarray
    points: np.ndarray  # (N, 2) in plane coordinates
    plane_basis: tuple
    closed: bool = False
    closure_gap: float = np.nan
    period_estimate: float | None = None
    step: float = np.nan
    straight: bool = False

    @property
    def points3d(self) -> np.ndarray:
        e1, e2 = self.plane_basis
        return self.points[:, :1] * e1 + self.points[:, 1:] * e2

    def summary(self) -> dict:
        return {"closed": bool(self.closed), "gap": float(self.closure_gap),
                "period": None if self.period_estimate is None else float(self.period_estimate),
                "s_max": float(self.s[-1]), "step": float(self.step),
                "straight_line": bool(self.straight)}


def _rk4_step(rhs, y, h):
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * h * k1)
    k3 = rhs(y + 0.5 * h * k2)
    k4 = rhs(y + h * k3)
    return y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _max_hhat(field, basis, n=721):
    return float(np.max(np.abs(hhat(field, basis, np.linspace(0, 2 * np.pi, n)))))


def default_step(field: CurvatureField, plane_basis=(E1, E2)) -> float:
    return 1e-3 / max(1.0, _max_hhat(field, plane_basis))


def integrate_flat_curve(field: CurvatureField, plane_basis=(E1, E2), theta0: float = 0.0,
                         s_max: float = 2 * np.pi, step: float | None = None) -> PlanarCurveSolution:
    """Integrate the turning-angle ODE with classical RK4 from ``alpha(0) = 0``.

    The state ``(theta, x, y)`` is advanced jointly so the curve itself is
    fourth-order accurate.  When the field vanishes at the initial normal the
    solution is the straight line through the origin in direction
    ``(cos theta0, sin theta0)``.  If the field is nonvanishing on the circle
    and ``s_max`` covers a full turn, the first period is located and the
    closure gap ``|alpha(T) - alpha(0)|`` is recorded.
    """
    if s_max <= 0:
        raise ValueError("s_max must be positive")
    basis = tuple(np.asarray(b, dtype=float) for b in plane_basis)
    if step is None:
        step = default_step(field, basis)
    n = max(1, int(np.ceil(s_max / step - 1e-9)))
    h = s_max / n
    s = np.linspace(0.0, s_max, n + 1)

    h0 = float(hhat(field, basis, theta0))
    if abs(h0) < FREEZE_TOL:
        theta = np.full(n + 1, float(theta0))
        pts = np.outer(s, [np.cos(theta0), np.sin(theta0)])
        return PlanarCurveSolution(s, theta, pts, basis, False, np.inf, None, h, True)

    def rhs(y):
        hv = float(hhat(field, basis, y[0]))
        if not np.isfinite(hv):
            raise EvaluationError("non-finite field value along the curve")
        w = DIM * hv if abs(hv) >= FREEZE_TOL else 0.0
        return np.array([w, np.cos(y[0]), np.sin(y[0])])

    Y = np.empty((n + 1, 3))
    Y[0] = (theta0, 0.0, 0.0)
    for k in range(n):
        Y[k + 1] = _rk4_step(rhs, Y[k], h)

    sol = PlanarCurveSolution(s, Y[:, 0], Y[:, 1:].copy(), basis, step=h)
    sol.period_estimate = theta_period(field, basis)
    sign = np.sign(h0)
    target = theta0 + sign * 2 * np.pi
    crossed = np.nonzero(sign * (Y[:, 0] - target) >= 0)[0]
    if sol.period_estimate is not None and crossed.size:
        k = int(crossed[0]) - 1
        # partial RK4 step from node k landing exactly on theta0 + 2 pi
        g = lambda dt: _rk4_step(rhs, Y[k], dt)[0] - target
        dt = brentq(g, 0.0, h, xtol=1e-15) if g(0.0) * g(h) < 0 else (0.0 if g(0.0) == 0 else h)
        end = _rk4_step(rhs, Y[k], dt)
        sol.closure_gap = float(np.hypot(end[1], end[2]))
        sol.closed = sol.closure_gap <= CLOSURE_TOL
    return sol


def theta_period(field: CurvatureField, plane_basis) -> float | None:
    """Arclength needed for one full turn, ``int dtheta / (2 |H|)``; None if H vanishes."""
    th = np.linspace(0, 2 * np.pi, 721)
    vals = hhat(field, plane_basis, th)
    if np.min(np.abs(vals)) <= FREEZE_TOL or np.any(np.sign(vals) != np.sign(vals[0])):
        return None
    val, _ = quad(lambda t: 1.0 / (DIM * abs(float(hhat(field, plane_basis, t)))),
                  0.0, 2 * np.pi, limit=200, epsabs=1e-13, epsrel=1e-13)
    return val


def detect_closure(sol: PlanarCurveSolution, field: CurvatureField,
                   tol: float = CLOSURE_TOL) -> tuple[bool, float]:
    """Decide whether the generating curve closes, by two independent criteria.

    The geometric criterion uses the integrated curve; the integral criterion
    uses the great-circle quadrature of ``xi / H(xi)``.  Over one turn the
    displacement of the curve is half that integral rotated by 90 degrees, so
    the criteria must agree; disagreement raises :class:`DiscretizationError`.
    """
    try:
        I = closure_integral(field, sol.plane_basis)
    except VanishingDenominatorError:
        return False, float(sol.closure_gap) if np.isfinite(sol.closure_gap) else np.inf
    if sol.period_estimate is None or not np.isfinite(sol.closure_gap):
        raise DiscretizationError("curve was not integrated over a full turn; raise s_max")
    integral_closed = bool(np.linalg.norm(I) < tol)
    geometric_closed = bool(sol.closure_gap <= tol)
    if integral_closed != geometric_closed:
        raise DiscretizationError(
            f"closure criteria disagree: |integral| = {np.linalg.norm(I):.3e}, "
            f"gap = {sol.closure_gap:.3e}")
    return geometric_closed, float(sol.closure_gap)


def ode_residual(sol: PlanarCurveSolution, field: CurvatureField) -> np.ndarray:
    """``|theta' - 2 H(n)|`` at interior samples, ``theta'`` by 5-point differences."""
    th, h = sol.theta, sol.s[1] - sol.s[0]
    d = (th[:-4] - 8 * th[1:-3] + 8 * th[3:-1] - th[4:]) / (12 * h)
    return np.abs(d - DIM * hhat(field, sol.plane_basis, th[2:-2]))


def discrete_curvature(sol: PlanarCurveSolution) -> np.ndarray:
    """Signed curvature of the sampled curve by centered differences (interior samples)."""
    p, h = sol.points, sol.s[1] - sol.s[0]
    d1 = (p[2:] - p[:-2]) / (2 * h)
    d2 = (p[2:] - 2 * p[1:-1] + p[:-2]) / h**2
    return (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / np.linalg.norm(d1, axis=1) ** 3


def cylinder_mean_curvature_residual(sol: PlanarCurveSolution, field: CurvatureField) -> np.ndarray:
    """``|H_cylinder - H(normal)|`` with the cylinder curvature from the sampled curve."""
    k = discrete_curvature(sol)
    th = sol.theta[1:-1]
    return np.abs(k / DIM - hhat(field, sol.plane_basis, th))
