"""Rotationally symmetric surfaces for zonal fields ``H(x) = h(<x, v>)``.

The profile ``(x(s), z(s))`` in a half-plane through the axis has tangent
angle ``theta`` and the surface normal ``(-sin theta cos phi, -sin theta sin
phi, cos theta)``, which points inward on convex profiles started at the lower
pole.  Its principal curvatures are ``theta'`` (meridian) and ``sin theta / x``
(parallel), so the prescribed-curvature condition reads

    x' = cos theta,  z' = sin theta,  theta' = 2 h(cos theta) - sin theta / x.

Profiles are computed with the axis along ``e3``; ``v`` only rotates the
result.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dfield

import numpy as np
from scipy.interpolate import CubicHermiteSpline, CubicSpline
from scipy.optimize import brentq

from hsurflab.errors import AxisCollisionError, ConstructionError, EvaluationError
from hsurflab.sphere_field import CurvatureField, symmetry_residual, reflection_matrix, zonal_field
from hsurflab.surface import DiscreteSurface, ParamGrid

DEFAULT_STEP = 1e-3
SERIES_STEPS = 10
POLE_TOL = 1e-6


@dataclass
class ProfileCurve:
    s: np.ndarray
    x: np.ndarray
    z: np.ndarray
    theta: np.ndarray
    step: float
    pole_start: bool
    pole_to_pole: bool = False
    end_reason: str = "s_max"
    axis_crossing_angle: float | None = None
    far_pole_s: float | None = None
    far_pole_x: float | None = None
    tail_curvature: float | None = None
    min_x_margin: float = np.inf
    meta: dict = dfield(default_factory=dict)

    def summary(self) -> dict:
        return {"pole_to_pole": bool(self.pole_to_pole), "end_reason": self.end_reason,
                "length": float(self.far_pole_s if self.far_pole_s is not None else self.s[-1]),
                "far_pole_x": None if self.far_pole_x is None else float(self.far_pole_x),
                "axis_crossing_angle": self.axis_crossing_angle,
                "max_height": float(self.z.max() - self.z.min()), "step": float(self.step)}


def _profile_fn(zonal):
    if isinstance(zonal, CurvatureField):
        if zonal.zonal is None:
            raise ValueError("field is not zonal")
        return zonal.zonal[0], zonal.zonal[1]
    if isinstance(zonal, tuple):
        return zonal
    h = zonal
    return h, lambda t, e=1e-6: (h(t + e) - h(t - e)) / (2 * e)


def _h(h, t) -> float:
    val = float(h(float(t)))
    if not np.isfinite(val):
        raise EvaluationError(f"profile function not finite at t={t}")
    return val


def pole_series(h, dh, s):
    """Regular start at the lower pole up to cubic order in arclength."""
    k = _h(h, 1.0)
    dk = _h(dh, 1.0)
    s = np.asarray(s, dtype=float)
    x = s - k * k * s**3 / 6
    z = k * s**2 / 2
    th = k * s - dk * k * k * s**3 / 4
    return x, z, th


def _rk4(rhs, y, step):
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * step * k1)
    k3 = rhs(y + 0.5 * step * k2)
    k4 = rhs(y + step * k3)
    return y + step / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate_profile(zonal, start="pole", s_max: float = 10.0, step: float = DEFAULT_STEP,
                      stop_theta: float | None = None) -> ProfileCurve:
    """Shoot the rotational profile ODE with RK4.

    Parameters
    ----------
    zonal : a zonal :class:`CurvatureField`, a pair ``(h, dh)`` or a callable ``h``.
    start : ``"pole"`` for the regular start on the axis, or ``(x0, z0, theta0)``.
    s_max : maximal arclength.
    step : RK4 step.
    stop_theta : stop exactly where ``theta`` first reaches this value.

    The run also ends when the profile approaches the far pole (``theta`` near
    ``pi``); the remaining arclength follows from the pole expansion at the
    far pole and the pole-to-pole flag is set when the current distance to
    the axis matches that expansion.  Approaching the axis with ``sin theta``
    bounded away from zero raises :class:`AxisCollisionError`.
    """
    h, dh = _profile_fn(zonal)
    pole = isinstance(start, str)
    if pole and start != "pole":
        raise ValueError("start must be 'pole' or (x0, z0, theta0)")

    def rhs(y):
        x, _, th = y
        if x <= 0:
            raise AxisCollisionError("profile reached the axis", partial=None)
        return np.array([np.cos(th), np.sin(th), 2 * _h(h, np.cos(th)) - np.sin(th) / x])

    if pole:
        s0 = SERIES_STEPS * step
        ss = np.arange(SERIES_STEPS + 1) * step
        xs, zs, ts = pole_series(h, dh, ss)
        S, Y = list(ss), [np.array(v) for v in zip(xs, zs, ts)]
    else:
        x0, z0, t0 = map(float, start)
        if x0 <= 0:
            raise ValueError("non-pole start needs x0 > 0")
        s0 = 0.0
        S, Y = [0.0], [np.array([x0, z0, t0])]

    k_far = _h(h, -1.0)
    reason = "s_max"
    n_steps = int(np.ceil((s_max - s0) / step - 1e-9))
    for _ in range(max(n_steps, 0)):
        y = Y[-1]
        if stop_theta is not None and y[2] >= stop_theta:
            break
        # hand the far-pole neighbourhood to the pole expansion
        if (k_far > 0 and y[2] > np.pi - SERIES_STEPS * step * k_far
                and y[0] < 2 * (np.pi - y[2]) / k_far + 2 * step):
            reason = "far_pole"
            break
        try:
            ynew = _rk4(rhs, y, step)
        except AxisCollisionError as exc:
            raise AxisCollisionError(
                f"profile hit the axis at s={S[-1]:.6g} with theta={y[2]:.6g}",
                partial=_pack(S, Y, step, pole)) from exc
        if ynew[0] <= 0 or not np.all(np.isfinite(ynew)):
            raise AxisCollisionError(
                f"profile hit the axis at s={S[-1]:.6g} with theta={y[2]:.6g}",
                partial=_pack(S, Y, step, pole))
        if stop_theta is not None and ynew[2] >= stop_theta:
            g = lambda dt: _rk4(rhs, y, dt)[2] - stop_theta
            dt = brentq(g, 0.0, step, xtol=1e-15) if g(0.0) < 0 else 0.0
            S.append(S[-1] + dt)
            Y.append(_rk4(rhs, y, dt))
            reason = "stop_theta"
            break
        S.append(S[-1] + step)
        Y.append(ynew)
    prof = _pack(S, Y, step, pole)
    prof.end_reason = reason
    if reason == "far_pole":
        # invert the pole expansion at the far pole (field reflected, t -> -t)
        x, _, th = Y[-1]
        dk_far = -_h(dh, -1.0)
        sig = (np.pi - th) / k_far
        for _ in range(50):
            f = k_far * sig - dk_far * k_far**2 * sig**3 / 4 - (np.pi - th)
            sig -= f / (k_far - 3 * dk_far * k_far**2 * sig**2 / 4)
        prof.far_pole_s = S[-1] + sig
        prof.far_pole_x = float(x - (sig - k_far**2 * sig**3 / 6))
        prof.tail_curvature = k_far
        prof.pole_to_pole = pole and abs(prof.far_pole_x) <= POLE_TOL
        prof.axis_crossing_angle = float(np.pi) if prof.pole_to_pole else None
    return prof


def _pack(S, Y, step, pole) -> ProfileCurve:
    Y = np.array(Y)
    return ProfileCurve(np.array(S), Y[:, 0], Y[:, 1], Y[:, 2], step, pole,
                        min_x_margin=float(Y[1:, 0].min()) if len(Y) > 1 else np.inf)


def profile_residual(prof: ProfileCurve, zonal) -> np.ndarray:
    """``|theta' - (2 h(cos theta) - sin theta / x)|`` with ``theta'`` from a spline."""
    h, _ = _profile_fn(zonal)
    keep = prof.x > 1e-8
    spl = CubicSpline(prof.s, prof.theta)
    d = spl(prof.s[keep], 1)
    rhs = 2 * np.array([_h(h, c) for c in np.cos(prof.theta[keep])]) \
        - np.sin(prof.theta[keep]) / prof.x[keep]
    return np.abs(d - rhs)


# ------------------------------------------------------------------ revolve

class ProfileInterpolant:
    """Smooth resampling of a profile: Hermite for ``x, z``, spline for ``theta``."""

    def __init__(self, prof: ProfileCurve):
        s = prof.s
        self.s0, self.s1 = float(s[0]), float(s[-1])
        self.x = CubicHermiteSpline(s, prof.x, np.cos(prof.theta))
        self.z = CubicHermiteSpline(s, prof.z, np.sin(prof.theta))
        self.theta = CubicSpline(s, prof.theta)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        return self.x(s), self.z(s), self.theta(s), self.theta(s, 1)


def revolve(rows_s, x, z, theta, dtheta, nphi: int, *, pole_low: bool, pole_high: bool,
            boundary_row: bool, order: int = 4, axis=None, kind="revolution",
            meta=None) -> DiscreteSurface:
    """Surface of revolution from profile samples on cell-centred rows.

    The parameters are ``(s, phi)`` in that order, which makes the grid
    normal the profile's inward normal.  With ``boundary_row`` the last row is
    a Dirichlet boundary.
    """
    if nphi % 2:
        raise ValueError("nphi must be even")
    nr = len(rows_s)
    ds = float(rows_s[1] - rows_s[0]) if nr > 1 else 1.0
    dphi = 2 * np.pi / nphi
    phi = np.arange(nphi) * dphi
    mask = np.ones((nr, nphi), dtype=bool)
    grid = ParamGrid(mask, (ds, dphi), periodic_v=True, pole_low=pole_low,
                     pole_high=pole_high, order=order)
    I, J = grid.ij[:, 0], grid.ij[:, 1]
    X, Z, T, dT, P = x[I], z[I], theta[I], dtheta[I], phi[J]
    c, s = np.cos(P), np.sin(P)
    ct, st = np.cos(T), np.sin(T)
    zero = np.zeros_like(X)
    r = np.column_stack([X * c, X * s, Z])
    r_s = np.column_stack([ct * c, ct * s, st])
    r_p = np.column_stack([-X * s, X * c, zero])
    r_ss = dT[:, None] * np.column_stack([-st * c, -st * s, ct])
    r_sp = np.column_stack([-ct * s, ct * c, zero])
    r_pp = np.column_stack([-X * c, -X * s, zero])
    if axis is not None:
        R = _frame_to(axis)
        r, r_s, r_p, r_ss, r_sp, r_pp = (a @ R.T for a in (r, r_s, r_p, r_ss, r_sp, r_pp))
    interior = np.ones(grid.n, dtype=bool)
    if boundary_row:
        interior[I == nr - 1] = False
    closed = pole_low and pole_high
    return DiscreteSurface(grid, r, r_s, r_p, r_ss, r_sp, r_pp, interior=interior,
                           closed=closed, kind=kind, meta=meta)


def _frame_to(axis) -> np.ndarray:
    """Rotation taking e3 to ``axis``."""
    v = np.asarray(axis, dtype=float)
    v = v / np.linalg.norm(v)
    e3 = np.array([0.0, 0.0, 1.0])
    c = float(v @ e3)
    if c > 1 - 1e-15:
        return np.eye(3)
    if c < -1 + 1e-15:
        return np.diag([1.0, -1.0, -1.0])
    k = np.cross(e3, v)
    s = np.linalg.norm(k)
    k /= s
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + s * K + (1 - c) * K @ K


def _zonal_of(field_or_h):
    if isinstance(field_or_h, CurvatureField):
        fld = field_or_h
        if fld.zonal is None:
            raise ValueError("field is not zonal")
        h, dh, axis = fld.zonal
        return fld, h, dh, axis
    h, dh = _profile_fn(field_or_h)
    fld = zonal_field(h, dh, axis=np.array([0.0, 0.0, 1.0]))
    return fld, h, dh, np.array([0.0, 0.0, 1.0])


def build_sphere(zonal, n_rows: int = 128, nphi: int | None = None,
                 step: float = DEFAULT_STEP, order: int = 4) -> DiscreteSurface:
    """Closed convex rotational sphere for an even positive profile function.

    The profile is shot from the lower pole to the equator (``theta = pi/2``)
    and mirrored, which uses the evenness of ``h``.  A full pole-to-pole run is
    also made and must close on the axis.
    """
    fld, h, dh, axis = _zonal_of(zonal)
    t = np.linspace(-1, 1, 401)
    hv = np.array([_h(h, a) for a in t])
    if np.any(hv <= 0):
        raise ConstructionError("profile function must be positive")
    even = symmetry_residual(fld, reflection_matrix(axis))
    if even > 1e-10:
        raise ConstructionError(f"profile function is not even (residual {even:.3e})")
    full = integrate_profile((h, dh), "pole", s_max=4 * np.pi / hv.min(), step=step)
    if not full.pole_to_pole:
        raise ConstructionError("profile does not close pole to pole")
    half = integrate_profile((h, dh), "pole", s_max=4 * np.pi / hv.min(), step=step,
                             stop_theta=np.pi / 2)
    if half.end_reason != "stop_theta":
        raise ConstructionError("profile did not reach the equator")
    L2 = float(half.s[-1])
    nphi = nphi or 2 * n_rows
    ds = 2 * L2 / n_rows
    rows = (np.arange(n_rows) + 0.5) * ds
    lower = rows <= L2
    interp = ProfileInterpolant(half)
    x, z, th, dth = (np.empty(n_rows) for _ in range(4))
    x[lower], z[lower], th[lower], dth[lower] = interp(rows[lower])
    mir = 2 * L2 - rows[~lower]
    xm, zm, tm, dtm = interp(mir)
    z_eq = float(half.z[-1])
    x[~lower], z[~lower], th[~lower], dth[~lower] = xm, 2 * z_eq - zm, np.pi - tm, dtm
    _series_fill(rows, x, z, th, dth, h, dh, step)
    meta = {"length": 2 * L2, "equator_radius": float(half.x[-1]), "height": 2 * z_eq,
            "far_pole_x": full.far_pole_x, "profile": full}
    return revolve(rows, x, z - z_eq, th, dth, nphi, pole_low=True, pole_high=True,
                   boundary_row=False, order=order, axis=axis, kind="rotational-sphere",
                   meta=meta)


def _series_fill(rows, x, z, th, dth, h, dh, step, lower_only=False):
    """Replace rows inside the series zone(s) by the pole expansion."""
    k = _h(h, 1.0)
    dk = _h(dh, 1.0)
    s0 = SERIES_STEPS * step
    near = rows < s0
    if near.any():
        xs, zs, ts = pole_series(h, dh, rows[near])
        x[near], z[near], th[near] = xs, zs, ts
        dth[near] = k - 3 * dk * k * k * rows[near] ** 2 / 4


def build_hemisphere(zonal, n_rows: int = 128, nphi: int | None = None,
                     step: float = DEFAULT_STEP, s_max: float | None = None,
                     order: int = 4) -> DiscreteSurface:
    """Convex cap from the lower pole up to the horizontal-normal circle.

    The boundary row sits exactly where ``theta = pi / 2``.  Raises
    :class:`ConstructionError` if ``theta`` never reaches ``pi / 2`` or the
    cap fails to be strictly convex.
    """
    fld, h, dh, axis = _zonal_of(zonal)
    hv = np.array([_h(h, a) for a in np.linspace(0, 1, 201)])
    if np.any(hv <= 0):
        raise ConstructionError("not a hemisphere: profile function vanishes on [0, 1]")
    s_max = s_max or 4 * np.pi / hv.min()
    try:
        prof = integrate_profile((h, dh), "pole", s_max=s_max, step=step, stop_theta=np.pi / 2)
    except AxisCollisionError as exc:
        raise ConstructionError(f"not a hemisphere: {exc}") from exc
    if prof.end_reason != "stop_theta":
        raise ConstructionError("not a hemisphere: theta never reaches pi/2")
    L = float(prof.s[-1])
    ds = L / (n_rows - 0.5)
    rows = (np.arange(n_rows) + 0.5) * ds
    rows[-1] = L
    interp = ProfileInterpolant(prof)
    x, z, th, dth = interp(rows)
    x, z, th, dth = (np.array(a, dtype=float) for a in (x, z, th, dth))
    _series_fill(rows, x, z, th, dth, h, dh, step)
    nphi = nphi or 2 * n_rows
    surf = revolve(rows, x, z, th, dth, nphi, pole_low=True, pole_high=False,
                   boundary_row=True, order=order, axis=axis, kind="hemisphere",
                   meta={"boundary_radius": float(prof.x[-1]), "length": L,
                         "height": float(prof.z[-1]), "profile": prof})
    if np.any(surf.kappa[:, 1] <= 0):
        raise ConstructionError("not a hemisphere: cap is not strictly convex")
    return surf


def build_flat_disk(radius: float = 1.0, n_rows: int = 64, nphi: int | None = None,
                    order: int = 4) -> DiscreteSurface:
    """Planar disk on a polar grid, boundary row exactly on the circle."""
    ds = radius / (n_rows - 0.5)
    rows = (np.arange(n_rows) + 0.5) * ds
    rows[-1] = radius
    zero = np.zeros(n_rows)
    nphi = nphi or 2 * n_rows
    return revolve(rows, rows.copy(), zero, zero, zero.copy(), nphi, pole_low=True,
                   pole_high=False, boundary_row=True, order=order, kind="flat-disk",
                   meta={"radius": radius})


def build_cap(H0: float, cap_radius: float, n_rows: int = 64, nphi: int | None = None,
              order: int = 4) -> DiscreteSurface:
    """Spherical cap of curvature ``H0`` whose boundary circle has the given radius."""
    if not 0 < cap_radius * H0 <= 1:
        raise ValueError("cap radius must be in (0, 1/H0]")
    R = 1.0 / H0
    L = R * np.arcsin(cap_radius * H0)
    ds = L / (n_rows - 0.5)
    rows = (np.arange(n_rows) + 0.5) * ds
    rows[-1] = L
    th = rows / R
    nphi = nphi or 2 * n_rows
    return revolve(rows, R * np.sin(th), R * (1 - np.cos(th)), th, np.full(n_rows, H0), nphi,
                   pole_low=True, pole_high=False, boundary_row=True, order=order,
                   kind="cap", meta={"boundary_radius": cap_radius, "H0": H0})


def round_sphere(radius: float = 1.0, n_rows: int = 128, nphi: int | None = None,
                 order: int = 4) -> DiscreteSurface:
    """Closed round sphere (inward normal, mean curvature ``1/radius``)."""
    ds = np.pi * radius / n_rows
    rows = (np.arange(n_rows) + 0.5) * ds
    th = rows / radius
    nphi = nphi or 2 * n_rows
    return revolve(rows, radius * np.sin(th), -radius * np.cos(th), th,
                   np.full(n_rows, 1.0 / radius), nphi, pole_low=True, pole_high=True,
                   boundary_row=False, order=order, kind="round-sphere",
                   meta={"radius": radius})


def curvature_residual(surface: DiscreteSurface, field: CurvatureField) -> np.ndarray:
    """Pointwise ``|H_surface - H(normal)|``."""
    return np.abs(surface.H - field(surface.normal))
