"""Prescribed curvature functions on the unit sphere and their spherical calculus.

Derivatives are taken through an ambient extension ``F`` of the field to a
neighbourhood of the sphere.  For any smooth extension the spherical gradient is
``P DF`` (``P = I - x x^T``) and the spherical Hessian on tangent vectors is
``D^2 F(s, t) - <s, t> <x, DF>``.  Analytic fields supply ``DF`` and ``D^2 F``
for a convenient extension; finite-difference fields use the degree-zero
extension ``F(y) = H(y / |y|)`` and central differences along a tangent frame,
which never needs a chart and so has no pole singularity.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import minimize

from hsurflab.errors import EvaluationError, VanishingDenominatorError

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])

UNIT_TOL = 1e-8


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class CurvatureField:
    """A real function on S^2, with optional closed-form ambient derivatives.

    Parameters
    ----------
    func : callable
        Maps an array of unit vectors of shape ``(..., 3)`` to values ``(...)``.
    grad, hess : callable, optional
        Gradient ``(..., 3)`` and Hessian ``(..., 3, 3)`` of some smooth
        extension of ``func`` to a neighbourhood of the sphere.  Both must be
        given for ``derivative_mode="analytic"``.
    derivative_mode : {"analytic", "fd"}
    fd_step : float
        Step of the central differences on the sphere.
    kind : {"analytic", "sampled"}
    symmetry_tags : tuple of dict
        Declared invariances, e.g. ``{"type": "reflection", "normal": [0, 0, 1]}``,
        ``{"type": "rotation", "axis": [0, 0, 1]}`` or ``{"type": "antipodal"}``.
    zonal : tuple, optional
        ``(h, dh, axis)`` when the field is ``h(<x, axis>)``; used by the
        rotational constructions.
    """

    func: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray] | None = None
    hess: Callable[[np.ndarray], np.ndarray] | None = None
    derivative_mode: str = "fd"
    fd_step: float = 1e-4
    kind: str = "analytic"
    symmetry_tags: tuple = ()
    name: str = "custom"
    params: dict = dc_field(default_factory=dict)
    zonal: tuple | None = None

    def __post_init__(self):
        if self.derivative_mode not in ("analytic", "fd"):
            raise ValueError(f"unknown derivative_mode {self.derivative_mode!r}")
        if self.derivative_mode == "analytic" and (self.grad is None or self.hess is None):
            raise ValueError("analytic derivative mode needs both grad and hess")
        if self.kind not in ("analytic", "sampled"):
            raise ValueError(f"unknown field kind {self.kind!r}")

    @property
    def has_analytic_derivatives(self) -> bool:
        return self.grad is not None and self.hess is not None

    def with_mode(self, mode: str, fd_step: float | None = None) -> "CurvatureField":
        """Copy of the field using another derivative mode."""
        return replace(self, derivative_mode=mode,
                       fd_step=self.fd_step if fd_step is None else fd_step)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        norms = np.linalg.norm(x, axis=-1)
        if np.any(np.abs(norms - 1.0) > UNIT_TOL):
            raise ValueError("curvature fields accept unit vectors only")
        return self._raw(x / norms[..., None])

    def _raw(self, x: np.ndarray) -> np.ndarray:
        vals = np.asarray(self.func(x), dtype=float)
        vals = np.broadcast_to(vals, x.shape[:-1]).copy()
        if not np.all(np.isfinite(vals)):
            raise EvaluationError(f"field {self.name!r} returned non-finite values")
        return vals

    def _extended(self, y: np.ndarray) -> np.ndarray:
        # degree-zero homogeneous extension
        return self._raw(y / np.linalg.norm(y, axis=-1, keepdims=True))


def tangent_frame(x) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic orthonormal tangent frame ``(t1, t2)`` at unit vectors ``x``."""
    x = np.asarray(x, dtype=float)
    ref = np.where((np.abs(x[..., 2]) < 0.9)[..., None], E3, E1)
    t1 = np.cross(ref, x)
    t1 /= np.linalg.norm(t1, axis=-1, keepdims=True)
    t2 = np.cross(x, t1)
    return t1, t2


def _prepare(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    norms = np.linalg.norm(x, axis=-1)
    if np.any(np.abs(norms - 1.0) > UNIT_TOL):
        raise ValueError("expected unit vectors")
    return x / norms[..., None]


def _fd_derivatives(field: CurvatureField, x: np.ndarray):
    h = field.fd_step
    t1, t2 = tangent_frame(x)
    F = field._extended
    f0 = F(x)
    fp1, fm1 = F(x + h * t1), F(x - h * t1)
    fp2, fm2 = F(x + h * t2), F(x - h * t2)
    d1 = (fp1 - fm1) / (2 * h)
    d2 = (fp2 - fm2) / (2 * h)
    h11 = (fp1 - 2 * f0 + fm1) / h**2
    h22 = (fp2 - 2 * f0 + fm2) / h**2
    h12 = (F(x + h * (t1 + t2)) - F(x + h * (t1 - t2))
           - F(x - h * (t1 - t2)) + F(x - h * (t1 + t2))) / (4 * h**2)
    grad = d1[..., None] * t1 + d2[..., None] * t2
    hess = np.stack([np.stack([h11, h12], -1), np.stack([h12, h22], -1)], -2)
    return grad, hess, t1, t2


def _analytic_derivatives(field: CurvatureField, x: np.ndarray):
    t1, t2 = tangent_frame(x)
    dF = np.broadcast_to(np.asarray(field.grad(x), dtype=float), x.shape)
    d2F = np.broadcast_to(np.asarray(field.hess(x), dtype=float), x.shape + (3,))
    if not (np.all(np.isfinite(dF)) and np.all(np.isfinite(d2F))):
        raise EvaluationError(f"field {field.name!r} has non-finite derivatives")
    radial = np.einsum("...i,...i->...", x, dF)
    grad = dF - radial[..., None] * x
    T = np.stack([t1, t2], axis=-1)  # (..., 3, 2)
    hess = np.einsum("...ia,...ij,...jb->...ab", T, d2F, T)
    hess = hess - radial[..., None, None] * np.eye(2)
    return grad, hess, t1, t2


def spherical_derivatives(field: CurvatureField, x):
    """Return ``(grad, hess, t1, t2)`` at unit vectors ``x``.

    ``grad`` is the tangent gradient as an ambient vector; ``hess`` is the
    symmetric 2x2 Hessian in the frame ``(t1, t2)`` of :func:`tangent_frame`.
    """
    x = _prepare(x)
    if field.derivative_mode == "analytic":
        return _analytic_derivatives(field, x)
    return _fd_derivatives(field, x)


def grad_s(field: CurvatureField, x) -> np.ndarray:
    """Spherical gradient of ``field`` at ``x`` as a tangent vector in R^3."""
    return spherical_derivatives(field, x)[0]


def hess_s(field: CurvatureField, x) -> np.ndarray:
    """Spherical Hessian in the deterministic tangent frame at ``x``."""
    return spherical_derivatives(field, x)[1]


def hess_s_ambient(field: CurvatureField, x) -> np.ndarray:
    """Spherical Hessian as a 3x3 tensor acting on tangent vectors at ``x``."""
    _, hess, t1, t2 = spherical_derivatives(field, x)
    T = np.stack([t1, t2], axis=-1)
    return np.einsum("...ia,...ab,...jb->...ij", T, hess, T)


def laplace_s(field: CurvatureField, x) -> np.ndarray:
    """Laplace-Beltrami operator of the field on the unit sphere."""
    hess = hess_s(field, x)
    return hess[..., 0, 0] + hess[..., 1, 1]


def estrella_value(field: CurvatureField, x) -> np.ndarray:
    """``3H^2 + det Hess + H Lap - |grad|^2 - Lap^2 / 4`` at ``x``."""
    x = _prepare(x)
    grad, hess, _, _ = spherical_derivatives(field, x)
    H = field._raw(x)
    lap = hess[..., 0, 0] + hess[..., 1, 1]
    det = hess[..., 0, 0] * hess[..., 1, 1] - hess[..., 0, 1] * hess[..., 1, 0]
    g2 = np.einsum("...i,...i->...", grad, grad)
    return 3 * H**2 + det + H * lap - g2 - 0.25 * lap**2


def fibonacci_sphere(n: int, include_axes: bool = True) -> np.ndarray:
    """Quasi-uniform Fibonacci lattice of ``n`` points, plus the six axis points."""
    if n < 1:
        raise ValueError("need at least one sample")
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    phi = np.pi * (3.0 - np.sqrt(5.0)) * i
    pts = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    if include_axes:
        axes = np.vstack([np.eye(3), -np.eye(3)])
        pts = np.vstack([pts, axes])
    return pts


@dataclass
class EstrellaReport:
    min_value: float
    argmin: np.ndarray
    grid_resolution: int
    samples: np.ndarray
    values: np.ndarray
    polished: bool = False

    @property
    def certified(self) -> bool:
        return self.min_value > 0

    @property
    def radius_bound(self) -> float:
        return radius_bound(self.min_value)


def radius_bound(c: float) -> float:
    """Intrinsic radius bound ``2 pi / sqrt(3 c)`` for stable surfaces; inf if c <= 0."""
    return 2 * np.pi / np.sqrt(3 * c) if c > 0 else np.inf


def estrella_constant(field: CurvatureField, resolution: int = 2000,
                      polish: bool = True) -> EstrellaReport:
    """Minimum of :func:`estrella_value` over a Fibonacci sample of the sphere.

    With ``polish`` the best sample is refined by a local minimisation, which
    can only lower the reported minimum.
    """
    if resolution < 8:
        raise ValueError("resolution must be >= 8")
    pts = fibonacci_sphere(resolution)
    vals = estrella_value(field, pts)
    k = int(np.argmin(vals))
    best, best_x = float(vals[k]), pts[k]
    did_polish = False
    if polish:
        t1, t2 = tangent_frame(best_x)

        def chart(p):
            y = best_x + p[0] * t1 + p[1] * t2
            return y / np.linalg.norm(y)

        res = minimize(lambda p: float(estrella_value(field, chart(p))), np.zeros(2),
                       method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-14, "initial_simplex":
                                np.array([[0, 0], [1e-2, 0], [0, 1e-2]])})
        if res.fun < best:
            best, best_x, did_polish = float(res.fun), chart(res.x), True
    return EstrellaReport(best, best_x, resolution, pts, vals, did_polish)


def closure_integral(field: CurvatureField, plane_basis=(E1, E2), nodes: int = 720) -> np.ndarray:
    """Integral of ``xi / H(xi)`` over the great circle spanned by ``plane_basis``.

    The result is expressed in the ``(e1, e2)`` basis.  Composite Simpson rule
    on ``nodes`` (even) intervals.
    """
    e1, e2 = (np.asarray(b, dtype=float) for b in plane_basis)
    if nodes < 2 or nodes % 2:
        raise ValueError("nodes must be a positive even number")
    theta = np.linspace(0.0, 2 * np.pi, nodes + 1)
    xi = np.cos(theta)[:, None] * e1 + np.sin(theta)[:, None] * e2
    H = field(xi)
    if np.min(np.abs(H)) <= 1e-12 or np.any(np.sign(H) != np.sign(H[0])):
        raise VanishingDenominatorError("field vanishes on the great circle")
    integrand = np.column_stack([np.cos(theta), np.sin(theta)]) / H[:, None]
    return simpson(integrand, x=theta, axis=0)


def symmetry_residual(field: CurvatureField, isometry, resolution: int = 2000) -> float:
    """``max |H(Phi x) - H(x)|`` over a sample of the sphere."""
    Phi = np.asarray(isometry, dtype=float)
    if Phi.shape != (3, 3) or np.max(np.abs(Phi.T @ Phi - np.eye(3))) > 1e-10:
        raise ValueError("isometry must be an orthogonal 3x3 matrix")
    pts = fibonacci_sphere(resolution)
    return float(np.max(np.abs(field(pts @ Phi.T) - field(pts))))


def reflection_matrix(normal) -> np.ndarray:
    n = _unit(normal)
    return np.eye(3) - 2 * np.outer(n, n)


def rotation_matrix(axis, angle: float) -> np.ndarray:
    a = _unit(axis)
    K = np.array([[0, -a[2], a[1]], [a[2], 0, -a[0]], [-a[1], a[0], 0]])
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * K @ K


def tag_isometries(tag: dict) -> list[np.ndarray]:
    kind = tag.get("type")
    if kind == "reflection":
        return [reflection_matrix(tag["normal"])]
    if kind == "rotation":
        angles = tag.get("angles") or [0.7, 2.0 * np.pi / 3.0, np.pi, 4.1]
        return [rotation_matrix(tag["axis"], a) for a in angles]
    if kind == "antipodal":
        return [-np.eye(3)]
    raise ValueError(f"unknown symmetry tag {tag!r}")


def validate_symmetries(field: CurvatureField, resolution: int = 2000,
                        tol: float = 1e-10) -> dict:
    """Check every declared symmetry tag; returns ``{index: (residual, ok)}``."""
    out = {}
    for i, tag in enumerate(field.symmetry_tags):
        res = max(symmetry_residual(field, P, resolution) for P in tag_isometries(tag))
        out[i] = (res, res <= tol)
    return out


@dataclass
class PositivityReport:
    min_value: float
    max_value: float
    circle_min: float
    hemisphere_max: float
    item5_holds: bool
    item5_margin: float

    @property
    def positive(self) -> bool:
        return self.min_value > 0

    def as_tuple(self):
        return (self.min_value, self.max_value, self.circle_min)


def positivity_range(field: CurvatureField, resolution: int = 2000,
                     circle_basis=(E1, E2), circle_nodes: int = 720) -> PositivityReport:
    """Extremes of the field and the height-estimate test ``max H < 2 min H|circle``.

    The maximum in the test is taken over the closed hemisphere on the side of
    ``e1 x e2``, the directions toward which the graphs in question are
    oriented.
    """
    e1, e2 = (np.asarray(b, dtype=float) for b in circle_basis)
    v = _unit(np.cross(e1, e2))
    pts = fibonacci_sphere(resolution)
    vals = field(pts)
    theta = np.linspace(0.0, 2 * np.pi, circle_nodes, endpoint=False)
    circ = np.cos(theta)[:, None] * e1 + np.sin(theta)[:, None] * e2
    cvals = field(circ)
    upper = pts @ v >= 0
    hemi_max = float(max(np.max(vals[upper]), np.max(cvals)))
    cmin = float(np.min(cvals))
    margin = 2 * cmin - hemi_max
    return PositivityReport(float(min(vals.min(), cmin)), float(max(vals.max(), cvals.max())),
                            cmin, hemi_max, bool(margin > 0), float(margin))


# ---------------------------------------------------------------- built-ins

def constant_field(H0: float, derivative_mode: str = "analytic", **kw) -> CurvatureField:
    H0 = float(H0)

    def h(t):
        return np.full_like(np.asarray(t, dtype=float), H0)

    def dh(t):
        return np.zeros_like(np.asarray(t, dtype=float))

    return CurvatureField(
        func=lambda x: np.full(np.shape(x)[:-1], H0),
        grad=lambda x: np.zeros(np.shape(x)),
        hess=lambda x: np.zeros(np.shape(x) + (3,)),
        derivative_mode=derivative_mode, name="constant", params={"H0": H0},
        symmetry_tags=kw.pop("symmetry_tags", ({"type": "antipodal"},)),
        zonal=(h, dh, E3.copy()), **kw,
    )


def linear_field(a: float = 1.0, b: float = 0.0, v=E3, derivative_mode: str = "analytic",
                 **kw) -> CurvatureField:
    """``a <x, v> + b``; with ``a = 1, b = 0, v = e3`` this is the translating-soliton field."""
    v = _unit(v)
    a, b = float(a), float(b)
    return CurvatureField(
        func=lambda x: a * (np.asarray(x) @ v) + b,
        grad=lambda x: np.broadcast_to(a * v, np.shape(x)),
        hess=lambda x: np.zeros(np.shape(x) + (3,)),
        derivative_mode=derivative_mode, name="linear",
        params={"a": a, "b": b, "v": v.tolist()},
        symmetry_tags=kw.pop("symmetry_tags", ({"type": "rotation", "axis": v.tolist()},)),
        zonal=(lambda t: a * np.asarray(t) + b, lambda t: np.full_like(np.asarray(t, float), a), v),
        **kw,
    )


def zonal_field(h: Callable, dh: Callable | None = None, d2h: Callable | None = None,
                axis=E3, derivative_mode: str | None = None, name: str = "zonal",
                params: dict | None = None, **kw) -> CurvatureField:
    """Field ``h(<x, axis>)`` built from a one-variable profile ``h`` on [-1, 1]."""
    v = _unit(axis)
    mode = derivative_mode or ("analytic" if dh is not None and d2h is not None else "fd")
    grad = hess = None
    if dh is not None and d2h is not None:
        def grad(x):
            return dh(np.asarray(x) @ v)[..., None] * v

        def hess(x):
            return d2h(np.asarray(x) @ v)[..., None, None] * np.outer(v, v)

    if dh is None:
        def dh(t, _h=h):
            t = np.asarray(t, dtype=float)
            e = 1e-6
            return (_h(t + e) - _h(t - e)) / (2 * e)

    return CurvatureField(
        func=lambda x: h(np.asarray(x) @ v), grad=grad, hess=hess, derivative_mode=mode,
        name=name, params=params or {},
        symmetry_tags=kw.pop("symmetry_tags", ({"type": "rotation", "axis": v.tolist()},)),
        zonal=(h, dh, v), **kw,
    )


def zonal_poly_field(coefficients: Sequence[float], axis=E3,
                     derivative_mode: str = "analytic", **kw) -> CurvatureField:
    """``sum_k c_k t^k`` with ``t = <x, axis>`` (coefficients in increasing degree)."""
    P = np.polynomial.Polynomial(np.asarray(coefficients, dtype=float))
    dP, d2P = P.deriv(1), P.deriv(2)
    tags = [{"type": "rotation", "axis": _unit(axis).tolist()}]
    c = np.asarray(coefficients, dtype=float)
    if np.all(c[1::2] == 0):
        tags.append({"type": "antipodal"})
        tags.append({"type": "reflection", "normal": _unit(axis).tolist()})
    return zonal_field(P, dP, d2P, axis=axis, derivative_mode=derivative_mode,
                       name="zonal-poly",
                       params={"coefficients": c.tolist(), "axis": _unit(axis).tolist()},
                       symmetry_tags=kw.pop("symmetry_tags", tuple(tags)), **kw)


def sampled_field(colatitude, longitude, values, **kw) -> CurvatureField:
    """Field interpolated from samples on a latitude-longitude grid.

    ``colatitude`` must lie strictly inside (0, pi) and ``longitude`` inside
    [0, 2 pi); the interpolant is a smooth bicubic spline on the sphere, and
    derivatives are always taken by finite differences.
    """
    from scipy.interpolate import RectSphereBivariateSpline

    colat = np.asarray(colatitude, dtype=float)
    lon = np.asarray(longitude, dtype=float)
    vals = np.asarray(values, dtype=float)
    spline = RectSphereBivariateSpline(colat, lon, vals)

    def func(x):
        x = np.asarray(x, dtype=float)
        th = np.arccos(np.clip(x[..., 2], -1.0, 1.0))
        ph = np.mod(np.arctan2(x[..., 1], x[..., 0]), 2 * np.pi)
        return spline.ev(th.ravel(), ph.ravel()).reshape(x.shape[:-1])

    return CurvatureField(func=func, derivative_mode="fd", kind="sampled", name="sampled",
                          params={"shape": list(vals.shape)}, **kw)


FORMULAS = {
    "constant": lambda p: constant_field(p.get("H0", 1.0)),
    "linear": lambda p: linear_field(p.get("a", 1.0), p.get("b", 0.0), p.get("v", E3)),
    "zonal-poly": lambda p: zonal_poly_field(p["coefficients"], p.get("axis", E3)),
}


def field_from_spec(spec: dict) -> CurvatureField:
    """Build a field from its JSON description (see ``hsurflab.config``)."""
    kind = spec.get("kind", "analytic")
    tags = tuple(spec.get("symmetry_tags", ()))
    if kind == "sampled":
        g = spec["grid"]
        fld = sampled_field(g["colatitude"], g["longitude"], g["values"], symmetry_tags=tags)
    else:
        formula = spec["formula"]
        if formula not in FORMULAS:
            raise ValueError(f"unknown formula id {formula!r}")
        fld = FORMULAS[formula](spec.get("params", {}))
        if tags:
            fld = replace(fld, symmetry_tags=tags)
    mode = spec.get("derivative_mode")
    if mode and mode != fld.derivative_mode:
        fld = fld.with_mode(mode)
    return fld
