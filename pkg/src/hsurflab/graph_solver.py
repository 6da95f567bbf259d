"""Dirichlet problem for graphs of prescribed mean curvature on masked grids.

For a graph ``z = u(x, y)`` with upward unit normal ``Z_u = (-Du, 1) / W``,
``W = sqrt(1 + |Du|^2)``, the prescribed-curvature condition is

    div(Du / W) = 2 H(Z_u).

The divergence is discretised in flux form on a uniform grid: on each edge
the normal derivative is a one-sided difference and the tangential one the
average of the two adjacent centred differences, which keeps the scheme
second order and its Jacobian compact (9-point).  ``Z_u`` at a node uses
centred differences.  Downward orientation is solved as the upward problem for
the reflected field ``x -> -H(-x)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field as dfield

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy import ndimage
from scipy.spatial import ConvexHull, QhullError

from hsurflab.errors import DiscretizationError, NonConvergenceError
from hsurflab.sphere_field import CurvatureField, grad_s, positivity_range
from hsurflab.surface import DiscreteSurface, ParamGrid

log = logging.getLogger(__name__)

DIM = 2
SOLVER_TOL = 1e-9
DIRECT_LIMIT = 250_000
NEIGHBOURS8 = [(a, b) for a in (-1, 0, 1) for b in (-1, 0, 1) if (a, b) != (0, 0)]


@dataclass
class GridDomain:
    """Uniform grid with interior nodes and Dirichlet boundary nodes.

    Node ``(i, j)`` sits at ``(x0 + i h, y0 + j h)``.  Boundary nodes are the
    8-neighbours of interior nodes that are not interior themselves; ``g``
    holds their values (NaN elsewhere).
    """

    h: float
    origin: tuple
    interior: np.ndarray
    boundary: np.ndarray
    g: np.ndarray
    name: str = "domain"
    params: dict = dfield(default_factory=dict)

    def __post_init__(self):
        self.interior = np.asarray(self.interior, dtype=bool)
        self.boundary = np.asarray(self.boundary, dtype=bool)
        self.validate()

    @property
    def shape(self):
        return self.interior.shape

    @property
    def nx(self):
        return self.shape[0]

    @property
    def ny(self):
        return self.shape[1]

    @property
    def bounding_box(self):
        x0, y0 = self.origin
        return (x0, x0 + (self.nx - 1) * self.h, y0, y0 + (self.ny - 1) * self.h)

    def coords(self):
        x0, y0 = self.origin
        x = x0 + self.h * np.arange(self.nx)
        y = y0 + self.h * np.arange(self.ny)
        return np.meshgrid(x, y, indexing="ij")

    def validate(self):
        if not self.interior.any():
            raise ValueError("domain has no interior nodes")
        if np.any(self.interior & self.boundary):
            raise ValueError("interior and boundary overlap")
        # every interior node needs its 8 neighbours inside the grid and in the mask
        pad = np.pad(self.interior | self.boundary, 1)
        inner = np.pad(self.interior, 1)
        for a, b in NEIGHBOURS8:
            shifted = np.roll(np.roll(pad, -a, 0), -b, 1)
            if np.any(inner & ~shifted):
                raise ValueError("interior node with a neighbour outside the mask")
        if not np.all(np.isfinite(self.g[self.boundary])):
            raise ValueError("boundary values must be finite")

    def with_boundary(self, g) -> "GridDomain":
        """Same mask with new boundary data (callable of (x, y), array or scalar)."""
        return GridDomain(self.h, self.origin, self.interior, self.boundary,
                          _boundary_values(self, g), self.name, dict(self.params))


def _boundary_values(dom, g):
    X, Y = dom.coords()
    out = np.full(dom.shape, np.nan)
    if callable(g):
        out[dom.boundary] = np.asarray(g(X[dom.boundary], Y[dom.boundary]), dtype=float)
    else:
        g = np.asarray(g, dtype=float)
        out[dom.boundary] = g if g.ndim == 0 else g[dom.boundary]
    return out


def domain_from_mask(inside: np.ndarray, h: float, origin, g=0.0, name="masked",
                     params=None) -> GridDomain:
    """Interior = ``inside``; boundary = its 8-neighbours outside."""
    inside = np.asarray(inside, dtype=bool)
    ring = ndimage.binary_dilation(inside, structure=np.ones((3, 3), bool)) & ~inside
    dom = GridDomain.__new__(GridDomain)
    dom.h, dom.origin, dom.interior, dom.boundary = float(h), tuple(origin), inside, ring
    dom.name, dom.params = name, dict(params or {})
    dom.g = _boundary_values(dom, g)
    dom.validate()
    return dom


def _grid_for_box(xmin, xmax, ymin, ymax, h, pad=2):
    nx = int(np.ceil((xmax - xmin) / h - 1e-9)) + 1 + 2 * pad
    ny = int(np.ceil((ymax - ymin) / h - 1e-9)) + 1 + 2 * pad
    origin = (xmin - pad * h, ymin - pad * h)
    x = origin[0] + h * np.arange(nx)
    y = origin[1] + h * np.arange(ny)
    X, Y = np.meshgrid(x, y, indexing="ij")
    return X, Y, origin


def disk_domain(R: float, h: float, center=(0.0, 0.0), g=0.0) -> GridDomain:
    """Nodes strictly inside the disk; boundary nodes are the stair-step ring outside."""
    cx, cy = center
    X, Y, origin = _grid_for_box(cx - R, cx + R, cy - R, cy + R, h)
    inside = (X - cx) ** 2 + (Y - cy) ** 2 < R * R * (1 - 1e-12)
    return domain_from_mask(inside, h, origin, g, "disk", {"R": R, "center": list(center)})


def rectangle_domain(xmin, xmax, ymin, ymax, h: float, g=0.0) -> GridDomain:
    """Nodes on the closed rectangle; its outer ring is the boundary."""
    nx = int(round((xmax - xmin) / h)) + 1
    ny = int(round((ymax - ymin) / h)) + 1
    if abs((nx - 1) * h - (xmax - xmin)) > 1e-9 * h or abs((ny - 1) * h - (ymax - ymin)) > 1e-9 * h:
        raise ValueError("rectangle sides must be multiples of h")
    inside = np.zeros((nx, ny), dtype=bool)
    inside[1:-1, 1:-1] = True
    return domain_from_mask(inside, h, (xmin, ymin), g, "rectangle",
                            {"box": [xmin, xmax, ymin, ymax]})


def two_disk_domain(R: float, separation: float, h: float, g=0.0) -> GridDomain:
    """Two disjoint disks of radius ``R`` centred at ``(+-separation/2, 0)``."""
    if separation <= 2 * R + 2 * h:
        raise ValueError("disks must be separated by more than two grid cells")
    c = separation / 2
    X, Y, origin = _grid_for_box(-c - R, c + R, -R, R, h)
    inside = ((X - c) ** 2 + Y**2 < R * R) | ((X + c) ** 2 + Y**2 < R * R)
    return domain_from_mask(inside, h, origin, g, "two-disk", {"R": R, "separation": separation})


def domain_from_spec(spec: dict) -> GridDomain:
    """Build a domain from its JSON description."""
    from hsurflab.config import boundary_function

    g = boundary_function(spec.get("boundary", {"formula": "zero"}))
    kind = spec["kind"]
    h = float(spec["h"])
    if kind == "disk":
        return disk_domain(spec["R"], h, tuple(spec.get("center", (0.0, 0.0))), g)
    if kind == "rectangle":
        return rectangle_domain(*spec["box"], h, g)
    if kind == "two-disk":
        return two_disk_domain(spec["R"], spec["separation"], h, g)
    raise ValueError(f"unknown domain kind {kind!r}")


# ------------------------------------------------------------------ solution

@dataclass
class GraphSolution:
    domain: GridDomain
    u: np.ndarray  # full grid, NaN outside interior and boundary
    field: CurvatureField
    orientation: str
    residual_norm: float
    newton_iterations: int
    history: list = dfield(default_factory=list)
    lambdas: list = dfield(default_factory=list)

    def __post_init__(self):
        self._derived()

    def _derived(self):
        dom, U, h = self.domain, self.u, self.domain.h
        m = dom.interior
        c = U[1:-1, 1:-1]
        ux = np.full_like(U, np.nan)
        uy, uxx, uyy, uxy = (np.full_like(U, np.nan) for _ in range(4))
        ux[1:-1, 1:-1] = (U[2:, 1:-1] - U[:-2, 1:-1]) / (2 * h)
        uy[1:-1, 1:-1] = (U[1:-1, 2:] - U[1:-1, :-2]) / (2 * h)
        uxx[1:-1, 1:-1] = (U[2:, 1:-1] - 2 * c + U[:-2, 1:-1]) / h**2
        uyy[1:-1, 1:-1] = (U[1:-1, 2:] - 2 * c + U[1:-1, :-2]) / h**2
        uxy[1:-1, 1:-1] = (U[2:, 2:] - U[2:, :-2] - U[:-2, 2:] + U[:-2, :-2]) / (4 * h * h)
        for a in (ux, uy, uxx, uyy, uxy):
            a[~m] = np.nan
        self.ux, self.uy, self.uxx, self.uyy, self.uxy = ux, uy, uxx, uyy, uxy
        W = np.sqrt(1 + ux**2 + uy**2)
        self.W = W
        self.Z = np.stack([-ux / W, -uy / W, 1 / W], -1)
        self.sign = 1.0 if self.orientation == "up" else -1.0
        self.eta = self.sign * self.Z
        div = np.full_like(U, np.nan)
        div[m] = _divergence(U, dom, np.nonzero(m))
        self.H = self.sign * div / 2
        self.K = (uxx * uyy - uxy**2) / W**4
        gxx, gxy, gyy = 1 + ux**2, ux * uy, 1 + uy**2
        H_fd = ((gyy * uxx - 2 * gxy * uxy + gxx * uyy) / (W**2 * W)) / 2
        self.H_second_differences = self.sign * H_fd
        self.sigma2 = np.maximum(4 * H_fd**2 - 2 * self.K, 0.0)
        self.sigma = np.sqrt(self.sigma2)

    @property
    def max_height(self) -> float:
        return float(np.nanmax(np.abs(self.u[self.domain.interior])))

    def interior_values(self, arr) -> np.ndarray:
        return arr[self.domain.interior]

    def curvature_residual(self) -> np.ndarray:
        """``H_graph - H(eta)`` at interior nodes (the solver residual divided by 2)."""
        m = self.domain.interior
        return self.H[m] - self.field(self.eta[m])

    def diagnostics(self) -> dict:
        return {"residual": self.residual_norm, "iterations": self.newton_iterations,
                "max_height": self.max_height, "orientation": self.orientation,
                "h": self.domain.h, "unknowns": int(self.domain.interior.sum())}


def _edge_terms(U, h, P, e, t):
    """Flux through the edge ``P -> P+e`` and its partials.

    Returns ``F, F_p, F_q`` and the node offsets entering ``p`` and ``q``.
    """
    i, j = P
    ex, ey = e
    tx, ty = t
    ua = U[i, j]
    ub = U[i + ex, j + ey]
    q = (U[i + tx, j + ty] + U[i + ex + tx, j + ey + ty]
         - U[i - tx, j - ty] - U[i + ex - tx, j + ey - ty]) / (4 * h)
    p = (ub - ua) / h
    W2 = 1 + p * p + q * q
    W = np.sqrt(W2)
    W3 = W2 * W
    return p / W, (1 + q * q) / W3, -p * q / W3


def _divergence(U, dom, nodes):
    i, j = nodes
    h = dom.h
    out = 0.0
    for e, t in (((1, 0), (0, 1)), ((0, 1), (1, 0))):
        Fp, _, _ = _edge_terms(U, h, (i, j), e, t)
        Fm, _, _ = _edge_terms(U, h, (i - e[0], j - e[1]), e, t)
        out = out + (Fp - Fm) / h
    return out


class _Problem:
    """Residual and Jacobian of the discrete graph equation on a domain."""

    def __init__(self, field: CurvatureField, dom: GridDomain, orientation: str):
        self.field, self.dom = field, dom
        self.sign = 1.0 if orientation == "up" else -1.0
        self.nodes = np.nonzero(dom.interior)
        self.n = len(self.nodes[0])
        self.idx = np.full(dom.shape, -1, dtype=np.int64)
        self.idx[dom.interior] = np.arange(self.n)
        self.base = np.where(dom.boundary, dom.g, 0.0)

    def harmonic_start(self):
        """Discrete harmonic extension of the boundary data (5-point Laplacian)."""
        i, j = self.nodes
        rows, cols, vals = [], [], []
        rhs = np.zeros(self.n)
        me = np.arange(self.n)
        rows.append(me), cols.append(me), vals.append(np.full(self.n, -4.0))
        for a, b in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            col = self.idx[i + a, j + b]
            ok = col >= 0
            rows.append(me[ok]), cols.append(col[ok]), vals.append(np.ones(ok.sum()))
            rhs[~ok] -= self.base[i[~ok] + a, j[~ok] + b]
        A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(self.n, self.n))
        return _linear_solve(A, rhs)

    def full(self, x):
        U = self.base.copy()
        U[self.nodes] = x
        return U

    def _source(self, U, want_grad):
        i, j = self.nodes
        h = self.dom.h
        ux = (U[i + 1, j] - U[i - 1, j]) / (2 * h)
        uy = (U[i, j + 1] - U[i, j - 1]) / (2 * h)
        W = np.sqrt(1 + ux * ux + uy * uy)
        Z = np.stack([-ux / W, -uy / W, 1 / W], -1)
        # solve the upward problem for x -> sign * H(sign * x)
        Hs = self.sign * self.field(self.sign * Z)
        if not want_grad:
            return Hs, None, None
        G = grad_s(self.field, self.sign * Z)  # sign^2 = 1 in the chain rule
        return Hs, -G[:, 0] / W, -G[:, 1] / W

    def residual(self, x, lam):
        U = self.full(x)
        Hs, _, _ = self._source(U, False)
        return _divergence(U, self.dom, self.nodes) - DIM * lam * Hs

    def jacobian(self, x, lam):
        U = self.full(x)
        h = self.dom.h
        i, j = self.nodes
        rows, cols, vals = [], [], []
        me = np.arange(self.n)

        def add(di, dj, w):
            col = self.idx[i + di, j + dj]
            ok = col >= 0
            rows.append(me[ok])
            cols.append(col[ok])
            vals.append(w[ok])

        for e, t in (((1, 0), (0, 1)), ((0, 1), (1, 0))):
            for sgn, P in ((1.0, (0, 0)), (-1.0, (-e[0], -e[1]))):
                _, Fp, Fq = _edge_terms(U, h, (i + P[0], j + P[1]), e, t)
                cp = sgn * Fp / h**2
                cq = sgn * Fq / (4 * h**2)
                add(P[0] + e[0], P[1] + e[1], cp)
                add(P[0], P[1], -cp)
                add(P[0] + t[0], P[1] + t[1], cq)
                add(P[0] + e[0] + t[0], P[1] + e[1] + t[1], cq)
                add(P[0] - t[0], P[1] - t[1], -cq)
                add(P[0] + e[0] - t[0], P[1] + e[1] - t[1], -cq)
        _, dHx, dHy = self._source(U, True)
        c = -DIM * lam / (2 * h)
        add(1, 0, c * dHx)
        add(-1, 0, -c * dHx)
        add(0, 1, c * dHy)
        add(0, -1, -c * dHy)
        return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(self.n, self.n))


def _linear_solve(J, r):
    if J.shape[0] <= DIRECT_LIMIT:
        return spla.spsolve(J.tocsc(), r)
    ilu = spla.spilu(J.tocsc(), drop_tol=1e-5, fill_factor=20)
    M = spla.LinearOperator(J.shape, ilu.solve)
    sol, info = spla.gmres(J, r, M=M, rtol=1e-10, restart=100, maxiter=2000)
    if info != 0:
        raise NonConvergenceError("Krylov solve did not converge")
    return sol


def _newton(prob, x, lam, tol, max_iter, history):
    r = prob.residual(x, lam)
    norm = float(np.max(np.abs(r)))
    it = 0
    while norm > tol:
        if it >= max_iter:
            raise NonConvergenceError(f"Newton did not converge at lambda={lam:.3g} "
                                      f"(residual {norm:.3e})", prob.full(x), history)
        J = prob.jacobian(x, lam)
        with np.errstate(all="ignore"):
            dx = _linear_solve(J, -r)
        if not np.all(np.isfinite(dx)):
            raise NonConvergenceError("singular Newton system", prob.full(x), history)
        f0 = float(r @ r)
        t = 1.0
        while True:
            xt = x + t * dx
            with np.errstate(all="ignore"):
                rt = prob.residual(xt, lam)
            ft = float(rt @ rt) if np.all(np.isfinite(rt)) else np.inf
            if ft <= (1 - 1e-4 * t) * f0 or float(np.max(np.abs(rt))) <= tol:
                break
            t *= 0.5
            if t < 1e-8:
                raise NonConvergenceError(
                    f"line search stagnated at lambda={lam:.3g} (residual {norm:.3e})",
                    prob.full(x), history)
        x, r = xt, rt
        norm = float(np.max(np.abs(r)))
        it += 1
        history.append({"lambda": lam, "residual": norm, "step": t})
    return x, it


def solve_dirichlet(field: CurvatureField, domain: GridDomain, init="zero",
                    orientation: str = "up", tol: float = SOLVER_TOL,
                    continuation_steps: int = 5, max_iter: int = 50) -> GraphSolution:
    """Solve the prescribed-curvature graph equation with Dirichlet data.

    Parameters
    ----------
    field : the prescribed curvature.
    domain : grid domain with boundary values.
    init : ``"zero"`` for a cold start (harmonic extension of the boundary
        data, then continuation in ``lambda H`` from the minimal-surface
        problem) or a full grid array to start Newton directly at
        ``lambda = 1``.
    orientation : ``"up"`` or ``"down"``; the graph is ``H``-graph for the
        normal with positive or negative last component.
    tol : max-norm tolerance on the discrete residual.
    continuation_steps : number of equal ``lambda`` steps (at most 10).

    Raises
    ------
    NonConvergenceError
        When a Newton stage stagnates; the error carries the last iterate.
        For domains too large for the field this is the expected outcome.
    """
    if orientation not in ("up", "down"):
        raise ValueError("orientation must be 'up' or 'down'")
    if not 1 <= continuation_steps <= 10:
        raise ValueError("continuation uses between 1 and 10 steps")
    prob = _Problem(field, domain, orientation)
    history, lambdas, iters = [], [], 0
    if isinstance(init, str):
        if init != "zero":
            raise ValueError("init must be 'zero' or an array")
        x = prob.harmonic_start()
        schedule = [0.0] + list(np.linspace(0, 1, continuation_steps + 1)[1:])
    else:
        x = np.asarray(init, dtype=float)[domain.interior].copy()
        schedule = [1.0]
    for lam in schedule:
        stage_tol = tol if lam == 1.0 else max(tol, 1e-8)
        try:
            x, k = _newton(prob, x, float(lam), stage_tol, max_iter, history)
        except NonConvergenceError as exc:
            exc.history = history
            raise
        iters += k
        lambdas.append(float(lam))
    res = float(np.max(np.abs(prob.residual(x, 1.0))))
    return GraphSolution(domain, _mask_outside(prob.full(x), domain), field, orientation,
                         res, iters, history, lambdas)


def _mask_outside(U, dom):
    U = U.copy()
    U[~(dom.interior | dom.boundary)] = np.nan
    return U


# ------------------------------------------------------------ experiments

def soliton_residual(sol: GraphSolution, b: float = 0.0) -> np.ndarray:
    """Signed weighted-mean-curvature residual ``H_phi - 2 b`` at interior nodes.

    With density ``phi(x) = 2 <x, e3>``, ``H_phi = 2 H - <eta, D phi>``.  For
    a graph solved with ``H(x) = <x, e3> + b`` this equals ``2 b``.
    """
    m = sol.domain.interior
    H_phi = DIM * sol.H[m] - DIM * sol.eta[m][:, 2]
    return H_phi - DIM * b


def level_set_components(sol: GraphSolution, t: float) -> list:
    """Connected pieces of ``{|u| >= t}`` (8-connectivity) and their diameters."""
    dom = sol.domain
    valid = dom.interior | dom.boundary
    sel = valid & (np.abs(np.nan_to_num(sol.u)) >= t)
    labels, count = ndimage.label(sel, structure=np.ones((3, 3), bool))
    X, Y = dom.coords()
    out = []
    for k in range(1, count + 1):
        pts = np.column_stack([X[labels == k], Y[labels == k]])
        out.append((labels == k, _diameter(pts)))
    return out


def _diameter(pts) -> float:
    if len(pts) < 2:
        return 0.0
    cand = pts
    if len(pts) > 3:
        try:
            cand = pts[ConvexHull(pts).vertices]
        except QhullError:
            cand = pts
    d = cand[:, None, :] - cand[None, :, :]
    return float(np.sqrt(np.max(np.sum(d * d, axis=-1))))


@dataclass
class HeightTable:
    sizes: list
    heights: list  # NaN where the solve failed
    converged: list
    supremum: list  # running supremum of the converged heights
    saturated: bool
    item5: dict
    errors: list

    def rows(self):
        return list(zip(self.sizes, self.heights, self.converged, self.supremum))


def rotational_height(field: CurvatureField, R: float, orientation: str = "up",
                      step: float = 1e-3):
    """Height of the graph over the disk of radius ``R`` with constant boundary data,
    for a field zonal about the vertical axis.

    The Dirichlet solution is unique, so it is rotationally symmetric and equals
    the pole profile of the rotational ODE cut at ``x = R``.  The profile is
    followed until its tangent turns vertical; past that radius no graph exists.

    Returns
    -------
    height : float, NaN when no graph exists.
    limit : the height where the tangent turns vertical (the supremum over all
        solvable disks), and the radius ``x_max`` where that happens.
    """
    from scipy.interpolate import CubicHermiteSpline
    from scipy.optimize import brentq

    from hsurflab.rotational import integrate_profile

    if field.zonal is None:
        raise ValueError("rotational heights need a zonal field")
    h, dh, v = field.zonal
    if abs(abs(v[2]) - 1) > 1e-12:
        raise ValueError("rotational heights need the zonal axis to be vertical")
    if orientation not in ("up", "down"):
        raise ValueError("orientation must be 'up' or 'down'")
    # flipping z turns the downward problem into a bowl whose field is h(-t)
    c = float(np.sign(v[2])) * (1.0 if orientation == "up" else -1.0)
    if not h(c) > 0:
        raise ValueError("rotational heights need positive curvature at the lowest point")
    prof = integrate_profile((lambda t: h(c * t), lambda t: c * dh(c * t)), "pole",
                             s_max=max(20.0, 20.0 * R), step=step, stop_theta=np.pi / 2)
    if prof.end_reason != "stop_theta":
        raise NonConvergenceError(f"profile did not turn vertical ({prof.end_reason})")
    if np.any(np.cos(prof.theta) < 0):
        raise NonConvergenceError("profile left the graph range before turning vertical")
    x_max, z_lim = float(prof.x[-1]), float(prof.z[-1])
    limit = {"x_max": x_max, "height": z_lim}
    if R > x_max * (1 + 1e-9):
        return float("nan"), limit
    if R >= x_max:
        return z_lim, limit
    xs = CubicHermiteSpline(prof.s, prof.x, np.cos(prof.theta))
    zs = CubicHermiteSpline(prof.s, prof.z, np.sin(prof.theta))
    k = int(np.searchsorted(prof.x, R))
    s_R = brentq(lambda t: xs(t) - R, prof.s[max(k - 1, 0)], prof.s[k], xtol=1e-15)
    return float(zs(s_R)), limit


def height_experiment(field: CurvatureField, radii, h, orientation: str = "up",
                      saturation_tol: float = 1e-4, method: str = "grid",
                      **solve_kw) -> HeightTable:
    """Solve over disks of growing radius with zero boundary data.

    ``h`` is the grid spacing, or a callable giving the spacing for a radius.
    ``method="rotational"`` uses :func:`rotational_height` instead of the grid
    solver (fields zonal about the vertical axis only); its supremum past the
    last solvable radius is the height where the profile turns vertical.

    Nonconvergence on a disk is recorded (it signals that no graph exists)
    and the running supremum of the heights is carried forward.
    """
    if method not in ("grid", "rotational"):
        raise ValueError("method must be 'grid' or 'rotational'")
    rep = positivity_range(field)
    item5 = {"holds": rep.item5_holds, "margin": rep.item5_margin,
             "hemisphere_max": rep.hemisphere_max, "circle_min": rep.circle_min}
    heights, conv, sup, errs = [], [], [], []
    best = 0.0
    for R in radii:
        if method == "rotational":
            val, limit = rotational_height(field, R, orientation)
            ok = bool(np.isfinite(val))
            heights.append(val)
            conv.append(ok)
            errs.append(None if ok else f"no graph beyond radius {limit['x_max']:.6g}")
            best = max(best, val if ok else limit["height"])
            sup.append(best)
            continue
        try:
            hR = h(R) if callable(h) else h
            sol = solve_dirichlet(field, disk_domain(R, hR), orientation=orientation, **solve_kw)
            heights.append(sol.max_height)
            conv.append(True)
            errs.append(None)
            best = max(best, sol.max_height)
        except NonConvergenceError as exc:
            log.info("no graph over the disk of radius %g: %s", R, exc)
            heights.append(float("nan"))
            conv.append(False)
            errs.append(str(exc))
        sup.append(best)
    saturated = len(sup) >= 2 and sup[-1] - sup[-2] < saturation_tol
    return HeightTable(list(map(float, radii)), heights, conv, sup, saturated, item5, errs)


def graph_surface(sol: GraphSolution) -> DiscreteSurface:
    """Interior nodes of a solved graph as a :class:`DiscreteSurface`.

    Embedding derivatives come from centred differences of ``u``.  Vertices
    whose 3x3 neighbourhood leaves the interior are the Dirichlet boundary of
    the surface.  For downward orientation the parameters are swapped so the
    grid normal points down.
    """
    dom = sol.domain
    X, Y = dom.coords()
    down = sol.orientation == "down"
    tr = (lambda a: np.swapaxes(a, 0, 1)) if down else (lambda a: a)
    mask = tr(dom.interior)
    h = dom.h
    grid = ParamGrid(mask, (h, h), order=2)
    sel = lambda a: tr(a)[mask]
    x, y, u = sel(X), sel(Y), sel(sol.u)
    ux, uy, uxx, uxy, uyy = (sel(a) for a in (sol.ux, sol.uy, sol.uxx, sol.uxy, sol.uyy))
    zero, one = np.zeros_like(x), np.ones_like(x)
    r = np.column_stack([x, y, u])
    r_x = np.column_stack([one, zero, ux])
    r_y = np.column_stack([zero, one, uy])
    r_xx = np.column_stack([zero, zero, uxx])
    r_xy = np.column_stack([zero, zero, uxy])
    r_yy = np.column_stack([zero, zero, uyy])
    if down:
        args = (r, r_y, r_x, r_yy, r_xy, r_xx)
    else:
        args = (r, r_x, r_y, r_xx, r_xy, r_yy)
    surf = DiscreteSurface(grid, *args, kind="graph",
                           meta={"h": h, "orientation": sol.orientation})
    if np.any(np.abs(surf.normal - np.column_stack([sel(sol.eta[..., k]) for k in range(3)])) > 1e-12):
        raise DiscretizationError("graph surface normal disagrees with the solution")
    return surf


def curvature_diagnostic(sol: GraphSolution, surface: DiscreteSurface | None = None):
    """``sup |sigma(p)| d(p, boundary)`` over interior nodes, and where it is attained."""
    surf = surface or graph_surface(sol)
    d = surf.geodesic_distance(surf.boundary)
    sig = np.sqrt(np.maximum(surf.sigma2, 0.0))
    val = np.where(surf.interior, sig * d, 0.0)
    k = int(np.argmax(val))
    return float(val[k]), surf.r[k]
