"""Linearised prescribed-curvature operator on discrete surfaces.

On a surface with normal ``eta`` the operator is

    L f = Lap f + <X, grad f> + |sigma|^2 f,   X = 2 grad_S H(eta),

and for every fixed vector ``a`` the normal component ``<eta, a>`` is a Jacobi
field (``L <eta, a> = 0``).  The module assembles ``L`` with Dirichlet rows on
boundary vertices, computes the principal eigenvalue of ``-L``, evaluates the
weighted symmetrisation ``Q = q - div X / 2 - |X|^2 / 4`` and the estrella
machinery that bounds the intrinsic radius of stable surfaces.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field as dfield

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from hsurflab.errors import HSurfError, MeshError
from hsurflab.sphere_field import (
    CurvatureField, estrella_constant, grad_s, hess_s_ambient, radius_bound,
)
from hsurflab.surface import DiscreteSurface

DIM = 2
EIG_TOL = 1e-8
AXES = np.eye(3)


@dataclass
class StabilityOperator:
    """Assembled operator; rows of boundary vertices are the identity."""

    matrix: sp.csr_matrix
    laplacian: sp.csr_matrix
    advection: sp.csr_matrix
    potential: np.ndarray  # |sigma|^2
    X: np.ndarray  # ambient advection field
    interior: np.ndarray

    @property
    def interior_block(self) -> sp.csr_matrix:
        idx = np.nonzero(self.interior)[0]
        return self.matrix[idx][:, idx].tocsr()

    def apply(self, f: np.ndarray) -> np.ndarray:
        """``L f`` on interior vertices (boundary values enter as data)."""
        return self._rows @ f

    @property
    def _rows(self):
        return (self.laplacian + self.advection + sp.diags(self.potential)).tocsr()


def advection_field(surface: DiscreteSurface, field: CurvatureField) -> np.ndarray:
    """``X = 2 grad_S H(eta)``, tangent to the surface since ``T_p = T_eta S^2``."""
    return DIM * grad_s(field, surface.normal)


def assemble_stability_operator(surface: DiscreteSurface, field: CurvatureField) -> StabilityOperator:
    """Sparse ``L`` on the vertex set; boundary rows are Dirichlet (identity)."""
    lap = surface.laplacian_matrix()
    X = advection_field(surface, field)
    adv = surface.advection_matrix(X) if np.any(X) else sp.csr_matrix(lap.shape)
    q = surface.sigma2
    full = (lap + adv + sp.diags(q)).tolil()
    bnd = np.nonzero(~surface.interior)[0]
    if bnd.size:
        full[bnd, :] = 0
        full[bnd, bnd] = 1.0
    return StabilityOperator(full.tocsr(), lap, adv.tocsr(), q, X, surface.interior.copy())


def jacobi_residual(surface: DiscreteSurface, field: CurvatureField, axis,
                    op: StabilityOperator | None = None) -> float:
    """``max |L <eta, a>|`` over interior vertices."""
    op = op or assemble_stability_operator(surface, field)
    nu = surface.normal @ np.asarray(axis, dtype=float)
    return float(np.max(np.abs(op.apply(nu)[surface.interior])))


@dataclass
class EigenResult:
    lambda0: float
    psi: np.ndarray  # over the region, normalised to max 1
    residual: float
    sign_definite: bool
    converged: bool
    iterations: int
    shifts: list = dfield(default_factory=list)

    @property
    def status(self) -> str:
        return "ok" if self.converged and self.sign_definite else "indeterminate"


def principal_eigenvalue(op: StabilityOperator | sp.spmatrix, region=None, tol: float = EIG_TOL,
                         max_iter: int = 500, shift: float | None = None) -> EigenResult:
    """Eigenvalue of ``-L`` with the smallest real part, by shifted inverse iteration.

    The shift starts below the spectrum (so the principal eigenvalue is the one
    closest to it) and is moved up behind the running estimate.  The result is
    accepted when ``||(-L - lambda) psi|| <= tol ||psi||`` and ``psi`` has one
    sign on the region; otherwise it is flagged indeterminate.
    """
    if isinstance(op, StabilityOperator):
        region = op.interior if region is None else np.asarray(region, dtype=bool)
        A = -op.matrix
        qmax = float(np.max(np.abs(op.potential)))
        xmax = float(np.max(np.sum(op.X**2, axis=1))) if op.X.size else 0.0
    else:
        A = -sp.csr_matrix(op)
        region = np.ones(A.shape[0], bool) if region is None else np.asarray(region, dtype=bool)
        qmax = float(abs(A.diagonal()).max())
        xmax = 0.0
    idx = np.nonzero(region)[0]
    if idx.size == 0:
        raise ValueError("empty region")
    A = A[idx][:, idx].tocsc()
    n = A.shape[0]
    sigma = shift if shift is not None else -1.1 * qmax - xmax - 1.0
    shifts = [sigma]
    I = sp.identity(n, format="csc")
    lu = spla.splu((A - sigma * I).tocsc())
    psi = np.ones(n) / np.sqrt(n)
    lam, res, it, converged = np.nan, np.inf, 0, False
    refactor_at = 8
    for it in range(1, max_iter + 1):
        y = lu.solve(psi)
        psi = y / np.linalg.norm(y)
        Apsi = A @ psi
        lam = float(psi @ Apsi)
        res = float(np.linalg.norm(Apsi - lam * psi))
        if res <= tol * max(1.0, abs(lam)) or res <= tol:
            converged = True
            break
        if it == refactor_at:
            # move the shift up behind the estimate; it stays below lambda0
            gap = max(abs(lam - sigma) * 0.1, 10 * res, 1e-6)
            if lam - gap > sigma:
                sigma = lam - gap
                shifts.append(sigma)
                lu = spla.splu((A - sigma * I).tocsc())
            refactor_at *= 2
    k = int(np.argmax(np.abs(psi)))
    psi = psi / psi[k]
    sign_def = bool(np.min(psi) > -1e-10)
    return EigenResult(lam, psi, res, sign_def, converged, it, shifts)


# ------------------------------------------------------------------ transform

def schrodinger_transform(surface: DiscreteSurface, q: np.ndarray, X: np.ndarray) -> np.ndarray:
    """``Q = q - div X / 2 - |X|^2 / 4`` with the discrete surface divergence."""
    if not np.any(X):
        return np.asarray(q, dtype=float).copy()
    return q - 0.5 * surface.divergence(X) - 0.25 * np.sum(X * X, axis=1)


def q_field(surface: DiscreteSurface, field: CurvatureField) -> np.ndarray:
    """``Q_H`` from the transform applied to ``q = |sigma|^2, X = 2 grad_S H(eta)``."""
    return schrodinger_transform(surface, surface.sigma2, advection_field(surface, field))


def q_expansion(surface: DiscreteSurface, field: CurvatureField) -> np.ndarray:
    """Closed-form ``Q_H = |sigma|^2 - |grad_S H|^2 + kappa_1 alpha_1 + kappa_2 alpha_2``.

    ``alpha_i`` is the spherical Hessian of ``H`` at ``eta`` evaluated on the
    principal direction ``e_i``; no derivative of a surface field is taken.
    """
    eta = surface.normal
    G = grad_s(field, eta)
    Hs = hess_s_ambient(field, eta)
    E = surface.principal_directions()
    alpha = np.einsum("nki,nij,nkj->nk", E, Hs, E)
    return (surface.sigma2 - np.sum(G * G, axis=1)
            + surface.kappa[:, 0] * alpha[:, 0] + surface.kappa[:, 1] * alpha[:, 1])


def hessian_gap_inequality(field: CurvatureField, x) -> np.ndarray:
    """``Lap^2/4 - det Hess - ((a1 - a2)/2)^2`` for random orthonormal diagonals (>= 0)."""
    from hsurflab.sphere_field import hess_s

    Hm = hess_s(field, x)
    lap = Hm[..., 0, 0] + Hm[..., 1, 1]
    det = Hm[..., 0, 0] * Hm[..., 1, 1] - Hm[..., 0, 1] ** 2
    return 0.25 * lap**2 - det - ((Hm[..., 0, 0] - Hm[..., 1, 1]) / 2) ** 2


def desiQ_check(surface: DiscreteSurface, field: CurvatureField, c: float,
                which: str = "transform"):
    """``min (Q_H + K - c)`` over interior vertices and the vertices where it is negative."""
    if not c > 0:
        raise ValueError("the estrella constant must be positive")
    Q = q_field(surface, field) if which == "transform" else q_expansion(surface, field)
    margin = Q + surface.K - c
    m = surface.interior
    vals = margin[m]
    failing = np.nonzero(m)[0][vals < 0]
    return float(vals.min()), failing


def radius_check(surface: DiscreteSurface, c: float):
    """Intrinsic radius against ``2 pi / sqrt(3 c)``."""
    if surface.closed or not surface.boundary.any():
        raise MeshError("surface has no boundary")
    if not c > 0:
        raise ValueError("the estrella constant must be positive")
    rad = surface.intrinsic_radius()
    bound = radius_bound(c)
    return rad, bound, bool(rad <= bound)


@dataclass
class Certificate:
    status: str  # stable | unstable | indeterminate
    witness: str
    axis: list | None = None
    lambda0: float | None = None
    max_Lu: float | None = None
    details: dict = dfield(default_factory=dict)


def _sample_axes(n: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, 3))
    return np.vstack([AXES, -AXES, a / np.linalg.norm(a, axis=1, keepdims=True)])


def stability_certificate(surface: DiscreteSurface, field: CurvatureField, n_axes: int = 20,
                          tol: float | None = None, seed: int = 0) -> Certificate:
    """Look for a positive ``u`` with ``L u <= 0``.

    Candidates are ``<eta, a>`` for sampled axes ``a`` (positive on a graph
    in direction ``a``, and Jacobi fields).  ``L u`` is only known up to the
    discretisation error, so the default tolerance is the larger of ``1e-8``
    and the Jacobi residual of the three coordinate axes.  Failing that, the
    principal eigenvalue decides.
    """
    op = assemble_stability_operator(surface, field)
    m = surface.interior
    jac = max(float(np.max(np.abs(op.apply(surface.normal[:, k])[m]))) for k in range(3))
    tol = max(1e-8, jac) if tol is None else tol
    for a in _sample_axes(n_axes, seed):
        u = surface.normal @ a
        if np.min(u[m]) > 0:
            Lu = float(np.max(op.apply(u)[m]))
            if Lu <= tol:
                return Certificate("stable", "normal-component", a.tolist(), None, Lu,
                                   {"tolerance": tol})
    eig = principal_eigenvalue(op)
    if eig.status != "ok":
        return Certificate("indeterminate", "eigen-iteration", None, eig.lambda0, None,
                           {"residual": eig.residual, "sign_definite": eig.sign_definite})
    if eig.lambda0 >= 0:
        return Certificate("stable", "principal-eigenfunction", None, eig.lambda0, None,
                           {"residual": eig.residual})
    return Certificate("unstable", "principal-eigenvalue", None, eig.lambda0, None,
                       {"residual": eig.residual})


# ------------------------------------------------------------------ flux

def flux_integral(surface: DiscreteSurface, field: CurvatureField, v) -> float:
    """``int <eta, v> H(eta) dA`` over a closed surface."""
    if not surface.closed:
        raise MeshError("flux integral needs a closed surface")
    v = np.asarray(v, dtype=float)
    return float(np.sum((surface.normal @ v) * field(surface.normal) * surface.area_weights))


def flux_obstruction(surface: DiscreteSurface, h0, v) -> float:
    """``int <eta, v> h0(eta) dA`` for the part ``h0`` of a decomposed field."""
    if not surface.closed:
        raise MeshError("flux integral needs a closed surface")
    v = np.asarray(v, dtype=float)
    h0v = h0(surface.normal) if callable(h0) else h0
    return float(np.sum((surface.normal @ v) * h0v * surface.area_weights))


# ------------------------------------------------------------------ reports

def export_triplets(matrix: sp.spmatrix, path) -> None:
    """Write ``row col value`` lines (0-based, values with 17 significant digits)."""
    coo = sp.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        fh.write(f"% {matrix.shape[0]} {matrix.shape[1]} {coo.nnz}\n")
        for r, c, x in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{r} {c} {x:.17g}\n")


@dataclass
class StabilityReport:
    lambda0: float | None
    eigen_status: str
    eigen_residual: float | None
    sign_definite: bool | None
    jacobi_residuals: list
    estrella_c: float
    radius_bound: float
    intrinsic_radius: float | None
    desiQ_margin: float | None
    certificate: str
    witness: str
    n_vertices: int
    n_interior: int

    def to_json(self) -> dict:
        return asdict(self)


def stability_report(surface: DiscreteSurface, field: CurvatureField,
                     estrella_resolution: int = 2000, eigen: bool = True) -> tuple[StabilityReport, dict]:
    """Collect every stability quantity for one surface; returns the report and raw fields."""
    op = assemble_stability_operator(surface, field)
    m = surface.interior
    jac = [float(np.max(np.abs(op.apply(surface.normal[:, k])[m]))) for k in range(3)]
    est = estrella_constant(field, estrella_resolution)
    c = est.min_value
    eig = principal_eigenvalue(op) if eigen else None
    cert = stability_certificate(surface, field)
    radius = None if surface.closed else surface.intrinsic_radius()
    margin = desiQ_check(surface, field, c)[0] if c > 0 else None
    rep = StabilityReport(
        lambda0=None if eig is None else eig.lambda0,
        eigen_status="skipped" if eig is None else eig.status,
        eigen_residual=None if eig is None else eig.residual,
        sign_definite=None if eig is None else eig.sign_definite,
        jacobi_residuals=jac, estrella_c=c, radius_bound=radius_bound(c),
        intrinsic_radius=radius, desiQ_margin=margin, certificate=cert.status,
        witness=cert.witness, n_vertices=surface.n, n_interior=int(m.sum()))
    raw = {"psi": None if eig is None else eig.psi, "operator": op,
           "Q": q_field(surface, field)}
    return rep, raw


def report_json(rep: StabilityReport) -> str:
    from hsurflab.io import dumps

    return dumps(rep.to_json())
