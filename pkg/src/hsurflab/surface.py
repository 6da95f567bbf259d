"""Parametric grid surfaces and the differential geometry evaluated on them.

A :class:`DiscreteSurface` is a set of vertices on a logically rectangular
parameter grid ``(u, v)``.  Geometry (normal, metric, second fundamental form,
principal curvatures) comes from per-vertex first and second partial
derivatives of the embedding supplied by the builder, so graphs and surfaces of
revolution can pass closed-form or finite-difference derivatives as they see
fit.  Functions on the surface are differentiated with sparse finite-difference
matrices on the parameter grid, which handle masked grids, periodic angular
directions and rows reflected across a pole.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dfield

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra

from hsurflab.errors import MeshError

AREA_TOL = 1e-14

# first and second derivative stencils, as (offset, weight) with unit spacing
D1 = {2: ((-1, -0.5), (1, 0.5)),
      4: ((-2, 1 / 12), (-1, -8 / 12), (1, 8 / 12), (2, -1 / 12))}
D2 = {2: ((-1, 1.0), (0, -2.0), (1, 1.0)),
      4: ((-2, -1 / 12), (-1, 16 / 12), (0, -30 / 12), (1, 16 / 12), (2, -1 / 12))}

# 8-neighbourhood in counter-clockwise order, used for graph edges and triangle fans
RING = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))


@dataclass
class ParamGrid:
    """Logically rectangular parameter grid with optional topology.

    Parameters
    ----------
    vertex_mask : (nu, nv) bool array of grid nodes that carry a vertex.
    spacing : (du, dv).
    periodic_v : the ``v`` direction wraps around.
    pole_low, pole_high : rows are cell-centred and the first/last row sits
        half a step from a pole; ghost rows are the same rows shifted by half a
        turn in ``v`` (requires an even ``nv`` and ``periodic_v``).
    order : preferred accuracy of the derivative stencils (2 or 4); 4th order
        is used where the wider stencil fits, 2nd order elsewhere.
    """

    vertex_mask: np.ndarray
    spacing: tuple
    periodic_v: bool = False
    pole_low: bool = False
    pole_high: bool = False
    order: int = 2
    index: np.ndarray = dfield(init=False, repr=False)

    def __post_init__(self):
        self.vertex_mask = np.asarray(self.vertex_mask, dtype=bool)
        nu, nv = self.vertex_mask.shape
        if (self.pole_low or self.pole_high) and (nv % 2 or not self.periodic_v):
            raise MeshError("pole rows need a periodic angular direction with an even count")
        self.index = np.full((nu, nv), -1, dtype=np.int64)
        self.index[self.vertex_mask] = np.arange(int(self.vertex_mask.sum()))
        I, J = np.nonzero(self.vertex_mask)
        self.ij = np.column_stack([I, J])

    @property
    def shape(self):
        return self.vertex_mask.shape

    @property
    def n(self) -> int:
        return len(self.ij)

    def lookup(self, a: int, b: int) -> np.ndarray:
        """Vertex index of the node at offset ``(a, b)`` from each vertex, or -1."""
        nu, nv = self.shape
        i = self.ij[:, 0] + a
        j = self.ij[:, 1] + b
        if self.pole_low:
            low = i < 0
            i = np.where(low, -1 - i, i)
            j = np.where(low, j + nv // 2, j)
        if self.pole_high:
            high = i >= nu
            i = np.where(high, 2 * nu - 1 - i, i)
            j = np.where(high, j + nv // 2, j)
        if self.periodic_v:
            j = np.mod(j, nv)
        ok = (i >= 0) & (i < nu) & (j >= 0) & (j < nv)
        out = np.full(self.n, -1, dtype=np.int64)
        out[ok] = self.index[i[ok], j[ok]]
        return out

    def _operator(self, candidates):
        """Sparse matrix from the first stencil in ``candidates`` that fits at each vertex."""
        n = self.n
        chosen = np.full(n, -1)
        looked = []
        for c, stencil in enumerate(candidates):
            idx = np.stack([self.lookup(a, b) for (a, b), _ in stencil])
            fits = np.all(idx >= 0, axis=0) & (chosen < 0)
            chosen[fits] = c
            looked.append(idx)
        rows, cols, vals = [], [], []
        for c, stencil in enumerate(candidates):
            sel = np.nonzero(chosen == c)[0]
            for k, (_, w) in enumerate(stencil):
                rows.append(sel)
                cols.append(looked[c][k, sel])
                vals.append(np.full(sel.size, w))
        A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(n, n))
        return A, chosen >= 0

    def derivative_operators(self) -> tuple[dict, np.ndarray]:
        """Matrices for ``d/du, d/dv, d2/du2, d2/dudv, d2/dv2`` and the rows where all fit."""
        du, dv = self.spacing
        orders = (4, 2) if self.order >= 4 else (2,)
        ops, valid = {}, np.ones(self.n, dtype=bool)
        specs = {
            "u": [[((a, 0), w / du) for a, w in D1[o]] for o in orders],
            "v": [[((0, b), w / dv) for b, w in D1[o]] for o in orders],
            "uu": [[((a, 0), w / du**2) for a, w in D2[o]] for o in orders],
            "vv": [[((0, b), w / dv**2) for b, w in D2[o]] for o in orders],
            "uv": [[((a, b), wa * wb / (du * dv)) for a, wa in D1[o] for b, wb in D1[o]]
                   for o in orders],
        }
        for key, cands in specs.items():
            ops[key], ok = self._operator(cands)
            valid &= ok
        return ops, valid


class DiscreteSurface:
    """Surface sampled on a :class:`ParamGrid` with per-vertex embedding derivatives.

    Parameters
    ----------
    grid : the parameter grid.
    r, r_u, r_v, r_uu, r_uv, r_vv : (N, 3) arrays over the vertices.
    interior : (N,) bool; vertices that are not Dirichlet boundary.
    closed : True for surfaces without boundary.
    kind : free-form label ("graph", "revolution", ...).

    The unit normal is ``r_u x r_v / |r_u x r_v|``; builders choose the
    parameter order so that this is the intended orientation.
    """

    def __init__(self, grid: ParamGrid, r, r_u, r_v, r_uu, r_uv, r_vv,
                 interior=None, closed: bool = False, kind: str = "surface", meta=None):
        self.grid = grid
        self.kind = kind
        self.closed = bool(closed)
        self.meta = dict(meta or {})
        self.r, self.r_u, self.r_v = (np.asarray(a, dtype=float) for a in (r, r_u, r_v))
        self.r_uu, self.r_uv, self.r_vv = (np.asarray(a, dtype=float) for a in (r_uu, r_uv, r_vv))
        n = grid.n
        if self.r.shape != (n, 3):
            raise MeshError("vertex array does not match the grid")
        self.ops, self.stencil_ok = grid.derivative_operators()
        if interior is None:
            interior = np.ones(n, dtype=bool) if closed else self.stencil_ok.copy()
        self.interior = np.asarray(interior, dtype=bool) & self.stencil_ok
        if closed and not self.interior.all():
            raise MeshError("closed surface has vertices without a full stencil")
        self._geometry()

    # ------------------------------------------------------------- geometry
    def _geometry(self):
        ru, rv = self.r_u, self.r_v
        cross = np.cross(ru, rv)
        jac = np.linalg.norm(cross, axis=1)
        du, dv = self.grid.spacing
        if np.any(jac * du * dv < AREA_TOL):
            raise MeshError("degenerate metric cell")
        self.normal = cross / jac[:, None]
        E, F, G = (np.einsum("ij,ij->i", a, b) for a, b in ((ru, ru), (ru, rv), (rv, rv)))
        self.g = np.stack([np.stack([E, F], -1), np.stack([F, G], -1)], -2)
        det = E * G - F * F
        self.sqrt_det = np.sqrt(det)
        self.ginv = np.stack([np.stack([G, -F], -1), np.stack([-F, E], -1)], -2) / det[:, None, None]
        L, M, N = (np.einsum("ij,ij->i", a, self.normal) for a in (self.r_uu, self.r_uv, self.r_vv))
        self.h = np.stack([np.stack([L, M], -1), np.stack([M, N], -1)], -2)
        self.shape_op = self.ginv @ self.h
        self.H = 0.5 * np.trace(self.shape_op, axis1=1, axis2=2)
        self.K = (L * N - M * M) / det
        disc = np.sqrt(np.maximum(self.H**2 - self.K, 0.0))
        self.kappa = np.stack([self.H + disc, self.H - disc], -1)
        self.sigma2 = 4 * self.H**2 - 2 * self.K
        # contracted Christoffel symbols b^k = g^{ij} Gamma^k_ij
        tang = np.stack([ru, rv], 1)
        second = np.stack([np.stack([self.r_uu, self.r_uv], 1),
                           np.stack([self.r_uv, self.r_vv], 1)], 1)  # (N,2,2,3)
        low = np.einsum("nijx,nlx->nijl", second, tang)  # <r_ij, r_l>
        gamma = np.einsum("nkl,nijl->nkij", self.ginv, low)
        self.christoffel = gamma
        self.b = np.einsum("nij,nkij->nk", self.ginv, gamma)
        self.area_weights = self.sqrt_det * du * dv

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def boundary(self) -> np.ndarray:
        return ~self.interior

    @property
    def area(self) -> float:
        return float(self.area_weights.sum())

    def principal_directions(self) -> np.ndarray:
        """Unit ambient principal directions, shape (N, 2, 3), matching ``kappa``.

        The first direction is a null vector of ``S - kappa_1``; the shape
        operator is self-adjoint, so the second is its rotation by 90 degrees
        in the tangent plane.  At umbilic points the choice is arbitrary.
        """
        S = self.shape_op
        tang = np.stack([self.r_u, self.r_v], 1)
        lam = self.kappa[:, 0]
        # null vector of S - lam I, picked from the better-conditioned row
        a = S[:, 0, 0] - lam
        b = S[:, 0, 1]
        c = S[:, 1, 0]
        d = S[:, 1, 1] - lam
        use_first = np.abs(a) + np.abs(b) >= np.abs(c) + np.abs(d)
        w = np.where(use_first[:, None], np.stack([-b, a], -1), np.stack([-d, c], -1))
        umb = np.linalg.norm(w, axis=1) < 1e-10 * (1 + np.abs(lam))
        w[umb] = (1.0, 0.0)
        e1 = np.einsum("ni,nix->nx", w, tang)
        e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
        return np.stack([e1, np.cross(self.normal, e1)], 1)

    # ------------------------------------------------------------ calculus
    def d(self, key: str, f: np.ndarray) -> np.ndarray:
        return self.ops[key] @ f

    def covariant_components(self, X: np.ndarray) -> np.ndarray:
        """Contravariant components ``X^i = g^{ij} <X, r_j>`` of ambient tangent vectors."""
        low = np.stack([np.einsum("nx,nx->n", X, self.r_u), np.einsum("nx,nx->n", X, self.r_v)], -1)
        return np.einsum("nij,nj->ni", self.ginv, low)

    def gradient(self, f: np.ndarray) -> np.ndarray:
        """Ambient gradient vector of a vertex function (valid on stencil rows)."""
        df = np.stack([self.d("u", f), self.d("v", f)], -1)
        c = np.einsum("nij,nj->ni", self.ginv, df)
        return c[:, :1] * self.r_u + c[:, 1:] * self.r_v

    def laplacian_matrix(self) -> sp.csr_matrix:
        """Laplace-Beltrami ``g^{ij} (f_ij - Gamma^k_ij f_k)`` as a sparse matrix."""
        gi = self.ginv
        D = self.ops
        return (sp.diags(gi[:, 0, 0]) @ D["uu"] + sp.diags(2 * gi[:, 0, 1]) @ D["uv"]
                + sp.diags(gi[:, 1, 1]) @ D["vv"]
                - sp.diags(self.b[:, 0]) @ D["u"] - sp.diags(self.b[:, 1]) @ D["v"]).tocsr()

    def advection_matrix(self, X: np.ndarray) -> sp.csr_matrix:
        """``f -> <X, grad f>`` for an ambient tangent field ``X``."""
        c = self.covariant_components(X)
        return (sp.diags(c[:, 0]) @ self.ops["u"] + sp.diags(c[:, 1]) @ self.ops["v"]).tocsr()

    def divergence(self, X: np.ndarray) -> np.ndarray:
        """Surface divergence ``g^{ij} <d_i X, r_j>`` of an ambient tangent field."""
        Xu = self.ops["u"] @ X
        Xv = self.ops["v"] @ X
        low = np.stack([np.stack([np.einsum("nx,nx->n", Xu, self.r_u),
                                  np.einsum("nx,nx->n", Xu, self.r_v)], -1),
                        np.stack([np.einsum("nx,nx->n", Xv, self.r_u),
                                  np.einsum("nx,nx->n", Xv, self.r_v)], -1)], -2)
        return np.einsum("nij,nij->n", self.ginv, low)

    # ------------------------------------------------------------ distances
    def _edges(self):
        rows, cols = [], []
        for a, b in RING:
            nb = self.grid.lookup(a, b)
            ok = nb >= 0
            rows.append(np.nonzero(ok)[0])
            cols.append(nb[ok])
        rows, cols = np.concatenate(rows), np.concatenate(cols)
        w = np.linalg.norm(self.r[rows] - self.r[cols], axis=1)
        keep = rows != cols
        return sp.csr_matrix((w[keep], (rows[keep], cols[keep])), shape=(self.n, self.n))

    def geodesic_distance(self, sources, refine: bool = True, tol: float = 1e-12,
                          max_sweeps: int | None = None) -> np.ndarray:
        """Intrinsic distance to a vertex set.

        Multi-source Dijkstra on the 8-connected grid graph with chord edge
        lengths, followed (with ``refine``) by repeated triangle updates over
        the fan of every vertex until nothing changes.  The updates only ever
        decrease the distances.
        """
        sources = np.atleast_1d(np.asarray(sources))
        if sources.dtype == bool:
            sources = np.nonzero(sources)[0]
        if sources.size == 0:
            raise MeshError("empty source set")
        dist = dijkstra(self._edges(), directed=False, indices=sources, min_only=True)
        if not refine:
            return dist
        tris = []
        for k in range(len(RING)):
            A = self.grid.lookup(*RING[k])
            B = self.grid.lookup(*RING[(k + 1) % len(RING)])
            sel = np.nonzero((A >= 0) & (B >= 0) & (A != B))[0]
            geo = _edge_geometry(self.r[A[sel]] - self.r[sel], self.r[B[sel]] - self.r[sel])
            tris.append((sel, A[sel], B[sel]) + geo)
        fixed = np.zeros(self.n, dtype=bool)
        fixed[sources] = True
        changed = np.ones(self.n, dtype=bool)
        sweeps = max_sweeps or 4 * sum(self.grid.shape)
        for _ in range(sweeps):
            new = dist.copy()
            for sel, A, B, le, a_par, a_perp in tris:
                act = np.nonzero(changed[A] | changed[B])[0]
                cand = _wavefront_update(dist[A[act]], dist[B[act]], le[act], a_par[act],
                                         a_perp[act])
                np.minimum.at(new, sel[act], cand)
            new[fixed] = 0.0
            changed = dist - new > tol
            dist = new
            if not changed.any():
                break
        return dist

    def intrinsic_radius(self) -> float:
        """Largest intrinsic distance from a vertex to the boundary set."""
        if self.closed or not self.boundary.any():
            raise MeshError("surface has no boundary")
        return float(np.max(self.geodesic_distance(self.boundary)))

    # ----------------------------------------------------------------- mesh
    def faces(self) -> list:
        """Quad faces between grid neighbours, plus polygon caps over pole rows."""
        g = self.grid
        idx = g.index
        nu, nv = g.shape
        jmax = nv if g.periodic_v else nv - 1
        quads = []
        for i in range(nu - 1):
            for j in range(jmax):
                c = (idx[i, j], idx[i + 1, j], idx[i + 1, (j + 1) % nv], idx[i, (j + 1) % nv])
                if min(c) >= 0:
                    quads.append(c)
        caps = []
        if g.pole_low and (idx[0] >= 0).all():
            caps.append(tuple(idx[0, ::-1]))
        if g.pole_high and (idx[-1] >= 0).all():
            caps.append(tuple(idx[-1]))
        return quads + caps


def _edge_geometry(a, b):
    """Edge length, foot-of-perpendicular offset and distance for a triangle fan slot."""
    e = b - a
    le = np.linalg.norm(e, axis=1)
    a_par = -np.einsum("ij,ij->i", a, e) / le
    a_perp = np.sqrt(np.maximum(np.einsum("ij,ij->i", a, a) - a_par**2, 0.0))
    return le, a_par, a_perp


def _wavefront_update(dA, dB, le, a_par, a_perp):
    """Hopf-Lax update of a vertex from the opposite edge of a triangle.

    Minimises ``(1 - l) dA + l dB + |a + l (b - a)|`` over ``l`` in [0, 1],
    where ``a, b`` are the edge vectors from the vertex (see
    :func:`_edge_geometry`).  In the interior of the edge this is the
    planar-front solution; at the ends it reduces to the graph update along
    ``a`` or ``b``.
    """
    delta = dB - dA
    c = np.clip(delta / le, -1.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        y = np.where(np.abs(c) < 1, -c * a_perp / np.sqrt(1 - c * c), -np.sign(c) * np.inf)
    lam = np.clip((a_par + y) / le, 0.0, 1.0)
    along = lam * le - a_par
    return dA + lam * delta + np.sqrt(along * along + a_perp * a_perp)


def vertex_field_grid(surface: DiscreteSurface, f: np.ndarray, fill=np.nan) -> np.ndarray:
    """Scatter a vertex field back onto the full parameter grid."""
    out = np.full(surface.grid.shape + np.shape(f)[1:], fill, dtype=float)
    out[surface.grid.vertex_mask] = f
    return out
