import numpy as np
import pytest
import scipy.sparse as sp

from hsurflab import errors
from hsurflab.graph_solver import graph_surface, rectangle_domain, solve_dirichlet
from hsurflab.rotational import build_flat_disk, build_hemisphere, round_sphere
from hsurflab.sphere_field import constant_field
from hsurflab.surface import ParamGrid


@pytest.fixture(scope="module")
def sphere():
    return round_sphere(1.0, 32)


def test_round_sphere_geometry(sphere):
    S = sphere
    assert np.allclose(S.normal, -S.r, atol=1e-9)
    assert np.allclose(S.H, 1.0, atol=1e-6)
    assert np.allclose(S.K, 1.0, atol=1e-6)
    assert np.allclose(S.sigma2, 2.0, atol=1e-5)
    assert S.area == pytest.approx(4 * np.pi, rel=1e-3)


def test_principal_directions(sphere):
    E = sphere.principal_directions()
    n = sphere.normal
    assert np.allclose(np.einsum("nki,ni->nk", E, n), 0, atol=1e-9)
    assert np.allclose(np.linalg.norm(E, axis=2), 1, atol=1e-12)
    assert np.allclose(np.einsum("ni,ni->n", E[:, 0], E[:, 1]), 0, atol=1e-9)


def test_laplacian_of_coordinates(sphere):
    # coordinate functions are first spherical harmonics: Lap x = -2 x
    L = sphere.laplacian_matrix()
    for k in range(3):
        f = sphere.r[:, k]
        assert np.max(np.abs(L @ f + 2 * f)) < 1e-4


def test_laplacian_second_harmonic():
    errs = []
    for n in (16, 32):
        S = round_sphere(1.0, n)
        f = S.r[:, 0] * S.r[:, 2]
        errs.append(np.max(np.abs(S.laplacian_matrix() @ f + 6 * f)))
    assert errs[1] < errs[0] / 6


def test_gradient_and_divergence(sphere):
    f = sphere.r[:, 2]
    G = sphere.gradient(f)
    n = sphere.normal
    exact = np.array([0, 0, 1.0]) - n[:, 2:3] * n
    assert np.max(np.abs(G - exact)) < 1e-4
    # div grad = Lap
    assert np.max(np.abs(sphere.divergence(G) + 2 * f)) < 1e-3


def test_advection_matrix(sphere):
    X = sphere.gradient(sphere.r[:, 0])
    A = sphere.advection_matrix(X)
    f = sphere.r[:, 2]
    direct = np.einsum("ni,ni->n", X, sphere.gradient(f))
    assert sp.issparse(A)
    assert np.max(np.abs(A @ f - direct)) < 1e-9


def test_geodesic_distance_on_sphere():
    S = round_sphere(1.0, 256)
    src = int(np.argmin(np.linalg.norm(S.r - np.array([1.0, 0.0, 0.0]), axis=1)))
    d = S.geodesic_distance([src])
    exact = np.arccos(np.clip(S.r @ S.r[src], -1, 1))
    far = exact >= 0.25
    assert np.max(np.abs(d[far] - exact[far]) / exact[far]) <= 0.02


def test_geodesic_is_monotone_in_refinement():
    S = round_sphere(1.0, 32)
    src = [0]
    coarse = S.geodesic_distance(src, refine=False)
    fine = S.geodesic_distance(src)
    assert np.all(fine <= coarse + 1e-12)


def test_flat_disk_radius():
    D = build_flat_disk(1.0, 48)
    assert D.intrinsic_radius() == pytest.approx(1.0, abs=0.03)


def test_hemisphere_radius():
    S = build_hemisphere(constant_field(1.0), 64)
    cell = (np.pi / 2) / 64
    assert abs(S.intrinsic_radius() - np.pi / 2) <= cell


def test_closed_has_no_radius(sphere):
    with pytest.raises(errors.MeshError):
        sphere.intrinsic_radius()
    with pytest.raises(errors.MeshError):
        sphere.geodesic_distance([])


def test_plane_graph_surface():
    dom = rectangle_domain(-0.5, 0.5, -0.5, 0.5, 1 / 16, 0.0)
    sol = solve_dirichlet(constant_field(0.0), dom)
    S = graph_surface(sol)
    assert np.allclose(S.H, 0) and np.allclose(S.K, 0)
    assert np.allclose(S.normal, [0, 0, 1])
    L = S.laplacian_matrix()
    x = S.r[:, 0]
    assert np.max(np.abs((L @ (x * x))[S.interior] - 2)) < 1e-9


def test_pole_grid_needs_even_periodic():
    with pytest.raises(errors.MeshError):
        ParamGrid(np.ones((4, 5), bool), (0.1, 0.1), periodic_v=True, pole_low=True)


def test_principal_directions_diagonalise():
    # non-umbilic surface: a solved cap is umbilic, so use the rotational 1 + t^2 sphere
    from hsurflab.rotational import build_sphere
    from hsurflab.sphere_field import zonal_poly_field

    S = build_sphere(zonal_poly_field([1.0, 0.0, 1.0]), 32)
    E = S.principal_directions()
    # second fundamental form on e_i equals kappa_i
    for k in range(2):
        w = np.stack([np.einsum("ni,ni->n", E[:, k], S.r_u), np.einsum("ni,ni->n", E[:, k], S.r_v)], 1)
        comp = np.einsum("nij,nj->ni", S.ginv, w)
        II = np.einsum("ni,nij,nj->n", comp, S.h, comp)
        assert np.max(np.abs(II - S.kappa[:, k])) < 1e-8
