import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hsurflab import errors
from hsurflab.config import boundary_function
from hsurflab.graph_solver import (
    GridDomain, curvature_diagnostic, disk_domain, domain_from_spec, height_experiment,
    level_set_components, rectangle_domain, rotational_height, soliton_residual, solve_dirichlet,
    two_disk_domain,
)
from hsurflab.sphere_field import E3, constant_field, linear_field, zonal_poly_field


def dome(R):
    return lambda x, y: np.sqrt(1 - x * x - y * y) - np.sqrt(1 - R * R)


def cap_error(h, R=0.5):
    sol = solve_dirichlet(constant_field(1.0), disk_domain(R, h, g=dome(R)), orientation="down")
    X, Y = sol.domain.coords()
    m = sol.domain.interior
    return float(np.max(np.abs(sol.u[m] - dome(R)(X[m], Y[m]))))


def test_cap_second_order():
    e = [cap_error(h) for h in (1 / 16, 1 / 32, 1 / 64)]
    assert e[0] / e[1] >= 3.5 and e[1] / e[2] >= 3.5


def test_solution_invariants():
    sol = solve_dirichlet(constant_field(1.0), disk_domain(0.5, 1 / 32), orientation="down")
    m = sol.domain.interior
    assert sol.residual_norm <= 1e-9
    assert np.allclose(np.linalg.norm(sol.Z[m], axis=1), 1, atol=1e-12)
    assert np.max(np.abs(sol.curvature_residual())) <= 1e-9
    # second differences agree with the flux form away from the stair-step ring
    X, Y = sol.domain.coords()
    deep = m & (X**2 + Y**2 < 0.4**2)
    assert np.max(np.abs(sol.H_second_differences[deep] - 1)) < 1e-2
    assert np.all(sol.eta[m][:, 2] < 0)


def test_minimal_zero_data():
    sol = solve_dirichlet(constant_field(0.0), disk_domain(0.7, 1 / 16))
    assert np.max(np.abs(sol.u[sol.domain.interior])) == 0.0


def test_translator_square():
    dom = rectangle_domain(-0.5, 0.5, -0.5, 0.5, 1 / 32, 0.0)
    sol = solve_dirichlet(linear_field(1.0, 0.0, E3), dom)
    m = dom.interior
    # H = <eta, e3> > 0 pushes the graph below its boundary: a bowl
    assert np.all(sol.u[m] < 0)
    assert np.max(np.abs(soliton_residual(sol, 0.0))) <= 10 * 1e-9


def test_soliton_residual_plane():
    # horizontal plane solves H = <x, e3> - 1; H_phi = -2 there, matching b = -1
    dom = rectangle_domain(0, 1, 0, 1, 1 / 8, 0.3)
    sol = solve_dirichlet(linear_field(1.0, -1.0, E3), dom)
    assert np.allclose(sol.u[dom.interior], 0.3)
    assert np.allclose(soliton_residual(sol, -1.0), 0.0, atol=1e-12)
    assert np.allclose(soliton_residual(sol, 0.0), -2.0, atol=1e-12)


def test_cap_constant_density_reduction():
    sol = solve_dirichlet(constant_field(1.0), disk_domain(0.5, 1 / 32), orientation="down")
    # with a constant density the weighted curvature is 2 H = 2
    assert np.allclose(2 * sol.H[sol.domain.interior], 2.0, atol=1e-9)


def test_level_sets():
    h = 1 / 32
    sol = solve_dirichlet(constant_field(1.0), disk_domain(0.9, h), orientation="down")
    assert level_set_components(sol, sol.max_height * 1.01) == []
    comps = level_set_components(sol, 0.3)
    assert len(comps) == 1 and comps[0][1] <= 2 + 2 * h
    two = solve_dirichlet(constant_field(1.0), two_disk_domain(0.4, 1.2, h), orientation="down")
    assert len(level_set_components(two, 0.02)) == 2


def test_comparison_with_cap_height():
    h = 1 / 32
    for R in (0.4, 0.7):
        sol = solve_dirichlet(constant_field(1.0), disk_domain(R, h), orientation="down")
        assert sol.max_height <= 1 - np.sqrt(1 - R * R) + 2 * h


def test_translation_invariance():
    f = zonal_poly_field([1.0, 0.2, 0.3])
    dom = disk_domain(0.4, 1 / 16, g=lambda x, y: 0.1 * x * y)
    a = solve_dirichlet(f, dom)
    b = solve_dirichlet(f, dom.with_boundary(lambda x, y: 0.1 * x * y + 2.5))
    m = dom.interior
    assert np.max(np.abs(b.u[m] - a.u[m] - 2.5)) < 1e-10


@settings(max_examples=10, deadline=None)
@given(c=st.lists(st.floats(-0.2, 0.2), min_size=3, max_size=3), lift=st.floats(0.0, 0.2),
       k=st.floats(0.0, 0.1))
def test_maximum_principle(c, lift, k):
    f = constant_field(1.0)
    dom = disk_domain(0.4, 1 / 16)
    g1 = lambda x, y: c[0] + c[1] * x + c[2] * y
    g2 = lambda x, y: g1(x, y) + lift + k * (1 + np.sin(5 * x))
    u1 = solve_dirichlet(f, dom.with_boundary(g1)).u
    u2 = solve_dirichlet(f, dom.with_boundary(g2)).u
    m = dom.interior
    assert np.all(u1[m] <= u2[m] + 1e-10)


def test_height_experiment_minimal():
    tab = height_experiment(constant_field(0.0), [0.2, 0.4], 1 / 16)
    assert tab.heights == [0.0, 0.0] and tab.saturated


def test_height_experiment_caps():
    radii = [0.25, 0.5]
    tab = height_experiment(constant_field(1.0), radii, lambda R: 1 / 64, orientation="down")
    for R, s in zip(radii, tab.supremum):
        assert s == pytest.approx(1 - np.sqrt(1 - R * R), abs=5e-3)
    assert tab.item5["holds"]


def test_nonexistence_recorded():
    with pytest.raises(errors.NonConvergenceError) as exc:
        solve_dirichlet(constant_field(1.0), disk_domain(1.5, 1 / 8), orientation="down")
    assert exc.value.last_iterate is not None and exc.value.history
    tab = height_experiment(constant_field(1.0), [0.5, 1.5], 1 / 8, orientation="down")
    assert tab.converged == [True, False]
    assert tab.supremum[1] == tab.supremum[0]


def test_curvature_diagnostic():
    flat = solve_dirichlet(constant_field(0.0), disk_domain(0.5, 1 / 16))
    assert curvature_diagnostic(flat)[0] == 0.0
    vals = [curvature_diagnostic(solve_dirichlet(constant_field(1.0), disk_domain(R, 1 / 32),
                                                 orientation="down"))[0] for R in (0.3, 0.6)]
    # |sigma| = sqrt 2 on a unit sphere, distances below the cap radius
    assert all(v <= np.sqrt(2) * 1.0 for v in vals)


def test_domain_validation():
    inside = np.zeros((5, 5), bool)
    inside[0, 2] = True
    with pytest.raises(ValueError):
        GridDomain(0.1, (0, 0), inside, np.zeros_like(inside), np.zeros((5, 5)))
    dom = disk_domain(0.3, 0.1)
    with pytest.raises(ValueError):
        dom.with_boundary(np.nan)
    with pytest.raises(ValueError):
        rectangle_domain(0, 1, 0, 1, 0.3)
    with pytest.raises(ValueError):
        two_disk_domain(0.5, 1.0, 0.1)


def test_domain_from_spec():
    dom = domain_from_spec({"kind": "rectangle", "box": [-0.5, 0.5, -0.25, 0.25], "h": 0.125,
                            "boundary": {"formula": "affine", "params": {"a": 1.0, "c": 2.0}}})
    X, _ = dom.coords()
    assert np.allclose(dom.g[dom.boundary], X[dom.boundary] + 2.0)
    assert callable(boundary_function({"formula": "grim-reaper"}))
    with pytest.raises(ValueError):
        domain_from_spec({"kind": "hexagon", "h": 0.1})


def test_bad_arguments():
    dom = disk_domain(0.3, 0.1)
    with pytest.raises(ValueError):
        solve_dirichlet(constant_field(1.0), dom, orientation="sideways")
    with pytest.raises(ValueError):
        solve_dirichlet(constant_field(1.0), dom, continuation_steps=20)


def test_warm_start():
    f = constant_field(1.0)
    dom = disk_domain(0.5, 1 / 16)
    cold = solve_dirichlet(f, dom, orientation="down")
    warm = solve_dirichlet(f, dom, init=np.nan_to_num(cold.u), orientation="down")
    assert warm.newton_iterations <= 1
    assert np.allclose(warm.u[dom.interior], cold.u[dom.interior], atol=1e-9)


def test_rotational_height_caps():
    f = constant_field(1.0)
    for R in (0.3, 0.8):
        val, lim = rotational_height(f, R, "down")
        assert val == pytest.approx(1 - np.sqrt(1 - R * R), abs=1e-8)
    assert lim["x_max"] == pytest.approx(1.0, abs=1e-10)
    assert lim["height"] == pytest.approx(1.0, abs=1e-8)
    assert np.isnan(rotational_height(f, 1.2, "down")[0])


@pytest.mark.parametrize("orientation", ["up", "down"])
def test_rotational_height_matches_grid(orientation):
    # odd zonal term: the two orientations give different graphs
    f = zonal_poly_field([1.0, 0.3])
    val, _ = rotational_height(f, 0.5, orientation)
    grid = [solve_dirichlet(f, disk_domain(0.5, h), orientation=orientation).max_height
            for h in (1 / 32, 1 / 64)]
    assert abs(grid[1] - val) < abs(grid[0] - val) and abs(grid[1] - val) < 5e-3


def test_rotational_height_rejects():
    with pytest.raises(ValueError):
        rotational_height(linear_field(1.0, 0.0, [1.0, 0.0, 0.0]), 0.5)
    with pytest.raises(ValueError):
        rotational_height(constant_field(-1.0), 0.5, "up")
    with pytest.raises(ValueError):
        height_experiment(constant_field(1.0), [0.5], 0.1, method="spectral")


def test_height_experiment_rotational_saturates():
    radii = [0.5, 0.75, 1.0, 1.25, 1.5]
    tab = height_experiment(zonal_poly_field([1.0, 0.0, 0.3]), radii, None, orientation="down",
                            method="rotational")
    assert tab.converged == [True, True, False, False, False]
    assert np.all(np.diff(tab.supremum) >= 0) and tab.saturated
