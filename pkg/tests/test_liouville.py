import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from renormvol import fixtures, liouville, mesh
from renormvol.errors import NonConvergence, WrongTopology
from renormvol.liouville import LineSearch, SolverConfig
from renormvol.suites import constructed_problem


@pytest.fixture(scope="module")
def hyp():
    return fixtures.genus2_octagon(8)


@pytest.fixture(scope="module")
def solved(hyp):
    return liouville.solve_uniformization(hyp)


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(max_iterations=0)
    with pytest.raises(ValueError):
        SolverConfig(residual_tolerance=0)
    with pytest.raises(ValueError):
        SolverConfig(target_curvature=-1)
    with pytest.raises(ValueError):
        SolverConfig(area_constraint=0)
    with pytest.raises(ValueError):
        LineSearch(factor=1.0)
    with pytest.raises(ValueError):
        LineSearch(c1=0)


def test_residual_at_hyperbolic_mesh_is_small(hyp):
    r = liouville.liouville_residual(hyp)
    assert np.abs(r).max() < 0.05


def test_residual_large_constant(hyp):
    c = 3.0
    r = liouville.liouville_residual(hyp, np.full(hyp.n_vertices, c))
    K0 = mesh.gaussian_curvature(hyp)
    assert np.allclose(r, math.exp(2 * c) + K0, rtol=1e-12)
    assert np.allclose(r / (math.exp(2 * c) - 1), 1, atol=1e-3)


def test_residual_uses_mesh_phi(hyp):
    phi = np.full(hyp.n_vertices, 0.2)
    assert np.array_equal(liouville.liouville_residual(hyp.with_phi(phi)),
                          liouville.liouville_residual(hyp, phi))


def test_functional_at_zero(hyp):
    S = liouville.liouville_functional(hyp, np.zeros(hyp.n_vertices))
    # (1/8 pi) * lumped area, close to 4 pi / 8 pi
    assert S == pytest.approx(mesh.total_area(hyp) / (8 * math.pi), rel=1e-12)
    assert S == pytest.approx(0.5, abs=0.02)


def test_functional_flat_torus_constant():
    t = fixtures.flat_torus(6, size=1.5)
    c = 0.4
    S = liouville.liouville_functional(t, np.full(t.n_vertices, c))
    assert S == pytest.approx(math.exp(2 * c) * 2.25 / (8 * math.pi), rel=1e-12)


@settings(max_examples=10)
@given(st.integers(0, 2**32 - 1))
def test_gradient_matches_finite_differences(seed):
    m = fixtures.genus2_octagon(4)
    rng = np.random.default_rng(seed)
    phi, d = 0.1 * rng.standard_normal((2, m.n_vertices))
    eps = 1e-5
    fd = (liouville.liouville_functional(m, phi + eps * d)
          - liouville.liouville_functional(m, phi - eps * d)) / (2 * eps)
    g = liouville.functional_gradient(m, phi)
    assert fd == pytest.approx(float(g @ d), rel=1e-7, abs=1e-10)
    A = mesh.vertex_areas(m)
    assert np.allclose(g, A * liouville.liouville_residual(m, phi) / (4 * math.pi))


def test_solve_hyperbolic(solved, hyp):
    assert solved.converged and solved.iterations <= 30
    assert solved.residual < 1e-10
    assert np.abs(solved.phi).max() < 0.05
    assert solved.area_scaled == pytest.approx(4 * math.pi, rel=0.02)
    assert solved.curvature["mean"] == pytest.approx(-1.0, abs=0.05)


def test_solution_curvature_close_to_minus_one(solved, hyp):
    K = mesh.gaussian_curvature(hyp.with_phi(solved.phi), scaled=True)
    assert np.abs(K + 1).max() < 5e-3
    r = liouville.liouville_residual(hyp, solved.phi)
    assert np.abs(r).max() < 1e-10


def test_gauss_bonnet_area(solved):
    assert solved.area_lumped == pytest.approx(4 * math.pi, rel=1e-9)


def test_lambda_scaling(hyp):
    res = liouville.solve_uniformization(hyp, SolverConfig(target_curvature=2.0))
    assert res.area_lumped == pytest.approx(2 * math.pi, rel=1e-9)
    base = liouville.solve_uniformization(hyp)
    assert np.allclose(res.phi, base.phi - 0.5 * math.log(2.0), atol=1e-9)


def test_area_constraint_reports_lambda(hyp):
    res = liouville.solve_uniformization(hyp, SolverConfig(area_constraint=8 * math.pi))
    assert res.area_lumped == pytest.approx(8 * math.pi, rel=1e-12)
    assert res.lam == pytest.approx(0.5, rel=1e-9)
    assert res.shift == pytest.approx(0.5 * math.log(2.0), rel=1e-6)


def test_constructed_solution_converges():
    errs = []
    for level in (8, 16):
        m, psi = constructed_problem(level, seed=0)
        res = liouville.solve_uniformization(m)
        errs.append(np.abs(res.phi + psi).max())
    assert errs[0] / errs[1] > 3.0


def test_random_restarts(hyp):
    cfg = SolverConfig(area_constraint=4 * math.pi)
    rng = np.random.default_rng(5)
    sols = [liouville.solve_uniformization(hyp, cfg, phi0=rng.uniform(-1, 1, hyp.n_vertices)).phi
            for _ in range(3)]
    assert max(np.abs(a - b).max() for a in sols for b in sols) < 1e-8


def test_wrong_topology():
    with pytest.raises(WrongTopology):
        liouville.solve_uniformization(fixtures.icosphere(1))
    with pytest.raises(WrongTopology):
        liouville.solve_uniformization(fixtures.flat_torus(4))


def test_non_convergence_carries_result(hyp):
    m, _ = constructed_problem(8, seed=0)
    with pytest.raises(NonConvergence) as err:
        liouville.solve_uniformization(m, SolverConfig(max_iterations=1))
    res = err.value.result
    assert res is not None and res.iterations == 1 and not res.converged
    assert res.residual_history[1] < res.residual_history[0]


def test_second_difference_zero_direction(solved, hyp):
    assert liouville.second_difference(hyp, solved.phi, np.zeros(hyp.n_vertices)) == 0.0


def test_projection_removes_constants(solved, hyp):
    u = liouville.project_area_preserving(hyp, solved.phi, np.ones(hyp.n_vertices))
    assert np.abs(u).max() < 1e-14
    v = liouville.project_area_preserving(hyp, solved.phi, np.arange(hyp.n_vertices, dtype=float))
    w = mesh.vertex_areas(hyp) * np.exp(2 * solved.phi)
    assert abs(float(v @ w)) < 1e-9 * np.abs(v).max() * w.sum()


def test_extremum_probe(solved, hyp):
    rep = liouville.extremum_character_check(hyp, solved.phi, n_directions=8, seed=3)
    assert rep["uniform_sign"] and rep["c"] > 0
    assert rep["w_side_signs"] == [-1] and rep["s_side_signs"] == [1]


def test_w_objective_sign(solved, hyp):
    assert liouville.w_objective(hyp, solved.phi, w0=1.0) == pytest.approx(
        1.0 - 2 * math.pi * liouville.liouville_functional(hyp, solved.phi))


def test_solver_report(solved, hyp):
    rep = liouville.solver_report(solved, hyp, SolverConfig())
    assert rep["converged"] and rep["mesh"]["euler_characteristic"] == -2
    assert rep["gauss_bonnet_area"] == pytest.approx(4 * math.pi)
    assert "laplacian" in rep["conventions"] and "theta_vs_schwarzian" in rep["conventions"]
