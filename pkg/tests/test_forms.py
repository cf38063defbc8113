import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from renormvol import forms
from renormvol.errors import GridTooCoarse, SingularTransform
from renormvol.forms import InfinityJet, Metric2, Operator2, SurfaceJet

from strategies import surface_jets

E = np.eye(2)


def matmul(a, b):
    return [[sum(a[i][k] * b[k][j] for k in range(2)) for j in range(2)] for i in range(2)]


def transpose(a):
    return [[a[j][i] for j in range(2)] for i in range(2)]


def inverse(a):
    d = a[0][0] * a[1][1] - a[0][1] * a[1][0]
    return [[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]]


def oracle_to_infinity(I, B):
    """Defining formulas evaluated with plain nested lists."""
    ep = [[E[i][j] + B[i][j] for j in range(2)] for i in range(2)]
    em = [[E[i][j] - B[i][j] for j in range(2)] for i in range(2)]
    Istar = [[0.5 * v for v in row] for row in matmul(matmul(transpose(ep), I), ep)]
    IIstar = [[0.5 * v for v in row] for row in matmul(matmul(transpose(ep), I), em)]
    Bstar = matmul(inverse(ep), em)
    return np.array(Istar), np.array(IIstar), np.array(Bstar)


# ------------------------------------------------------------------ value types


def test_metric2_rejects_indefinite():
    with pytest.raises(ValueError):
        Metric2(1.0, 2.0, 1.0)
    with pytest.raises(ValueError):
        Metric2(-1.0, 0.0, 1.0)


def test_metric2_matrix_roundtrip():
    g = Metric2(2.0, 0.3, 1.5)
    assert Metric2.from_matrix(g.matrix) == g
    assert g.area_element == pytest.approx(math.sqrt(3.0 - 0.09))


def test_metric2_from_asymmetric_matrix():
    with pytest.raises(ValueError):
        Metric2.from_matrix([[1.0, 0.2], [0.3, 1.0]])


def test_operator2_trace_det():
    b = Operator2(1.0, 2.0, 3.0, 4.0)
    assert b.trace == 5.0 and b.det == -2.0
    assert np.array_equal(Operator2.identity().matrix, E)


def test_jet_rejects_non_self_adjoint():
    with pytest.raises(ValueError):
        SurfaceJet(np.diag([2.0, 1.0]), np.array([[0.0, 1.0], [1.0, 0.0]]))


def test_jet_accepts_value_types():
    jet = SurfaceJet(Metric2(1.0, 0.0, 1.0), Operator2(0.5, 0.0, 0.0, 0.5))
    assert jet.H == pytest.approx(1.0)
    assert jet.K == pytest.approx(-0.75)


def test_derived_forms():
    I = np.diag([2.0, 1.0])
    B = np.diag([0.5, -0.25])
    jet = SurfaceJet(I, B)
    assert np.allclose(jet.II, np.diag([1.0, -0.25]))
    assert np.allclose(jet.III, np.diag([0.5, 0.0625]))
    assert jet.Ke == pytest.approx(-0.125)
    assert jet.K == pytest.approx(-1.125)


# ------------------------------------------------------------------ transforms


def test_totally_geodesic_example():
    star = forms.to_infinity(SurfaceJet(E, np.zeros((2, 2))))
    assert np.allclose(star.Istar, 0.5 * E)
    assert np.allclose(star.Bstar, E)
    assert np.allclose(star.IIstar, 0.5 * E)
    back = forms.from_infinity(InfinityJet(0.5 * E, E))
    assert np.allclose(back.I, E) and np.allclose(back.B, 0)


def test_isotropic_example():
    star = forms.to_infinity(SurfaceJet(E, 0.5 * E))
    assert np.allclose(star.Istar, 9 / 8 * E, atol=1e-15)
    assert np.allclose(star.Bstar, E / 3, atol=1e-15)


def test_matrix_oracle_to_infinity():
    I = [[2.0, 0.0], [0.0, 1.0]]
    B = [[0.5, 0.0], [0.0, -0.25]]
    Istar, IIstar, Bstar = oracle_to_infinity(I, B)
    star = forms.to_infinity(SurfaceJet(np.array(I), np.array(B)))
    assert np.allclose(star.Istar, Istar, atol=1e-15)
    assert np.allclose(star.Bstar, Bstar, atol=1e-15)
    assert np.allclose(star.IIstar, IIstar, atol=1e-15)
    assert np.allclose(star.Istar, np.diag([2.25, 0.28125]))
    assert np.allclose(star.Bstar, np.diag([1 / 3, 5 / 3]))


def test_matrix_oracle_from_infinity():
    back = forms.from_infinity(InfinityJet(np.diag([1.0, 2.0]), np.diag([0.2, 0.1])))
    assert np.allclose(back.I, np.diag([0.72, 1.21]))
    assert np.allclose(back.B, np.diag([2 / 3, 9 / 11]))


def test_third_form_at_infinity_has_half_factor():
    jet = SurfaceJet(np.diag([2.0, 1.0]), np.diag([0.5, -0.25]))
    star = forms.to_infinity(jet)
    em = E - jet.B
    assert np.allclose(star.IIIstar, 0.5 * em.T @ jet.I @ em)


def test_singular_transform():
    with pytest.raises(SingularTransform):
        forms.to_infinity(SurfaceJet(E, np.diag([-1.0, 0.3])))
    with pytest.raises(SingularTransform):
        forms.from_infinity(InfinityJet(E, -E))


def test_singular_threshold():
    # det(E + B) just above the threshold still transforms
    forms.to_infinity(SurfaceJet(E, np.diag([-1.0 + 1e-9, 0.0])))


@given(surface_jets())
def test_involution(jet):
    back = forms.from_infinity(forms.to_infinity(jet))
    assert np.allclose(back.I, jet.I, atol=1e-12, rtol=0)
    assert np.allclose(back.B, jet.B, atol=1e-12, rtol=0)


@given(surface_jets())
def test_involution_from_the_other_side(jet):
    star = forms.to_infinity(jet)
    again = forms.to_infinity(forms.from_infinity(star))
    assert np.allclose(again.Istar, star.Istar, atol=1e-11)
    assert np.allclose(again.Bstar, star.Bstar, atol=1e-11)


@given(surface_jets())
def test_gauss_at_infinity(jet):
    Hs = forms.mean_curvature_at_infinity(jet.B)
    Ks = forms.curvature_at_infinity(jet.K, jet.H, jet.Ke)
    assert abs(Hs + Ks) < 1e-12 * max(1.0, abs(Hs))


@given(surface_jets())
def test_mean_curvature_two_routes(jet):
    a = forms.mean_curvature_at_infinity(jet.B)
    b = forms.mean_curvature_at_infinity_trace(jet.B)
    assert abs(a - b) < 1e-12 * max(1.0, abs(a))


@given(surface_jets())
def test_self_adjointness_preserved(jet):
    star = forms.to_infinity(jet)
    assert forms.self_adjoint_defect(star.Bstar, star.Istar) < 1e-12 * max(1.0, np.abs(star.Istar).max())


@given(surface_jets())
def test_traceless_part_is_traceless(jet):
    star = forms.to_infinity(jet)
    tr = np.trace(np.linalg.solve(star.Istar, star.IIstar0))
    assert abs(tr) < 1e-11


def test_curvature_at_infinity_examples():
    assert forms.curvature_at_infinity(-1.0, 0.0, 0.0) == -2.0
    assert forms.curvature_at_infinity(-0.5, 0.3, 0.5) == pytest.approx(-5 / 9, abs=1e-15)
    # tanh r = 1/2: two closed-form routes must agree
    assert forms.curvature_at_infinity(-0.75, 1.0, 0.25) == pytest.approx(-2 / 3, abs=1e-15)
    r = math.atanh(0.5)
    assert -1.0 / (0.5 * math.exp(2 * r)) == pytest.approx(-2 / 3, abs=1e-15)
    with pytest.raises(SingularTransform):
        forms.curvature_at_infinity(-1.0, -1.0, 0.0)


def test_mean_curvature_at_infinity_examples():
    assert forms.mean_curvature_at_infinity(np.zeros((2, 2))) == 2.0
    assert forms.mean_curvature_at_infinity(0.5 * E) == pytest.approx(2 / 3, abs=1e-15)
    assert forms.mean_curvature_at_infinity_trace(0.5 * E) == pytest.approx(2 / 3, abs=1e-15)


# ------------------------------------------------------------------ equidistant metrics


def test_equidistant_examples():
    I = np.diag([2.0, 1.0])
    rho = 0.7
    geo = forms.equidistant_metric(SurfaceJet(I, np.zeros((2, 2))), rho)
    assert np.allclose(geo, math.cosh(rho) ** 2 * I)
    horo = forms.equidistant_metric(SurfaceJet(I, E), rho)
    assert np.allclose(horo, math.exp(2 * rho) * I)
    jet = SurfaceJet(I, np.diag([0.5, -0.25]))
    A = math.cosh(rho) * E + math.sinh(rho) * jet.B
    assert np.allclose(forms.equidistant_metric(jet, rho), A.T @ I @ A)


def test_equidistant_from_infinity_examples():
    rho = 0.4
    I = np.diag([1.0, 3.0])
    flat = forms.equidistant_metric_from_infinity(InfinityJet(I, np.zeros((2, 2))), rho)
    assert np.allclose(flat, 0.5 * math.exp(2 * rho) * I)
    fuchsian = forms.equidistant_metric_from_infinity(InfinityJet(I, 0.5 * E), rho)
    c = 0.5 * math.exp(2 * rho) + 0.5 + 0.125 * math.exp(-2 * rho)
    assert np.allclose(fuchsian, c * I)


@given(surface_jets(), st.floats(-2.0, 2.0))
def test_equidistant_two_routes(jet, rho):
    a = forms.equidistant_metric(jet, rho)
    b = forms.equidistant_metric_from_infinity(forms.to_infinity(jet), rho)
    assert np.allclose(a, b, atol=1e-11 * max(1.0, np.abs(a).max()), rtol=0)


@given(surface_jets())
def test_equidistant_at_zero_is_I(jet):
    assert np.allclose(forms.equidistant_metric(jet, 0.0), jet.I, atol=1e-14)


@given(surface_jets(kmin=-0.95, kmax=0.95), st.floats(-20.0, 20.0))
def test_convex_implies_positive_leaves(jet, rho):
    assert forms.horospherically_convex(jet.B, jet.I)
    g = forms.equidistant_metric(jet, rho)
    # cosh r + sinh r k > 0 for |k| < 1, so det > 0
    assert np.linalg.det(g / np.abs(g).max()) > 0


# ------------------------------------------------------------------ principal curvatures


def test_horospherical_convexity_examples():
    assert forms.horospherically_convex(np.zeros((2, 2)), E)
    assert not forms.horospherically_convex(np.diag([1.0, 0.0]), E)
    assert not forms.horospherically_convex(np.diag([-1.0, 0.0]), E)


def test_convexity_equivalence_on_random_jets():
    rng = np.random.default_rng(11)
    jets = forms.random_surface_jets(rng, 10_000, kmin=-0.99, kmax=2.0)
    star = forms.to_infinity(jets)
    via_b = forms.horospherically_convex(jets.B)
    via_star = np.all(forms.principal_curvatures(star.Bstar) > 0, axis=-1)
    assert np.array_equal(via_b, via_star)
    assert 0 < via_b.sum() < len(jets)


def test_principal_curvatures_ascending():
    k = forms.principal_curvatures(np.diag([0.7, -0.2]))
    assert k[0] == pytest.approx(-0.2) and k[1] == pytest.approx(0.7)


# ------------------------------------------------------------------ Codazzi


def fuchsian_jet(z):
    return InfinityJet(0.5 * math.e**2 * E, 2 * math.e**-2 * E)


def test_codazzi_constant_field_vanishes():
    assert forms.codazzi_residual_at_infinity(fuchsian_jet, 0.3 + 0.1j, 1e-3) == 0.0


def test_codazzi_grid_and_callable_agree():
    from renormvol import epstein, fields

    f = fields.builtin_field("annulus")
    z0 = fields.default_point(f) - (0.02 + 0.02j)
    jet_at = lambda p: epstein.infinity_jet(f, p)  # noqa: E731
    grid = forms.JetGrid.sample(jet_at, z0, 0.01, 5, 5)
    a = forms.codazzi_residual_at_infinity(grid, (2, 2))
    b = forms.codazzi_residual_at_infinity(jet_at, z0 + 0.02 + 0.02j, 0.01)
    assert a == pytest.approx(b, rel=1e-9)
    coarse, fine = (
        forms.codazzi_residual_at_infinity(jet_at, z0 + 0.02 + 0.02j, h, connection="levi-civita")
        for h in (0.01, 0.005)
    )
    assert fine < coarse / 3


def test_codazzi_grid_edge_raises():
    grid = forms.JetGrid.sample(fuchsian_jet, 0j, 0.1, 3, 3)
    with pytest.raises(GridTooCoarse):
        forms.codazzi_residual_at_infinity(grid, (0, 1))
    with pytest.raises(ValueError):
        forms.codazzi_residual_at_infinity(fuchsian_jet, 0j)
