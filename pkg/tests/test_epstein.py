import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from renormvol import epstein, fields, forms
from renormvol.errors import GridTooCoarse, OutOfDomain
from renormvol.numdiff import convergence_order


def test_flat_leaves_are_horizontal_planes():
    f = fields.flat()
    p = epstein.epstein_map(f, 0.3 + 0.2j, 1.0)
    assert p.y == 0.3 + 0.2j
    assert p.xi == pytest.approx(math.sqrt(2) * math.exp(-1))
    assert np.allclose(epstein.expected_leaf_metric(f, 0j, 1.0), np.eye(2) / (2 * math.exp(-2)))


def test_height_decreases_to_infinity():
    f = fields.disk()
    heights = [epstein.epstein_map(f, 0.2j, rho).xi for rho in (0.0, 2.0, 4.0, 8.0)]
    assert all(a > b for a, b in zip(heights, heights[1:]))
    assert heights[-1] < 1e-3


def test_curvature_at_infinity_of_hyperbolic_fields():
    for name in ("halfplane", "disk", "strip", "annulus"):
        f = fields.builtin_field(name)
        assert epstein.curvature_of_metric_at_infinity(f, fields.default_point(f)) == pytest.approx(-1.0, abs=1e-12)
    q = fields.quadratic()
    assert epstein.curvature_of_metric_at_infinity(q, 0j) == pytest.approx(-2.0)


def test_theta_values():
    assert epstein.theta(fields.strip(), 1 + 1j) == -0.5
    assert epstein.theta(fields.halfplane(), 3 + 2j) == 0
    assert abs(epstein.theta(fields.disk(), 0.4 - 0.3j)) < 1e-13


def test_mean_curvature_at_infinity_is_minus_curvature():
    for name in ("disk", "annulus", "quadratic"):
        f = fields.builtin_field(name)
        z = fields.default_point(f)
        Hs = np.trace(epstein.infinity_jet(f, z).Bstar)
        assert Hs == pytest.approx(-epstein.curvature_of_metric_at_infinity(f, z), rel=1e-12)


def test_principal_curvatures_closed_form_vs_matrix():
    for name in ("disk", "annulus", "quadratic", "strip"):
        f = fields.builtin_field(name)
        z = fields.default_point(f)
        a = epstein.principal_curvatures_at_infinity(f, z)
        b = forms.principal_curvatures(epstein.infinity_jet(f, z).Bstar)
        assert np.allclose(a, b, atol=1e-12)


def test_convexity_examples():
    # hyperbolic disk metric has k* = 1/2 +- 0 at the origin
    assert epstein.horospherically_convex_at(fields.disk(), 0j)
    assert not epstein.horospherically_convex_at(fields.flat(), 0j)


def test_recovered_surface_curvatures_in_range():
    f = fields.disk()
    k = epstein.leaf_principal_curvatures(f, 0.3 + 0.1j)
    assert np.all(np.abs(k) < 1)


@pytest.mark.parametrize("name", ["disk", "annulus"])
@pytest.mark.parametrize("rho", [0.0, 1.0, 2.0])
def test_expansion_second_order(name, rho):
    f = fields.builtin_field(name)
    z = fields.default_point(f)
    steps = (4e-3, 2e-3, 1e-3)
    errs = [epstein.expansion_check(f, z, rho, h) for h in steps]
    assert convergence_order(errs, steps) == pytest.approx(2.0, abs=0.2)
    assert epstein.expansion_check(f, z, rho, 1e-4) < 1e-6


@given(st.floats(-1.5, 1.5), st.floats(0.05, 3.0), st.floats(0.0, 2.0))
def test_halfplane_expansion_exact(x, y, rho):
    f = fields.halfplane()
    assert epstein.expansion_check(f, complex(x, y), rho, 1e-4 * y) < 1e-6


def test_stencil_guards():
    f = fields.disk()
    with pytest.raises(OutOfDomain):
        epstein.induced_metric_numeric(f, 1.5, 0.0, 1e-3)
    with pytest.raises(GridTooCoarse):
        epstein.induced_metric_numeric(f, 0.999, 0.0, 1e-2)
    with pytest.raises(ValueError):
        epstein.dbar_theta(f, 0j, 0.0)


def test_dbar_theta():
    assert epstein.dbar_theta(fields.annulus(), fields.default_point(fields.annulus()), 1e-4) < 1e-6
    assert epstein.dbar_theta(fields.quadratic(), 0.5 + 0.5j, 1e-4) > 1e-2
