import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from renormvol import fields
from renormvol.errors import GridTooCoarse, OutOfDomain, ParseError
from renormvol.fields import GridField, NumericField


@pytest.mark.parametrize("name", ["halfplane", "disk", "strip", "annulus", "quadratic"])
def test_closed_form_jets_match_finite_differences(name):
    f = fields.builtin_field(name)
    z = fields.default_point(f)
    num = NumericField.from_field(f, h=1e-3, richardson=True).jet(z)
    ana = f.jet(z)
    assert num.phi == pytest.approx(ana.phi, abs=1e-12)
    assert abs(num.phi_z - ana.phi_z) < 1e-8
    assert abs(num.phi_zz - ana.phi_zz) < 1e-6
    assert num.phi_zzbar == pytest.approx(ana.phi_zzbar, abs=1e-6)


def test_disk_metric_value():
    f = fields.disk()
    assert math.exp(f.phi(0j)) == pytest.approx(4.0)
    assert math.exp(f.phi(0.5)) == pytest.approx(4 / 0.75**2)


def test_out_of_domain():
    with pytest.raises(OutOfDomain):
        fields.disk().jet(1.2)
    with pytest.raises(OutOfDomain):
        fields.halfplane().phi(-1j)
    with pytest.raises(OutOfDomain):
        fields.annulus().jet(0.5)


def test_annulus_requires_big_radius():
    with pytest.raises(ValueError):
        fields.annulus(R=1.0)


def test_unknown_field():
    with pytest.raises(ValueError):
        fields.builtin_field("torus")


def test_default_points_are_interior():
    for name in fields.BUILTIN_FIELDS:
        f = fields.builtin_field(name)
        assert f.domain.contains(fields.default_point(f), margin=0.1)


def test_annulus_default_point():
    f = fields.annulus(R=4.0)
    assert abs(fields.default_point(f)) == pytest.approx(2.0)


# ------------------------------------------------------------------ grids


def sampled_disk(step=0.05, n=9):
    return GridField.sample(fields.disk(), -0.2, -0.2, step, n, n)


def test_grid_lookup_and_nodes():
    g = sampled_disk()
    assert g.phi(0j) == pytest.approx(math.log(4.0))
    assert len(list(g.nodes())) == 81


def test_grid_off_node_and_outside():
    g = sampled_disk()
    with pytest.raises(OutOfDomain):
        g.phi(0.01)
    with pytest.raises(OutOfDomain):
        g.phi(1.0)


def test_grid_edge_stencil_raises():
    g = sampled_disk()
    with pytest.raises(GridTooCoarse):
        g.jet(complex(-0.2, 0.0))


def test_grid_masks_outside_domain():
    g = GridField.sample(fields.disk(), 0.9, 0.0, 0.05, 5, 3)
    assert np.isnan(g.values).any()
    with pytest.raises(OutOfDomain):
        g.phi(1.1)


def test_grid_dump_parse_roundtrip():
    g = sampled_disk()
    h = GridField.parse(g.dump())
    assert h.step == g.step
    assert np.array_equal(np.isnan(h.values), np.isnan(g.values))
    assert np.allclose(h.values, g.values, equal_nan=True, rtol=0, atol=0)


def test_grid_jet_close_to_closed_form():
    g = GridField.sample(fields.disk(), -0.2, -0.2, 0.01, 41, 41, richardson=True)
    z = 0j
    assert g.jet(z).phi_zzbar == pytest.approx(fields.disk().jet(z).phi_zzbar, rel=1e-6)


@given(st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
def test_grid_parse_accepts_any_floats(a, b):
    text = f"step 0.5\n0 0 {a!r}\n0.5 0 {b!r}\n"
    g = GridField.parse(text)
    assert g.values[0, 0] == a and g.values[1, 0] == b


@pytest.mark.parametrize(
    "text, line, column",
    [
        ("0 0 1\n", 1, 1),
        ("step -1\n0 0 1\n", 1, 6),
        ("step 0.5\n0 0\n", 2, 4),
        ("step 0.5\n0 0 1 2\n", 2, 7),
        ("step 0.5\n0 0 abc\n", 2, 5),
        ("step 0.5\n0 0 1\n0.3 0 1\n", 3, 1),
        ("step 0.5\n0 0 1\n0 0.2 1\n", 3, 3),
        ("step 0.5\n0 0 1\n0 0 2\n", 3, 1),
        ("# only a comment\n", 1, 1),
        ("step 0.5\n", 2, 1),
    ],
)
def test_grid_parse_errors(text, line, column):
    with pytest.raises(ParseError) as err:
        GridField.parse(text, source="t.txt")
    assert (err.value.line, err.value.column) == (line, column)
    assert str(err.value).startswith(f"t.txt:{line}:{column}:")
