import cmath
import math

import pytest
from hypothesis import given, strategies as st

from renormvol import schwarzian as sz
from renormvol.errors import CriticalPoint, OutOfDomain
from renormvol.fields import Domain

coef = st.complex_numbers(max_magnitude=3.0, allow_nan=False, allow_infinity=False)


def test_schwarzian_of_exp_and_log():
    for z in (0j, 1 + 1j, -2 + 0.5j):
        assert sz.schwarzian(sz.exp_map(), z) == -0.5
    assert sz.schwarzian(sz.log_map(), 2.0) == pytest.approx(0.5 / 4)


def test_schwarzian_of_power():
    # S(z^k) = (1 - k^2) / (2 z^2)
    for k in (2.0, 3.0, 0.5):
        z = 1.3 + 0.4j
        assert abs(sz.schwarzian(sz.power(k), z) - (1 - k * k) / (2 * z * z)) < 1e-12


@given(coef, coef, coef, coef)
def test_mobius_kernel(a, b, c, d):
    if abs(a * d - b * c) < 0.1:
        return
    T = sz.mobius(a, b, c, d)
    for z in (0.3 + 0.2j, -0.7 + 1.1j):
        if abs(c * z + d) < 0.2:
            continue
        assert abs(sz.schwarzian(T, z)) < 1e-10


def test_degenerate_mobius():
    with pytest.raises(ValueError):
        sz.mobius(1, 2, 2, 4)


def test_critical_point():
    with pytest.raises(CriticalPoint):
        f = sz.HolomorphicMap(lambda z: z**3 - 3 * z, lambda z: 3 * z * z - 3,
                              lambda z: 6 * z, lambda z: 6 + 0j)
        sz.schwarzian(f, 1.0)


def test_domain_check():
    f = sz.HolomorphicMap(cmath.log, domain=Domain("halfplane"), name="log+")
    with pytest.raises(OutOfDomain):
        f(-1j)


def test_numeric_matches_closed_form():
    for f in sz.builtin_maps().values():
        z = 1.5 + 0.7j
        a = sz.schwarzian(f, z)
        b = sz.schwarzian(f, z, numeric=True)
        assert abs(a - b) < 1e-6 * max(1.0, abs(a))


def test_map_without_closures_uses_numeric():
    f = sz.HolomorphicMap(cmath.exp)
    assert not f.analytic
    assert abs(sz.schwarzian(f, 0.2j) + 0.5) < 1e-6


def test_cocycle_all_pairs():
    maps = sz.builtin_maps()
    for f in maps.values():
        for g in maps.values():
            assert sz.cocycle_check(f, g, 1.5 + 0.7j) < 1e-8


def test_compose_values():
    h = sz.compose(sz.exp_map(), sz.power(2))
    z = 0.3 + 0.4j
    assert h(z) == pytest.approx(cmath.exp(z * z))
    assert h.d1(z) == pytest.approx(2 * z * cmath.exp(z * z))


def test_cauchy_riemann():
    assert sz.exp_map().cauchy_riemann_defect(0.5j) < 1e-8
    conj = sz.HolomorphicMap(lambda z: z.conjugate())
    assert conj.cauchy_riemann_defect(0.5j) == pytest.approx(1.0)


def test_fit_mobius():
    T = sz.fit_mobius([0, 1, 2], [1j, 2, -1])
    assert abs(T(0) - 1j) < 1e-14 and abs(T(1) - 2) < 1e-14 and abs(T(2) + 1) < 1e-14
    assert sz.mobius_fit_defect(sz.mobius(1, 2, 3, 5), [0, 1, 2, 3j, -1 + 1j]) < 1e-12
    assert sz.mobius_fit_defect(sz.exp_map(), [0, 0.5, 1, 1.5]) > 1e-2
    with pytest.raises(ValueError):
        sz.mobius_fit_defect(sz.exp_map(), [0, 1, 2])


def test_uniformizing_maps_land_in_halfplane():
    assert sz.uniformizing_map("strip")(0.3 + 1j).imag > 0
    assert sz.uniformizing_map("disk")(0.3 - 0.2j).imag > 0
    R = math.e
    w = math.sqrt(R) * cmath.exp(0.6j)
    assert sz.uniformizing_map("annulus", R=R)(w).imag > 0
    with pytest.raises(ValueError):
        sz.uniformizing_map("torus")


@pytest.mark.parametrize("R", [2.0, math.e, 10.0])
def test_theta_equals_schwarzian_annulus(R):
    w = math.sqrt(R) * cmath.exp(0.6j)
    assert sz.theta_vs_schwarzian("annulus", {"R": R}, w) < 1e-8
    assert abs(sz.annulus_theta(R, w) - sz.schwarzian(sz.uniformizing_map("annulus", R=R), w)) < 1e-12


@pytest.mark.parametrize("name, z", [("strip", 0.4 + 1.5j), ("disk", 0.3 + 0.1j), ("halfplane", 1j)])
def test_theta_equals_schwarzian(name, z):
    assert sz.theta_vs_schwarzian(name, {}, z) < 1e-8
    assert sz.theta_vs_schwarzian(name, {}, z, numeric_h=1e-3) < 1e-4
