"""Epstein surfaces in the upper half-space model built from a Liouville field.

For ``I* = e^phi |dz|^2`` the leaf at parameter ``rho`` is the image of

    xi = sqrt(2) e^{-rho} e^{-phi/2} / D
    y  = z + phi_zbar e^{-2 rho} e^{-phi} / D,     D = 1 + e^{-2 rho} e^{-phi} |phi_z|^2 / 2

and its induced metric is exactly ``e^{2 rho}/2 I* + II* + e^{-2 rho}/2 III*``
with ``II* = Re(theta dz^2) + phi_{z zbar} |dz|^2`` and
``theta = phi_zz - phi_z^2 / 2``.  Only differences in ``rho`` and the
``rho -> oo`` behaviour carry meaning; ``rho = 0`` is not tied to a
preferred leaf.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import GridTooCoarse, OutOfDomain
from .fields import LiouvilleField
from .forms import InfinityJet, from_infinity, principal_curvatures


class H3Point(NamedTuple):
    """A point of the upper half-space: boundary coordinate ``y`` and height ``xi > 0``."""

    y: complex
    xi: float


def epstein_map(f: LiouvilleField, z: complex, rho: float) -> H3Point:
    j = f.jet(z)
    w = math.exp(-2.0 * rho - j.phi)
    D = 1.0 + 0.5 * w * abs(j.phi_z) ** 2
    xi = math.sqrt(2.0) * math.exp(-rho - 0.5 * j.phi) / D
    y = complex(z) + j.phi_z.conjugate() * w / D
    return H3Point(y, xi)


def theta(f: LiouvilleField, z: complex) -> complex:
    """``theta = phi_zz - phi_z^2 / 2``."""
    j = f.jet(z)
    return complex(j.phi_zz - 0.5 * j.phi_z**2)


def quadratic_differential_form(q: complex) -> np.ndarray:
    """Matrix of ``Re(q dz^2)`` in the real basis ``(dx, dy)``."""
    return np.array([[q.real, -q.imag], [-q.imag, -q.real]])


def metric_at_infinity(f: LiouvilleField, z: complex) -> np.ndarray:
    return math.exp(f.jet(z).phi) * np.eye(2)


def second_form_at_infinity(f: LiouvilleField, z: complex) -> np.ndarray:
    """``II* = (theta dz^2 + conj(theta) dzbar^2)/2 + phi_{z zbar} dz dzbar`` as a real 2x2 form."""
    j = f.jet(z)
    th = complex(j.phi_zz - 0.5 * j.phi_z**2)
    return quadratic_differential_form(th) + j.phi_zzbar * np.eye(2)


def infinity_jet(f: LiouvilleField, z: complex) -> InfinityJet:
    j = f.jet(z)
    th = complex(j.phi_zz - 0.5 * j.phi_z**2)
    Istar = math.exp(j.phi) * np.eye(2)
    IIstar = quadratic_differential_form(th) + j.phi_zzbar * np.eye(2)
    return InfinityJet(Istar, math.exp(-j.phi) * IIstar)


def principal_curvatures_at_infinity(f: LiouvilleField, z: complex):
    """``k* = e^{-phi} (phi_{z zbar} -/+ |theta|)``, ascending."""
    j = f.jet(z)
    th = abs(j.phi_zz - 0.5 * j.phi_z**2)
    s = math.exp(-j.phi)
    return (s * (j.phi_zzbar - th), s * (j.phi_zzbar + th))


def curvature_of_metric_at_infinity(f: LiouvilleField, z: complex) -> float:
    """``K* = -2 e^{-phi} phi_{z zbar}`` (unit disk metric gives -1)."""
    j = f.jet(z)
    return -2.0 * math.exp(-j.phi) * j.phi_zzbar


def recovered_surface(f: LiouvilleField, z: complex):
    """The ``rho = 0`` leaf's ``(I, B)`` recovered from the data at infinity."""
    return from_infinity(infinity_jet(f, z))


def horospherically_convex_at(f: LiouvilleField, z: complex) -> bool:
    """Pointwise criterion for the Epstein map to be an embedding for every rho."""
    return min(principal_curvatures_at_infinity(f, z)) > 0


def _stencil_guard(f, z, h, reach):
    if not f.domain.contains(z):
        raise OutOfDomain(f"{z} is outside {f.domain.describe()}")
    if not h > 0:
        raise ValueError("step h must be positive")
    if not f.domain.contains(z, margin=reach):
        raise GridTooCoarse(f"stencil of half-width {reach:g} at {z} leaves the domain")


def _as_vec(p: H3Point):
    return np.array([p.y.real, p.y.imag, p.xi])


def induced_metric_numeric(f: LiouvilleField, z: complex, rho: float, h: float) -> np.ndarray:
    """Pull back ``(|dy|^2 + dxi^2)/xi^2`` through the Epstein map by centred differences."""
    z = complex(z)
    _stencil_guard(f, z, h, 2 * h)
    c = _as_vec(epstein_map(f, z, rho))
    dx = (_as_vec(epstein_map(f, z + h, rho)) - _as_vec(epstein_map(f, z - h, rho))) / (2 * h)
    dy = (_as_vec(epstein_map(f, z + 1j * h, rho)) - _as_vec(epstein_map(f, z - 1j * h, rho))) / (2 * h)
    J = np.column_stack([dx, dy])
    return J.T @ J / c[2] ** 2


def expected_leaf_metric(f: LiouvilleField, z: complex, rho: float) -> np.ndarray:
    jet = infinity_jet(f, z)
    return (0.5 * math.exp(2 * rho) * jet.Istar + jet.IIstar
            + 0.5 * math.exp(-2 * rho) * jet.IIIstar)


def expansion_check(f: LiouvilleField, z: complex, rho: float, h: float) -> float:
    """Frobenius norm of (numerical induced metric) - (expansion from the data at infinity)."""
    num = induced_metric_numeric(f, z, rho, h)
    return float(np.linalg.norm(num - expected_leaf_metric(f, z, rho)))


def dbar_theta(f: LiouvilleField, z: complex, h: float) -> float:
    """``|d theta / d zbar|`` by centred differences; ~0 when theta is holomorphic."""
    z = complex(z)
    _stencil_guard(f, z, h, h)
    tx = (theta(f, z + h) - theta(f, z - h)) / (2 * h)
    ty = (theta(f, z + 1j * h) - theta(f, z - 1j * h)) / (2 * h)
    return abs(0.5 * (tx + 1j * ty))


def leaf_principal_curvatures(f: LiouvilleField, z: complex):
    """Principal curvatures of the ``rho = 0`` leaf, ``(1 - k*)/(1 + k*)`` per direction."""
    return principal_curvatures(recovered_surface(f, z).B)
