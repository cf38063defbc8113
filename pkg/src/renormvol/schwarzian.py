"""Schwarzian derivatives of holomorphic maps and their comparison with theta.

For a map ``g`` from a planar domain to the upper half-plane, the pulled-back
hyperbolic density ``e^phi = |g'|^2 / (Im g)^2`` has
``theta = phi_zz - phi_z^2/2 = S(g)``.  This fixes the direction of the
comparison as *domain -> half-plane*; the strip with ``g = exp`` is the
calibration case (``theta = S(exp) = -1/2``).  In the opposite direction
(half-plane -> domain) the cocycle rule flips the sign, which is how the
statement about the trace-free second form and ``-Re S`` reads for the
Fuchsian-to-target map.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import CriticalPoint, OutOfDomain
from .fields import Domain, builtin_field
from . import epstein

#: |f'| below this is treated as a critical point
CRITICAL_DERIVATIVE = 1e-12
#: default step and Richardson depth for numeric derivatives
NUMERIC_STEP = 2e-2
RICHARDSON_LEVELS = 2

Fn = Callable[[complex], complex]


@dataclass(frozen=True)
class HolomorphicMap:
    """A holomorphic map with optional closed-form derivatives up to third order."""

    f: Fn
    d1: Optional[Fn] = None
    d2: Optional[Fn] = None
    d3: Optional[Fn] = None
    domain: Domain = Domain("plane")
    name: str = "map"

    def __call__(self, z):
        return self.f(self._check(z))

    def _check(self, z):
        z = complex(z)
        if not self.domain.contains(z):
            raise OutOfDomain(f"{z} is outside the domain of {self.name}")
        return z

    @property
    def analytic(self) -> bool:
        return None not in (self.d1, self.d2, self.d3)

    def derivatives(self, z, numeric=None, h=NUMERIC_STEP, levels=RICHARDSON_LEVELS):
        """``(f', f'', f''')`` at ``z``; closed forms unless ``numeric`` is set or missing."""
        z = self._check(z)
        if numeric is None:
            numeric = not self.analytic
        if not numeric:
            return self.d1(z), self.d2(z), self.d3(z)
        return numeric_derivatives(self.f, z, h, levels)

    def cauchy_riemann_defect(self, z, h=1e-5) -> float:
        """``|d f / d zbar|`` by centred differences."""
        z = self._check(z)
        fx = (self.f(z + h) - self.f(z - h)) / (2 * h)
        fy = (self.f(z + 1j * h) - self.f(z - 1j * h)) / (2 * h)
        return abs(0.5 * (fx + 1j * fy))


def _centered(f, z, h):
    fp, fm = f(z + h), f(z - h)
    f2p, f2m = f(z + 2 * h), f(z - 2 * h)
    return np.array([
        (fp - fm) / (2 * h),
        (fp - 2 * f(z) + fm) / h**2,
        (f2p - 2 * fp + 2 * fm - f2m) / (2 * h**3),
    ])


def numeric_derivatives(f: Fn, z: complex, h=NUMERIC_STEP, levels=RICHARDSON_LEVELS):
    """First three derivatives by centred differences along the real direction.

    Each Richardson level combines steps ``h`` and ``h/2`` and removes the
    next even power of ``h``.
    """
    table = [_centered(f, z, h / 2**k) for k in range(levels + 1)]
    for level in range(1, levels + 1):
        w = 4.0**level
        table = [(w * table[k + 1] - table[k]) / (w - 1) for k in range(len(table) - 1)]
    d = table[0]
    return complex(d[0]), complex(d[1]), complex(d[2])


def schwarzian_from_derivatives(d1, d2, d3) -> complex:
    if abs(d1) < CRITICAL_DERIVATIVE:
        raise CriticalPoint(f"|f'| = {abs(d1):.3g} is below {CRITICAL_DERIVATIVE:g}")
    a = d2 / d1
    return complex(d3 / d1 - 1.5 * a * a)


def schwarzian(f: HolomorphicMap, z: complex, numeric=None, h=NUMERIC_STEP,
               levels=RICHARDSON_LEVELS) -> complex:
    """``S(f) = f'''/f' - 3/2 (f''/f')^2``."""
    return schwarzian_from_derivatives(*f.derivatives(z, numeric=numeric, h=h, levels=levels))


# --------------------------------------------------------------------------
# built-in maps


def identity() -> HolomorphicMap:
    return HolomorphicMap(lambda z: z, lambda z: 1 + 0j, lambda z: 0j, lambda z: 0j, name="identity")


def mobius(a, b, c, d) -> HolomorphicMap:
    det = a * d - b * c
    if det == 0:
        raise ValueError("degenerate Mobius coefficients (ad - bc = 0)")
    return HolomorphicMap(
        lambda z: (a * z + b) / (c * z + d),
        lambda z: det / (c * z + d) ** 2,
        lambda z: -2 * c * det / (c * z + d) ** 3,
        lambda z: 6 * c * c * det / (c * z + d) ** 4,
        name=f"mobius({a},{b},{c},{d})",
    )


def exp_map() -> HolomorphicMap:
    return HolomorphicMap(cmath.exp, cmath.exp, cmath.exp, cmath.exp, name="exp")


def power(k) -> HolomorphicMap:
    """Principal branch of ``z^k`` on the slit plane; ``k`` may be complex."""
    k = complex(k)

    def pw(z, e):
        return cmath.exp(e * cmath.log(z))

    return HolomorphicMap(
        lambda z: pw(z, k),
        lambda z: k * pw(z, k - 1),
        lambda z: k * (k - 1) * pw(z, k - 2),
        lambda z: k * (k - 1) * (k - 2) * pw(z, k - 3),
        name=f"power({k:g})",
    )


def log_map() -> HolomorphicMap:
    return HolomorphicMap(cmath.log, lambda z: 1 / z, lambda z: -1 / z**2, lambda z: 2 / z**3,
                          name="log")


def compose(f: HolomorphicMap, g: HolomorphicMap) -> HolomorphicMap:
    """``f o g`` with chain-rule closures to third order."""
    closures = None
    if f.analytic and g.analytic:
        def d1(z):
            return f.d1(g.f(z)) * g.d1(z)

        def d2(z):
            w, g1 = g.f(z), g.d1(z)
            return f.d2(w) * g1 * g1 + f.d1(w) * g.d2(z)

        def d3(z):
            w, g1, g2 = g.f(z), g.d1(z), g.d2(z)
            return f.d3(w) * g1**3 + 3 * f.d2(w) * g1 * g2 + f.d1(w) * g.d3(z)

        closures = (d1, d2, d3)
    return HolomorphicMap(lambda z: f.f(g.f(z)), *(closures or (None, None, None)),
                          domain=g.domain, name=f"{f.name}o{g.name}")


def builtin_maps():
    """Named maps used by the cocycle suite."""
    return {
        "identity": identity(),
        "mobius": mobius(2 + 1j, -1, 0.5j, 1 - 0.3j),
        "cayley": mobius(1j, 1j, -1, 1),
        "exp": exp_map(),
        "square": power(2),
        "cube": power(3),
        "log": log_map(),
    }


def cocycle_check(f: HolomorphicMap, g: HolomorphicMap, z: complex, numeric=None) -> float:
    """``|S(f o g) - [S(f)(g) g'^2 + S(g)]|``."""
    z = complex(z)
    fg = compose(f, g)
    lhs = schwarzian(fg, z, numeric=numeric)
    g1 = g.derivatives(z, numeric=numeric)[0]
    rhs = schwarzian(f, g(z), numeric=numeric) * g1 * g1 + schwarzian(g, z, numeric=numeric)
    return abs(lhs - rhs)


# --------------------------------------------------------------------------
# Mobius kernel


def fit_mobius(zs: Sequence[complex], ws: Sequence[complex]) -> HolomorphicMap:
    """The Mobius map sending three points ``zs`` to ``ws``."""
    def normaliser(p1, p2, p3):
        # sends p1 -> 0, p2 -> 1, p3 -> oo
        return np.array([[p2 - p3, -p1 * (p2 - p3)], [p2 - p1, -p3 * (p2 - p1)]], dtype=complex)

    m = np.linalg.inv(normaliser(*ws)) @ normaliser(*zs)
    return mobius(*m.ravel())


def mobius_fit_defect(f: HolomorphicMap, points: Sequence[complex]) -> float:
    """Fit a Mobius map through ``f`` at the first three points; max misfit on the rest."""
    pts = [complex(p) for p in points]
    if len(pts) < 4:
        raise ValueError("need at least four points")
    T = fit_mobius(pts[:3], [f(p) for p in pts[:3]])
    return max(abs(f(p) - T(p)) for p in pts[3:])


# --------------------------------------------------------------------------
# theta of Liouville fields against Schwarzians of uniformizing maps


def uniformizing_map(domain_name: str, **params) -> HolomorphicMap:
    """Explicit (locally defined) conformal map from a model domain onto the upper half-plane."""
    if domain_name == "strip":
        return exp_map()
    if domain_name == "annulus":
        R = params.get("R", math.e)
        return power(1j * math.pi / math.log(R))
    if domain_name == "halfplane":
        return identity()
    if domain_name == "disk":
        return mobius(1j, 1j, -1, 1)
    raise ValueError(f"no closed-form uniformization for {domain_name!r}")


def annulus_theta(R: float, w: complex) -> complex:
    """Closed form ``(1 + (pi/log R)^2) / (2 w^2)``."""
    k = math.pi / math.log(R)
    return (1 + k * k) / (2 * complex(w) ** 2)


def theta_vs_schwarzian(domain_name: str, params: dict, z: complex, numeric_h=None) -> float:
    """``|theta(z) - S(g)(z)|`` for the domain's hyperbolic field and uniformizing map ``g``.

    ``numeric_h`` switches theta to centred-difference derivatives of phi.
    """
    params = dict(params or {})
    field = builtin_field(domain_name, **params)
    field.check(z)
    if numeric_h is not None:
        from .fields import NumericField
        field = NumericField.from_field(field, h=numeric_h)
    g = uniformizing_map(domain_name, **params)
    return abs(epstein.theta(field, z) - schwarzian(g, z))
