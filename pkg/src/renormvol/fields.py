"""Liouville fields: conformal factors ``phi`` of metrics ``e^phi |dz|^2`` on planar domains.

A field exposes ``phi`` together with the complex derivatives ``phi_z``,
``phi_zz`` and ``phi_{z zbar}`` (Wirtinger convention ``d_z = (d_x - i d_y)/2``).
Built-in fields carry hand-derived closed forms; :class:`NumericField` and
:class:`GridField` use centred stencils instead.

Curvature convention: with ``phi_{z zbar} = Laplacian(phi)/4`` the Gaussian
curvature of ``e^phi |dz|^2`` is ``-2 e^{-phi} phi_{z zbar}``.  This constant
is pinned by the unit disk metric ``4/(1-|z|^2)^2``, which must give -1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np

from .errors import GridTooCoarse, OutOfDomain, ParseError
from .numdiff import real_derivatives


class Jet2(NamedTuple):
    """Second-order jet of a real conformal factor at a point."""

    phi: float
    phi_z: complex
    phi_zz: complex
    phi_zzbar: float


# --------------------------------------------------------------------------
# domains


@dataclass(frozen=True)
class Domain:
    """A planar region; ``contains(z, margin)`` keeps ``margin`` away from the boundary."""

    kind: str
    params: dict = field(default_factory=dict)

    def contains(self, z: complex, margin: float = 0.0) -> bool:
        z = complex(z)
        p = self.params
        if self.kind == "plane":
            return True
        if self.kind == "halfplane":
            return z.imag > margin
        if self.kind == "disk":
            return abs(z) < p.get("radius", 1.0) - margin
        if self.kind == "strip":
            return margin < z.imag < p.get("width", math.pi) - margin
        if self.kind == "annulus":
            return 1.0 + margin < abs(z) < p["R"] - margin
        if self.kind == "rectangle":
            return (p["x0"] + margin <= z.real <= p["x1"] - margin
                    and p["y0"] + margin <= z.imag <= p["y1"] - margin)
        raise ValueError(f"unknown domain kind {self.kind!r}")

    def describe(self) -> str:
        if not self.params:
            return self.kind
        inner = ", ".join(f"{k}={v:g}" for k, v in sorted(self.params.items()))
        return f"{self.kind}({inner})"


# --------------------------------------------------------------------------
# fields


class LiouvilleField:
    """Base class: subclasses implement :meth:`_jet`."""

    name = "field"
    #: True when the metric e^phi |dz|^2 has constant curvature -1
    hyperbolic = False

    def __init__(self, domain: Domain, params=None):
        self.domain = domain
        self.params = dict(params or {})

    def check(self, z: complex) -> complex:
        z = complex(z)
        if not self.domain.contains(z):
            raise OutOfDomain(f"{z} is outside {self.domain.describe()}")
        return z

    def jet(self, z: complex) -> Jet2:
        return self._jet(self.check(z))

    def phi(self, z: complex) -> float:
        return self.jet(z).phi

    def _jet(self, z: complex) -> Jet2:
        raise NotImplementedError

    def __repr__(self):
        return f"<{type(self).__name__} {self.name} on {self.domain.describe()}>"


class AnalyticField(LiouvilleField):
    """A field given by closed-form derivative closures."""

    def __init__(self, name, domain, jet_fn: Callable[[complex], Jet2], phi_fn=None,
                 hyperbolic=False, params=None):
        super().__init__(domain, params)
        self.name = name
        self.hyperbolic = hyperbolic
        self._jet_fn = jet_fn
        self._phi_fn = phi_fn

    def _jet(self, z):
        return self._jet_fn(z)

    def phi(self, z):
        z = self.check(z)
        if self._phi_fn is not None:
            return float(self._phi_fn(z))
        return self._jet_fn(z).phi


def _jet_from_partials(f, fx, fy, fxx, fxy, fyy) -> Jet2:
    return Jet2(
        f,
        0.5 * (fx - 1j * fy),
        0.25 * (fxx - fyy - 2j * fxy),
        0.25 * (fxx + fyy),
    )


class NumericField(LiouvilleField):
    """Wraps a bare ``phi`` callable; derivatives come from centred stencils."""

    def __init__(self, phi_fn: Callable[[complex], float], domain: Domain, h=1e-3,
                 richardson=False, name="numeric", hyperbolic=False, params=None):
        super().__init__(domain, params)
        self._phi_fn = phi_fn
        self.h = h
        self.richardson = richardson
        self.name = name
        self.hyperbolic = hyperbolic

    @classmethod
    def from_field(cls, base: LiouvilleField, h=1e-3, richardson=False):
        """Numeric twin of ``base`` that only ever evaluates ``base.phi``."""
        return cls(base.phi, base.domain, h=h, richardson=richardson,
                   name=f"{base.name}~fd", hyperbolic=base.hyperbolic, params=base.params)

    def phi(self, z):
        return float(self._phi_fn(self.check(z)))

    def _jet(self, z):
        reach = (2 if self.richardson else 1) * self.h * math.sqrt(2)
        if not self.domain.contains(z, margin=reach):
            raise GridTooCoarse(f"stencil of half-width {reach:g} leaves the domain at {z}")
        return _jet_from_partials(*real_derivatives(self._phi_fn, z, self.h, self.richardson))


class GridField(NumericField):
    """A field tabulated on a uniform grid; evaluation is only defined at nodes."""

    def __init__(self, x0, y0, step, values: np.ndarray, richardson=False, name="grid"):
        self.x0, self.y0, self.step = float(x0), float(y0), float(step)
        self.values = np.asarray(values, dtype=float)
        nx, ny = self.values.shape
        dom = Domain("rectangle", {"x0": self.x0, "x1": self.x0 + (nx - 1) * self.step,
                                   "y0": self.y0, "y1": self.y0 + (ny - 1) * self.step})
        super().__init__(self._lookup, dom, h=self.step, richardson=richardson, name=name)

    def _index(self, z):
        fi = (z.real - self.x0) / self.step
        fj = (z.imag - self.y0) / self.step
        i, j = int(round(fi)), int(round(fj))
        if abs(fi - i) > 1e-6 or abs(fj - j) > 1e-6:
            raise OutOfDomain(f"{z} is not a grid node (step {self.step:g})")
        return i, j

    def _lookup(self, z):
        z = complex(z)
        i, j = self._index(z)
        nx, ny = self.values.shape
        if not (0 <= i < nx and 0 <= j < ny) or np.isnan(self.values[i, j]):
            raise GridTooCoarse(f"grid has no sample at {z}")
        return self.values[i, j]

    def check(self, z):
        z = complex(z)
        i, j = self._index(z)
        nx, ny = self.values.shape
        if not (0 <= i < nx and 0 <= j < ny) or np.isnan(self.values[i, j]):
            raise OutOfDomain(f"{z} is outside the sampled grid")
        return z

    def _jet(self, z):
        # stencil points must exist; missing ones raise GridTooCoarse in _lookup
        return _jet_from_partials(*real_derivatives(self._lookup, z, self.step, self.richardson))

    def nodes(self):
        nx, ny = self.values.shape
        for i in range(nx):
            for j in range(ny):
                if not np.isnan(self.values[i, j]):
                    yield complex(self.x0 + i * self.step, self.y0 + j * self.step)

    @classmethod
    def sample(cls, base: LiouvilleField, x0, y0, step, nx, ny, richardson=False):
        """Tabulate ``base.phi`` on a grid, masking nodes outside its domain."""
        vals = np.full((nx, ny), np.nan)
        for i in range(nx):
            for j in range(ny):
                z = complex(x0 + i * step, y0 + j * step)
                if base.domain.contains(z):
                    vals[i, j] = base.phi(z)
        return cls(x0, y0, step, vals, richardson=richardson, name=f"{base.name}~grid")

    # plain-text table: a "step <h>" line, then "x y phi" rows; '#' starts a comment

    @classmethod
    def load(cls, path, richardson=False):
        path = Path(path)
        return cls.parse(path.read_text(), source=str(path), richardson=richardson)

    @classmethod
    def parse(cls, text: str, source="<table>", richardson=False):
        step = None
        rows = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0]
            if not line.strip():
                continue
            toks = _tokens(line)
            if step is None:
                word, col = toks[0]
                if word != "step" or len(toks) != 2:
                    raise ParseError("expected 'step <h>' header", lineno, col, source)
                step = _parse_float(toks[1], lineno, source)
                if not step > 0:
                    raise ParseError("grid step must be positive", lineno, toks[1][1], source)
                continue
            if len(toks) != 3:
                col = toks[3][1] if len(toks) > 3 else len(raw) + 1
                raise ParseError(f"expected 3 columns 'x y phi', got {len(toks)}", lineno, col, source)
            rows.append((lineno, toks, [_parse_float(t, lineno, source) for t in toks]))
        if step is None:
            raise ParseError("missing 'step <h>' header", 1, 1, source)
        if not rows:
            raise ParseError("table has no samples", len(text.splitlines()) + 1, 1, source)
        data = np.array([r[2] for r in rows])
        x0, y0 = data[:, 0].min(), data[:, 1].min()
        nx = int(round((data[:, 0].max() - x0) / step)) + 1
        ny = int(round((data[:, 1].max() - y0) / step)) + 1
        vals = np.full((nx, ny), np.nan)
        for lineno, toks, (x, y, p) in rows:
            fi, fj = (x - x0) / step, (y - y0) / step
            i, j = int(round(fi)), int(round(fj))
            if abs(fi - i) > 1e-6:
                raise ParseError(f"x={x} is off the declared grid", lineno, toks[0][1], source)
            if abs(fj - j) > 1e-6:
                raise ParseError(f"y={y} is off the declared grid", lineno, toks[1][1], source)
            if not np.isnan(vals[i, j]):
                raise ParseError("duplicate grid node", lineno, toks[0][1], source)
            vals[i, j] = p
        return cls(x0, y0, step, vals, richardson=richardson)

    def dump(self) -> str:
        lines = [f"step {self.step!r}"]
        for z in self.nodes():
            i, j = self._index(z)
            lines.append(f"{z.real!r} {z.imag!r} {float(self.values[i, j])!r}")
        return "\n".join(lines) + "\n"


def _tokens(line):
    out = []
    i = 0
    while i < len(line):
        if line[i].isspace():
            i += 1
            continue
        j = i
        while j < len(line) and not line[j].isspace():
            j += 1
        out.append((line[i:j], i + 1))
        i = j
    return out


def _parse_float(tok, lineno, source):
    word, col = tok
    try:
        return float(word)
    except ValueError:
        raise ParseError(f"not a number: {word!r}", lineno, col, source) from None


# --------------------------------------------------------------------------
# built-in fields with hand-derived closures


def flat() -> AnalyticField:
    return AnalyticField("flat", Domain("plane"), lambda z: Jet2(0.0, 0j, 0j, 0.0))


def halfplane() -> AnalyticField:
    """``e^phi = 1/y^2`` on the upper half-plane."""
    def jet(z):
        y = z.imag
        return Jet2(-2.0 * math.log(y), 1j / y, complex(-0.5 / y**2), 0.5 / y**2)
    return AnalyticField("halfplane", Domain("halfplane"), jet, hyperbolic=True)


def disk() -> AnalyticField:
    """``e^phi = 4/(1-|z|^2)^2`` on the unit disk."""
    def jet(z):
        zb = z.conjugate()
        r = 1.0 - abs(z) ** 2
        return Jet2(math.log(4.0) - 2.0 * math.log(r), 2 * zb / r, 2 * zb * zb / r**2, 2.0 / r**2)
    return AnalyticField("disk", Domain("disk", {"radius": 1.0}), jet, hyperbolic=True)


def strip() -> AnalyticField:
    """``e^phi = 1/sin^2(Im z)`` on ``0 < Im z < pi``."""
    def jet(z):
        y = z.imag
        s = math.sin(y)
        return Jet2(-2.0 * math.log(s), 1j * math.cos(y) / s, complex(-0.5 / s**2), 0.5 / s**2)
    return AnalyticField("strip", Domain("strip", {"width": math.pi}), jet, hyperbolic=True)


def annulus(R=math.e) -> AnalyticField:
    """Complete hyperbolic metric on ``1 < |w| < R``.

    ``e^phi = (k/|w|)^2 / sin^2(k log|w|)`` with ``k = pi/log R``.  Writing
    ``s = log|w|``, the derivatives follow from ``d_w s = 1/(2w)``.
    """
    if not R > 1:
        raise ValueError("annulus needs R > 1")
    k = math.pi / math.log(R)

    def jet(w):
        s = math.log(abs(w))
        sn = math.sin(k * s)
        d1 = -2.0 - 2.0 * k * math.cos(k * s) / sn      # d phi / ds
        d2 = 2.0 * k * k / sn**2                         # d^2 phi / ds^2
        phi = 2.0 * math.log(k) - 2.0 * s - 2.0 * math.log(sn)
        return Jet2(phi, d1 / (2 * w), d2 / (4 * w * w) - d1 / (2 * w * w), d2 / (4 * abs(w) ** 2))

    return AnalyticField("annulus", Domain("annulus", {"R": float(R)}), jet,
                         hyperbolic=True, params={"R": float(R)})


def quadratic() -> AnalyticField:
    """``phi = |z|^2``: a deliberately non-constant-curvature control field."""
    def jet(z):
        return Jet2(abs(z) ** 2, z.conjugate(), 0j, 1.0)
    return AnalyticField("quadratic", Domain("plane"), jet)


BUILTIN_FIELDS = {
    "flat": flat,
    "halfplane": halfplane,
    "disk": disk,
    "strip": strip,
    "annulus": annulus,
    "quadratic": quadratic,
}

#: an interior sample point for each built-in field
DEFAULT_POINTS = {
    "flat": 0.3 + 0.2j,
    "halfplane": 1j,
    "disk": 0.3 + 0.1j,
    "strip": 0.4 + 0.5j * math.pi,
    "annulus": None,  # depends on R
    "quadratic": 0.5 + 0.5j,
}


def builtin_field(name: str, **params) -> LiouvilleField:
    try:
        make = BUILTIN_FIELDS[name]
    except KeyError:
        raise ValueError(f"unknown field {name!r}; choose from {sorted(BUILTIN_FIELDS)}") from None
    return make(**params)


def default_point(f: LiouvilleField) -> complex:
    """A representative interior point, well away from the boundary."""
    if f.domain.kind == "annulus":
        R = f.domain.params["R"]
        return complex(math.sqrt(R) * np.exp(0.6j))
    return DEFAULT_POINTS.get(f.name, 0.3 + 0.2j)
