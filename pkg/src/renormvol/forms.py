"""Pointwise algebra of fundamental forms in H^3 and at infinity.

Tensors are 2x2 matrices in one fixed coordinate basis per point.  A metric
``I`` is a symmetric positive-definite matrix, a shape operator ``B`` is a
linear map with ``I @ B`` symmetric, and bilinear forms built from them follow

    II = I(B., .)      -> I @ B
    III = I(B., B.)    -> B.T @ I @ B

Every function accepts a single matrix of shape ``(2, 2)`` or a stack of
shape ``(..., 2, 2)`` so that large random suites run vectorized.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import GridTooCoarse, SingularTransform

#: det(E + B) below this magnitude is treated as a principal curvature of -1.
SINGULAR_DET = 1e-10

EYE = np.eye(2)


# --------------------------------------------------------------------------
# small 2x2 helpers, all broadcasting over leading axes


def det2(m):
    return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]


def tr2(m):
    return m[..., 0, 0] + m[..., 1, 1]


def inv2(m):
    d = det2(m)
    out = np.empty_like(m)
    out[..., 0, 0] = m[..., 1, 1]
    out[..., 1, 1] = m[..., 0, 0]
    out[..., 0, 1] = -m[..., 0, 1]
    out[..., 1, 0] = -m[..., 1, 0]
    return out / d[..., None, None]


def transpose(m):
    return np.swapaxes(m, -1, -2)


def pullback(metric, a, b=None):
    """Matrix of the form ``(x, y) -> metric(a x, b y)``."""
    if b is None:
        b = a
    return transpose(a) @ metric @ b


def pairing(a, c, metric):
    """``<a, c> = tr(I^-1 a I^-1 c)`` for bilinear forms ``a``, ``c``."""
    inv = inv2(metric)
    return tr2(inv @ a @ inv @ c)


def symmetric_part(m):
    return 0.5 * (m + transpose(m))


# --------------------------------------------------------------------------
# scalar value types


@dataclass(frozen=True)
class Metric2:
    """A positive-definite symmetric bilinear form on a 2-plane."""

    g11: float
    g12: float
    g22: float

    def __post_init__(self):
        if not (self.g11 > 0 and self.g11 * self.g22 - self.g12**2 > 0):
            raise ValueError(f"metric is not positive definite: {self}")

    @classmethod
    def from_matrix(cls, m) -> "Metric2":
        m = np.asarray(m, dtype=float)
        if m.shape != (2, 2):
            raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
        if abs(m[0, 1] - m[1, 0]) > 1e-12 * max(1.0, np.abs(m).max()):
            raise ValueError("metric matrix is not symmetric")
        return cls(float(m[0, 0]), float(0.5 * (m[0, 1] + m[1, 0])), float(m[1, 1]))

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.g11, self.g12], [self.g12, self.g22]])

    @property
    def det(self) -> float:
        return self.g11 * self.g22 - self.g12**2

    @property
    def area_element(self) -> float:
        return float(np.sqrt(self.det))


@dataclass(frozen=True)
class Operator2:
    """A linear map of the 2-plane."""

    b11: float
    b12: float
    b21: float
    b22: float

    @classmethod
    def from_matrix(cls, m) -> "Operator2":
        m = np.asarray(m, dtype=float)
        if m.shape != (2, 2):
            raise ValueError(f"expected a 2x2 matrix, got shape {m.shape}")
        return cls(*(float(v) for v in m.ravel()))

    @classmethod
    def identity(cls) -> "Operator2":
        return cls(1.0, 0.0, 0.0, 1.0)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.b11, self.b12], [self.b21, self.b22]])

    @property
    def trace(self) -> float:
        return self.b11 + self.b22

    @property
    def det(self) -> float:
        return self.b11 * self.b22 - self.b12 * self.b21


MatrixLike = Union[Metric2, Operator2, np.ndarray, list, tuple]


def as_matrix(x: MatrixLike) -> np.ndarray:
    if isinstance(x, (Metric2, Operator2)):
        return x.matrix
    m = np.asarray(x, dtype=float)
    if m.shape[-2:] != (2, 2):
        raise ValueError(f"expected trailing shape (2, 2), got {m.shape}")
    return m


def self_adjoint_defect(B, I):
    """``|(I B)_12 - (I B)_21|``, zero when B is I-self-adjoint."""
    ib = as_matrix(I) @ as_matrix(B)
    return np.abs(ib[..., 0, 1] - ib[..., 1, 0])


def _check_self_adjoint(B, I, what):
    scale = np.maximum(1.0, np.abs(I).max(axis=(-1, -2)) * np.abs(B).max(axis=(-1, -2)))
    if np.any(self_adjoint_defect(B, I) > 1e-8 * scale):
        raise ValueError(f"{what} is not self-adjoint with respect to its metric")


# --------------------------------------------------------------------------
# jets


@dataclass(frozen=True)
class SurfaceJet:
    """First fundamental form and shape operator of a surface at a point.

    ``I`` and ``B`` may carry leading batch axes.  The intrinsic curvature is
    never stored; it always comes from the Gauss equation ``K = -1 + det B``.
    """

    I: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        I = as_matrix(self.I)
        B = as_matrix(self.B)
        I, B = np.broadcast_arrays(I, B)
        object.__setattr__(self, "I", np.array(I))
        object.__setattr__(self, "B", np.array(B))
        _check_self_adjoint(self.B, self.I, "B")

    @property
    def II(self):
        return symmetric_part(self.I @ self.B)

    @property
    def III(self):
        return pullback(self.I, self.B)

    @property
    def H(self):
        return tr2(self.B)

    @property
    def Ke(self):
        return det2(self.B)

    @property
    def K(self):
        return -1.0 + det2(self.B)

    @property
    def principal_curvatures(self):
        return principal_curvatures(self.B)

    def __len__(self):
        return self.I.shape[0] if self.I.ndim > 2 else 1

    def __getitem__(self, idx):
        return SurfaceJet(self.I[idx], self.B[idx])


@dataclass(frozen=True)
class InfinityJet:
    """Metric ``I*`` and shape operator ``B*`` at infinity."""

    Istar: np.ndarray
    Bstar: np.ndarray

    def __post_init__(self):
        I = as_matrix(self.Istar)
        B = as_matrix(self.Bstar)
        I, B = np.broadcast_arrays(I, B)
        object.__setattr__(self, "Istar", np.array(I))
        object.__setattr__(self, "Bstar", np.array(B))
        _check_self_adjoint(self.Bstar, self.Istar, "B*")

    @classmethod
    def from_forms(cls, Istar, IIstar) -> "InfinityJet":
        Istar = as_matrix(Istar)
        return cls(Istar, inv2(Istar) @ as_matrix(IIstar))

    @property
    def IIstar(self):
        return symmetric_part(self.Istar @ self.Bstar)

    @property
    def IIIstar(self):
        return pullback(self.Istar, self.Bstar)

    @property
    def Hstar(self):
        return tr2(self.Bstar)

    @property
    def IIstar0(self):
        """Trace-free part of ``II*`` with respect to ``I*``."""
        return self.IIstar - 0.5 * self.Hstar[..., None, None] * self.Istar

    @property
    def principal_curvatures(self):
        return principal_curvatures(self.Bstar)

    def __len__(self):
        return self.Istar.shape[0] if self.Istar.ndim > 2 else 1

    def __getitem__(self, idx):
        return InfinityJet(self.Istar[idx], self.Bstar[idx])


def _cayley(B):
    """Return ``(E+B)^-1 (E-B)`` and ``E+B``; raise where ``E+B`` is singular."""
    ep = EYE + B
    d = det2(ep)
    if np.any(np.abs(d) < SINGULAR_DET):
        raise SingularTransform(
            "det(E + B) vanishes: a principal curvature equals -1, "
            "the transform to/from infinity is undefined there"
        )
    return inv2(ep) @ (EYE - B), ep


def to_infinity(jet: SurfaceJet) -> InfinityJet:
    """Forms at infinity: ``I* = 1/2 I((E+B)., (E+B).)``, ``B* = (E+B)^-1 (E-B)``."""
    bstar, ep = _cayley(jet.B)
    return InfinityJet(0.5 * pullback(jet.I, ep), bstar)


def from_infinity(jet: InfinityJet) -> SurfaceJet:
    """Inverse of :func:`to_infinity`; the same formula with the roles swapped."""
    b, ep = _cayley(jet.Bstar)
    return SurfaceJet(0.5 * pullback(jet.Istar, ep), b)


def second_form_at_infinity_from_surface(jet: SurfaceJet):
    """``II* = 1/2 I((E+B)., (E-B).)`` computed straight from ``(I, B)``."""
    return 0.5 * pullback(jet.I, EYE + jet.B, EYE - jet.B)


def curvature_at_infinity(K, H, Ke):
    """Curvature of ``I*``: ``K* = 2K / (1 + H + K_e)``."""
    denom = 1.0 + np.asarray(H, dtype=float) + np.asarray(Ke, dtype=float)
    if np.any(np.abs(denom) < SINGULAR_DET):
        raise SingularTransform("1 + H + K_e vanishes")
    return 2.0 * np.asarray(K, dtype=float) / denom


def mean_curvature_at_infinity(B):
    """``H* = (2 - 2 det B) / (1 + tr B + det B)``."""
    B = as_matrix(B)
    t, d = tr2(B), det2(B)
    denom = 1.0 + t + d
    if np.any(np.abs(denom) < SINGULAR_DET):
        raise SingularTransform("1 + tr B + det B vanishes")
    return (2.0 - 2.0 * d) / denom


def mean_curvature_at_infinity_trace(B):
    """``H* = tr((E+B)^-1 (E-B))``, the defining route."""
    bstar, _ = _cayley(as_matrix(B))
    return tr2(bstar)


def equidistant_metric(jet: SurfaceJet, rho):
    """Metric on the leaf at distance ``rho``: ``I((cosh r E + sinh r B)., same)``."""
    rho = np.asarray(rho, dtype=float)[..., None, None]
    a = np.cosh(rho) * EYE + np.sinh(rho) * jet.B
    return pullback(jet.I, a)


def equidistant_metric_from_infinity(jet: InfinityJet, rho):
    """The same leaf metric as ``1/2 e^{2r} I* + II* + 1/2 e^{-2r} III*``."""
    rho = np.asarray(rho, dtype=float)[..., None, None]
    return 0.5 * np.exp(2 * rho) * jet.Istar + jet.IIstar + 0.5 * np.exp(-2 * rho) * jet.IIIstar


def principal_curvatures(B):
    """Eigenvalues of ``B``, sorted ascending along the last axis.

    The spectrum is real for an operator that is self-adjoint for some
    metric; a tiny negative discriminant from rounding is clipped to zero.
    The two labels carry no meaning beyond this ordering.
    """
    B = as_matrix(B)
    t, d = tr2(B), det2(B)
    disc = np.sqrt(np.clip(0.25 * t * t - d, 0.0, None))
    return np.stack([0.5 * t - disc, 0.5 * t + disc], axis=-1)


def horospherically_convex(B, I=None):
    """True where both principal curvatures lie strictly inside (-1, 1)."""
    B = as_matrix(B)
    if I is not None:
        _check_self_adjoint(B, as_matrix(I), "B")
    k = principal_curvatures(B)
    return np.all((k > -1.0) & (k < 1.0), axis=-1)


# --------------------------------------------------------------------------
# Codazzi equation at infinity


@dataclass(frozen=True)
class JetGrid:
    """InfinityJets sampled on a uniform Cartesian grid.

    ``Istar`` and ``Bstar`` have shape ``(nx, ny, 2, 2)``; node ``(i, j)``
    sits at ``origin + i*h + 1j*j*h`` in the complex coordinate ``z = x + iy``.
    """

    origin: complex
    h: float
    Istar: np.ndarray
    Bstar: np.ndarray

    @classmethod
    def sample(cls, field: Callable[[complex], InfinityJet], origin, h, nx, ny) -> "JetGrid":
        I = np.empty((nx, ny, 2, 2))
        B = np.empty((nx, ny, 2, 2))
        for i in range(nx):
            for j in range(ny):
                jet = field(origin + i * h + 1j * j * h)
                I[i, j] = jet.Istar
                B[i, j] = jet.Bstar
        return cls(complex(origin), float(h), I, B)

    @property
    def shape(self):
        return self.Istar.shape[:2]


def _christoffel(g_c, dg_x, dg_y):
    """Christoffel symbols ``G[k, i, j]`` from a metric and its two partials."""
    ginv = inv2(g_c)
    dg = (dg_x, dg_y)
    gam = np.zeros((2, 2, 2))
    for k in range(2):
        for i in range(2):
            for j in range(2):
                gam[k, i, j] = 0.5 * sum(
                    ginv[k, l] * (dg[i][l, j] + dg[j][l, i] - dg[l][i, j]) for l in range(2)
                )
    return gam


def _codazzi_from_stencil(I_st, B_st, h, connection):
    """Residual at the centre of a 5-point stencil ``[c, +x, -x, +y, -y]``."""
    if connection == "transported":
        # (E+B)^-1 nabla((E+B) .) with nabla the Levi-Civita connection of I
        jets = from_infinity(InfinityJet(I_st, B_st))
        g = jets.I
        ep = EYE + jets.B
        carrier = ep @ B_st
        outer = inv2(ep[0])
    elif connection == "levi-civita":
        g = I_st
        carrier = B_st
        outer = EYE
    else:
        raise ValueError(f"unknown connection {connection!r}")
    dg_x = (g[1] - g[2]) / (2 * h)
    dg_y = (g[3] - g[4]) / (2 * h)
    gam = _christoffel(g[0], dg_x, dg_y)
    # V_x = carrier e_x (column 0), V_y = carrier e_y (column 1)
    dVy_dx = (carrier[1][:, 1] - carrier[2][:, 1]) / (2 * h)
    dVx_dy = (carrier[3][:, 0] - carrier[4][:, 0]) / (2 * h)
    Vx = carrier[0][:, 0]
    Vy = carrier[0][:, 1]
    nab_x_Vy = dVy_dx + gam[:, 0, :] @ Vy
    nab_y_Vx = dVx_dy + gam[:, 1, :] @ Vx
    r = outer @ (nab_x_Vy - nab_y_Vx)
    return float(np.sqrt(r @ I_st[0] @ r))


def codazzi_residual_at_infinity(field, point, h=None, connection="transported") -> float:
    """Norm of a centred-difference approximation of ``d^{nabla*} B*``.

    ``field`` is either a :class:`JetGrid` (then ``point`` is a node index
    ``(i, j)`` and ``h`` defaults to the grid step) or a callable returning
    the InfinityJet at a complex point (then ``h`` is required).

    With ``connection="transported"`` the connection of ``I*`` is built as
    ``(E+B)^-1 nabla((E+B) y)`` from the surface ``(I, B)`` recovered by
    :func:`from_infinity`; ``"levi-civita"`` uses Christoffel symbols of
    ``I*`` directly.  The residual is measured in the ``I*`` norm and is
    O(h^2) for smooth fields.
    """
    if isinstance(field, JetGrid):
        if h is not None and not np.isclose(h, field.h):
            raise ValueError(f"step {h} does not match grid step {field.h}")
        i, j = point
        nx, ny = field.shape
        if i - 1 < 0 or j - 1 < 0 or i + 1 >= nx or j + 1 >= ny:
            raise GridTooCoarse(
                f"node {(i, j)} needs neighbours on both sides in a {nx}x{ny} grid"
            )
        idx = [(i, j), (i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)]
        I_st = np.array([field.Istar[p] for p in idx])
        B_st = np.array([field.Bstar[p] for p in idx])
        return _codazzi_from_stencil(I_st, B_st, field.h, connection)
    if h is None or not h > 0:
        raise ValueError("a positive step h is required for a callable field")
    z = complex(point)
    pts = [z, z + h, z - h, z + 1j * h, z - 1j * h]
    jets = [field(p) for p in pts]
    I_st = np.array([jt.Istar for jt in jets])
    B_st = np.array([jt.Bstar for jt in jets])
    return _codazzi_from_stencil(I_st, B_st, h, connection)


def random_surface_jets(rng: np.random.Generator, n: int, kmin=-0.8, kmax=2.0) -> SurfaceJet:
    """``n`` random valid jets with principal curvatures in ``[kmin, kmax]``.

    ``I`` has eigenvalues in [0.5, 2] and ``B`` is diagonal in an
    ``I``-orthonormal frame, so it is self-adjoint by construction.
    """
    ang = rng.uniform(0, np.pi, n)
    c, s = np.cos(ang), np.sin(ang)
    R = np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)
    lam = rng.uniform(0.5, 2.0, (n, 2))
    I = R @ (lam[:, :, None] * transpose(R))
    # P = I^{-1/2} R2 is I-orthonormal
    isqrt = R @ ((lam ** -0.5)[:, :, None] * transpose(R))
    ang2 = rng.uniform(0, np.pi, n)
    c2, s2 = np.cos(ang2), np.sin(ang2)
    R2 = np.stack([np.stack([c2, -s2], -1), np.stack([s2, c2], -1)], -2)
    P = isqrt @ R2
    k = rng.uniform(kmin, kmax, (n, 2))
    B = P @ (k[:, :, None] * inv2(P))
    return SurfaceJet(I, B)
