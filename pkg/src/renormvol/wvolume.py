"""W-volume, dual volume and renormalized volume on the Fuchsian tube.

The tube ``N_r = S x [-r, r]`` over a closed hyperbolic surface ``S`` of
genus ``g`` has leaf metric ``cosh(t)^2 m`` at signed distance ``t`` from the
totally geodesic core, so every quantity is explicit:

    V = A_S (r + sinh r cosh r),   int H da = 4 A_S sinh r cosh r,   W = A_S r

with ``A_S = 2 pi (2 g - 2)``.  Variational formulas are checked on a
single boundary point with ``m = E`` (the integrands are constant) and then
multiplied by the boundary area.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple

import mpmath
import numpy as np
from scipy import integrate

from .forms import EYE, SurfaceJet, pairing, to_infinity


@dataclass(frozen=True)
class FuchsianTube:
    genus: int
    r: float

    def __post_init__(self):
        if int(self.genus) != self.genus or self.genus < 2:
            raise ValueError(f"genus must be an integer >= 2, got {self.genus}")
        if not self.r > 0 or not math.isfinite(self.r):
            raise ValueError(f"half-width r must be positive, got {self.r}")

    @property
    def core_area(self) -> float:
        return 2 * math.pi * (2 * self.genus - 2)

    def leaf_area(self, t: float) -> float:
        return self.core_area * math.cosh(t) ** 2

    def boundary_jet(self, r: Optional[float] = None) -> SurfaceJet:
        """``(I, B)`` at one boundary point, ``m = E``: ``I = cosh^2 r E``, ``B = tanh r E``."""
        r = self.r if r is None else r
        return SurfaceJet(math.cosh(r) ** 2 * EYE, math.tanh(r) * EYE)


@dataclass(frozen=True)
class TubeGeometry:
    V: float
    V_quadrature: float
    boundary_area: float      # both components
    mean_curvature: float     # H = 2 tanh r on each component
    int_H_da: float

    @property
    def quadrature_defect(self) -> float:
        return abs(self.V - self.V_quadrature)


def tube_geometry(t: FuchsianTube) -> TubeGeometry:
    r, A = t.r, t.core_area
    V = A * (r + math.sinh(r) * math.cosh(r))
    Vq, _ = integrate.quad(t.leaf_area, -r, r, epsabs=0, epsrel=1e-13, limit=200)
    H = 2 * math.tanh(r)
    area = 2 * t.leaf_area(r)
    return TubeGeometry(V, Vq, area, H, 4 * A * math.sinh(r) * math.cosh(r))


def w_volume(V: float, int_H_da: float) -> float:
    """``W = V - int H da / 4``."""
    return V - 0.25 * int_H_da


def dual_volume(V: float, int_H_da: float) -> float:
    """``V* = V - int H da / 2``; ``(V + V*) / 2 == W``."""
    return V - 0.5 * int_H_da


def self_duality_defect(V: float, int_H_da: float) -> float:
    return abs(0.5 * (V + dual_volume(V, int_H_da)) - w_volume(V, int_H_da))


def tube_w(t: FuchsianTube) -> float:
    g = tube_geometry(t)
    return w_volume(g.V, g.int_H_da)


# ------------------------------------------------------------------ renormalized limit


@dataclass
class RenormalizedLimit:
    rho: List[float]
    L: List[float]
    limit: float
    fit: Tuple[float, float]        # (a, b) in a + b e^{-2 rho}
    V_R: float
    V_R_expected: float
    decay_slope: float

    @property
    def defect(self) -> float:
        return abs(self.V_R - self.V_R_expected)


def limit_curve(t: FuchsianTube, rho, dps: int = 40) -> np.ndarray:
    """``L(rho) = V(dN, dN_rho) - A(dN_rho)/2 - sum_i 2 pi rho (g_i - 1)`` for both ends.

    Evaluated in extended precision because the volume and half-area both
    grow like ``e^{2 rho}`` and cancel to ``O(1)``.
    """
    A = mpmath.mpf(t.core_area)
    out = []
    with mpmath.workdps(dps):
        r = mpmath.mpf(t.r)
        for p in np.atleast_1d(rho):
            p = mpmath.mpf(float(p))
            s = r + p
            shell = 2 * A * (p / 2 + (mpmath.sinh(2 * s) - mpmath.sinh(2 * r)) / 4)
            area = 2 * A * mpmath.cosh(s) ** 2
            euler = 2 * 2 * mpmath.pi * p * (t.genus - 1)
            out.append(float(shell - area / 2 - euler))
    return np.array(out)


def renormalized_limit(t: FuchsianTube, rho_max: float = 10.0, steps: int = 201) -> RenormalizedLimit:
    """Sample ``L`` on ``[0, rho_max]``, extrapolate and form ``V_R = V(N) + lim L``.

    The limit comes from a least-squares fit of ``a + b e^{-2 rho}`` on the
    last third of the samples; the decay slope is the fitted slope of
    ``log |L - lim|`` over the samples where that difference is resolvable.
    """
    if not rho_max > 0:
        raise ValueError("rho_max must be positive")
    if steps < 6:
        raise ValueError("need at least 6 samples")
    rho = np.linspace(0.0, rho_max, steps)
    L = limit_curve(t, rho)
    tail = slice(2 * steps // 3, steps)
    X = np.column_stack([np.ones_like(rho[tail]), np.exp(-2 * rho[tail])])
    (a, b), *_ = np.linalg.lstsq(X, L[tail], rcond=None)
    gap = np.abs(L - a)
    ok = gap > 1e-12 * max(1.0, abs(a))
    ok[0] = False
    slope = float(np.polyfit(rho[ok], np.log(gap[ok]), 1)[0]) if ok.sum() >= 2 else float("nan")
    geo = tube_geometry(t)
    W = w_volume(geo.V, geo.int_H_da)
    return RenormalizedLimit(
        rho=[float(x) for x in rho], L=[float(x) for x in L], limit=float(a),
        fit=(float(a), float(b)), V_R=geo.V + float(a),
        V_R_expected=W - 2 * math.pi * (t.genus - 1), decay_slope=slope,
    )


# ------------------------------------------------------------------ Schlafli checks


@dataclass
class SchlafliCheck:
    dW_dr: float              # central difference of W over the tube family
    formula: float            # boundary integral, both components
    alternative: float        # second algebraic form of the same variation
    per_component: float
    defect: float
    order: float              # observed order of the defect under dr halving
    dr: float
    sign: int                 # overall sign carried by the formula


def _central(fn, r, dr):
    return (fn(r + dr) - fn(r - dr)) / (2 * dr)


def _boundary_variation(t: FuchsianTube, dr: float):
    """Integrands of the two boundary-data forms of dW at one point, per unit of ``r``."""
    r = t.r
    jet = t.boundary_jet(r)
    I, II, H = jet.I, jet.II, float(jet.H)
    dI = _central(lambda s: t.boundary_jet(s).I, r, dr)
    dII = _central(lambda s: t.boundary_jet(s).II, r, dr)
    dH = _central(lambda s: float(t.boundary_jet(s).H), r, dr)
    da = math.sqrt(np.linalg.det(I)) * t.core_area   # one component, m = E
    first = 0.25 * (dH + pairing(dI, II - 0.5 * H * I, I)) * da
    second = 0.25 * pairing(dII - 0.5 * H * dI, I, I) * da
    return first, second


def _infinity_data(t: FuchsianTube, s: float):
    jet = to_infinity(t.boundary_jet(s))
    return jet.Istar, jet.IIstar, float(jet.Hstar)


def _infinity_variation(t: FuchsianTube, dr: float):
    """Integrands of the at-infinity forms of dW at one point (one component)."""
    r = t.r
    Is, IIs, Hs = _infinity_data(t, r)
    dIs = _central(lambda s: _infinity_data(t, s)[0], r, dr)
    dIIs = _central(lambda s: _infinity_data(t, s)[1], r, dr)
    dHs = _central(lambda s: _infinity_data(t, s)[2], r, dr)
    da = math.sqrt(np.linalg.det(Is)) * t.core_area
    traceless = IIs - 0.5 * Hs * Is
    first = -0.25 * pairing(dIIs - 0.5 * Hs * dIs, Is, Is) * da
    second = -0.25 * (dHs + pairing(dIs, traceless, Is)) * da
    return first, second


def _schlafli(t, dr, variation, sign):
    def defect_at(h):
        a, _ = variation(t, h)
        return abs(2 * a - _central(lambda s: tube_w(FuchsianTube(t.genus, s)), t.r, h))

    first, second = variation(t, dr)
    dW = _central(lambda s: tube_w(FuchsianTube(t.genus, s)), t.r, dr)
    errs = [defect_at(h) for h in (1e-3, 5e-4)]
    order = (math.log2(errs[0] / errs[1]) if min(errs) > 1e-14 else float("inf"))
    return SchlafliCheck(
        dW_dr=dW, formula=2 * first, alternative=2 * second, per_component=first,
        defect=abs(2 * first - dW), order=order, dr=dr, sign=sign,
    )


def schlafli_fd_check(t: FuchsianTube, dr: float = 1e-4) -> SchlafliCheck:
    """``dW/dr`` against ``1/4 int (dH + <dI, II - H I / 2>) da`` over both ends.

    The variations ``dH, dI`` come from centred differences of the boundary
    data, so the defect is ``O(dr^2)``; the exact value is ``A_S``.
    """
    return _schlafli(t, dr, _boundary_variation, +1)


def schlafli_at_infinity_check(t: FuchsianTube, dr: float = 1e-4) -> SchlafliCheck:
    """``dW/dr`` against ``-1/4 int <dII* - H* dI* / 2, I*> da*`` over both ends.

    The data at infinity is computed from the boundary jets with
    :func:`~renormvol.forms.to_infinity`; ``alternative`` is the form
    ``-1/4 int (dH* + <dI*, II*_0>) da*``.  Note the overall minus sign.
    """
    return _schlafli(t, dr, _infinity_variation, -1)


# ------------------------------------------------------------------ constant curvature at infinity


@dataclass
class ConstantCurvatureW:
    r0: float
    W_M: float
    K_star: float                      # curvature of I* at r0 (should be -1)
    mesh_W_M: Optional[float] = None   # cross-check on the genus-2 mesh
    mesh_defect: Optional[float] = None
    mesh_vertices: Optional[int] = None
    probe: Optional[dict] = None


def curvature_at_infinity_of_leaf(t: FuchsianTube, r: float) -> float:
    """``K* = K_m / (e^{2r}/2) = -2 e^{-2r}`` read off the transformed boundary jet."""
    Is = to_infinity(t.boundary_jet(r)).Istar
    return -1.0 / (np.sqrt(np.linalg.det(Is)))


def w_at_constant_curvature(t: FuchsianTube, mesh_level: Optional[int] = None,
                            probe_directions: int = 0, seed: int = 0) -> ConstantCurvatureW:
    """Leaf shift with ``K* = -1`` (``r0 = log(2)/2``) and ``W_M = A_S r0``.

    With ``mesh_level`` set (genus 2 only), ``W_M`` is cross-checked by
    maximising the W-side objective over conformal factors of the
    genus-2 mesh scaled to carry ``I* = e^{2r} m / 2`` and, if
    ``probe_directions > 0``, by sampling constrained second differences.
    """
    r0 = 0.5 * math.log(2.0)
    out = ConstantCurvatureW(r0=r0, W_M=t.core_area * r0,
                             K_star=curvature_at_infinity_of_leaf(t, r0))
    if mesh_level is None:
        return out
    if t.genus != 2:
        raise ValueError("the mesh cross-check uses the genus-2 fixture")
    from .fixtures import genus2_octagon
    from .liouville import SolverConfig, extremum_character_check, solve_uniformization
    from .mesh import angle_defects, stiffness_matrix

    hyp = genus2_octagon(mesh_level)
    m = hyp.rescaled(hyp.lengths * math.exp(t.r) / math.sqrt(2.0))
    sol = solve_uniformization(m, SolverConfig(residual_tolerance=1e-11))
    phi = sol.phi
    Wm = stiffness_matrix(m)
    change = -0.25 * (float(phi @ (Wm @ phi)) + 2.0 * float(angle_defects(m) @ phi))
    out.mesh_W_M = 2.0 * (0.5 * t.core_area * t.r + change)
    out.mesh_defect = abs(out.mesh_W_M - out.W_M)
    out.mesh_vertices = m.n_vertices
    if probe_directions:
        out.probe = extremum_character_check(m, phi, probe_directions, seed=seed)
    return out


# ------------------------------------------------------------------ report


@dataclass
class VolumeReport:
    genus: int
    r: float
    rho_max: float
    V: float
    int_H_da: float
    W: float
    V_dual: float
    V_R: float
    V_R_expected: float
    limit: float
    decay_slope: float
    samples: List[Tuple[float, float]] = field(default_factory=list)

    def invariants(self) -> dict:
        return {
            "W = V - intH/4": abs(self.W - (self.V - 0.25 * self.int_H_da)),
            "V* = V - intH/2": abs(self.V_dual - (self.V - 0.5 * self.int_H_da)),
            "W = (V + V*)/2": abs(self.W - 0.5 * (self.V + self.V_dual)),
            "V_R = W - sum pi (g-1)": abs(self.V_R - self.V_R_expected),
        }

    def to_dict(self, with_samples=False) -> dict:
        d = asdict(self)
        if not with_samples:
            d.pop("samples")
        d["invariants"] = self.invariants()
        return d

    def curve_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rho", "L"])
        for rho, L in self.samples:
            w.writerow([repr(rho), repr(L)])
        return buf.getvalue()


def volume_report(t: FuchsianTube, rho_max: float = 10.0, steps: int = 201) -> VolumeReport:
    g = tube_geometry(t)
    lim = renormalized_limit(t, rho_max, steps)
    return VolumeReport(
        genus=t.genus, r=t.r, rho_max=rho_max, V=g.V, int_H_da=g.int_H_da,
        W=w_volume(g.V, g.int_H_da), V_dual=dual_volume(g.V, g.int_H_da),
        V_R=lim.V_R, V_R_expected=lim.V_R_expected, limit=lim.limit,
        decay_slope=lim.decay_slope, samples=list(zip(lim.rho, lim.L)),
    )
