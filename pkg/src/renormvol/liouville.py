"""Discrete Liouville equation and functional on a :class:`~renormvol.mesh.TriMesh`.

Conventions (recorded in every report):

* ``Lap`` is the cotangent ``div grad`` (negative semi-definite);
* the residual is ``r = lam e^{2 phi} + K0 - Lap phi``, which vanishes
  exactly when ``K(e^{2 phi} h0) = -lam`` in the smooth limit, and equals
  ``e^{2c} - 1`` for a constant ``phi = c`` on a hyperbolic background;
* the functional is ``S = 1/(8 pi) sum [ |grad phi|^2 + lam e^{2 phi} + 2 phi K0 ] dA0``
  whose gradient is ``A r / (4 pi)``; ``S`` is strictly convex for ``lam > 0``.

Multiplying the residual by the vertex areas gives the assembled form
``A r = lam A e^{2 phi} + Theta0 + W phi`` (``Theta0`` the angle defects,
``W`` the cotangent stiffness), whose Jacobian ``W + 2 lam diag(A e^{2 phi})``
is symmetric positive definite.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NonConvergence, WrongTopology
from .mesh import TriMesh, angle_defects, stiffness_matrix, total_area, vertex_areas

CONVENTIONS = {
    "laplacian": "cotangent div-grad, negative semi-definite: (Lap u)_i = -(W u)_i / A_i",
    "residual": "r = lam*exp(2 phi) + K0 - Lap(phi); r == 0 <=> curvature of exp(2 phi) h0 is -lam",
    "functional": "S = (1/(8 pi)) * sum(|grad phi|^2 + lam*exp(2 phi) + 2 phi K0) dA0",
    "vertex_area": "one third of incident face areas",
    "theta_vs_schwarzian": "theta(phi) = S(g) for g: domain -> upper half-plane",
}


@dataclass(frozen=True)
class LineSearch:
    """Armijo backtracking on the convex functional."""

    factor: float = 0.5
    c1: float = 1e-4
    max_halvings: int = 40

    def __post_init__(self):
        if not 0 < self.factor < 1:
            raise ValueError("line-search factor must lie in (0, 1)")
        if not 0 < self.c1 < 1:
            raise ValueError("Armijo constant must lie in (0, 1)")


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 30
    residual_tolerance: float = 1e-10
    line_search: LineSearch = field(default_factory=LineSearch)
    target_curvature: float = 1.0       # lam: the solve targets K = -lam
    area_constraint: Optional[float] = None
    regularization: float = 1e-14       # relative diagonal shift in the Newton solve

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.residual_tolerance > 0:
            raise ValueError("residual_tolerance must be > 0")
        if not self.target_curvature > 0:
            raise ValueError("target_curvature (lam) must be > 0")
        if self.area_constraint is not None and not self.area_constraint > 0:
            raise ValueError("area_constraint must be > 0")
        if self.regularization < 0:
            raise ValueError("regularization must be >= 0")


@dataclass
class SolveResult:
    phi: np.ndarray
    converged: bool
    iterations: int
    residual_history: List[float]
    lam: float                 # curvature target actually achieved (after any area shift)
    shift: float               # constant added to phi by the area constraint
    area_lumped: float         # sum A0 e^{2 phi}
    area_scaled: float         # sum of face areas of the scaled mesh
    curvature: dict            # statistics of the angle-defect curvature of the scaled mesh

    @property
    def residual(self) -> float:
        return self.residual_history[-1]


class _Problem:
    """Precomputed background operators for repeated evaluations."""

    def __init__(self, m: TriMesh, lam: float):
        self.mesh = m
        self.lam = float(lam)
        self.W = stiffness_matrix(m)
        self.A = vertex_areas(m)
        self.Theta = angle_defects(m)

    def assembled(self, phi):
        return self.lam * self.A * np.exp(2 * phi) + self.Theta + self.W @ phi

    def residual(self, phi):
        return self.assembled(phi) / self.A

    def functional(self, phi):
        dirichlet = float(phi @ (self.W @ phi))
        rest = float(np.sum(self.A * (self.lam * np.exp(2 * phi)) + 2.0 * phi * self.Theta))
        return (dirichlet + rest) / (8 * math.pi)

    def jacobian(self, phi):
        return (self.W + sp.diags(2 * self.lam * self.A * np.exp(2 * phi))).tocsc()


def _phi(m, phi):
    return m.phi if phi is None else np.asarray(phi, dtype=float)


def liouville_residual(m: TriMesh, phi=None, lam: float = 1.0) -> np.ndarray:
    """Per-vertex ``lam e^{2 phi} + K0 - Lap0 phi`` (background operators)."""
    return _Problem(m, lam).residual(_phi(m, phi))


def liouville_functional(m: TriMesh, phi=None, lam: float = 1.0) -> float:
    """``1/(8 pi) sum [ |grad phi|^2 + lam e^{2 phi} + 2 phi K0 ] dA0``.

    At ``phi = 0`` this is ``lam * area / (8 pi)``, i.e. ``1/2`` on a
    hyperbolic genus-2 surface.
    """
    return _Problem(m, lam).functional(_phi(m, phi))


def functional_gradient(m: TriMesh, phi=None, lam: float = 1.0) -> np.ndarray:
    """Exact gradient of :func:`liouville_functional`: ``A r / (4 pi)``."""
    return _Problem(m, lam).assembled(_phi(m, phi)) / (4 * math.pi)


def _curvature_stats(m: TriMesh, phi) -> dict:
    s = m.with_phi(phi)
    K = angle_defects(s, scaled=True) / vertex_areas(s, scaled=True)
    return {"min": float(K.min()), "max": float(K.max()), "mean": float(K.mean())}


def solve_uniformization(m: TriMesh, cfg: SolverConfig = SolverConfig(), phi0=None) -> SolveResult:
    """Newton iteration with Armijo backtracking for ``r(phi) = 0``.

    ``phi0`` defaults to zero.  Raises :class:`WrongTopology` when the
    Euler characteristic is non-negative (no metric of curvature ``-lam``)
    and :class:`NonConvergence` (carrying the best iterate) when the
    iteration budget runs out.
    """
    lam = cfg.target_curvature
    chi = m.euler_characteristic
    if chi >= 0:
        raise WrongTopology(f"Euler characteristic {chi} >= 0 admits no metric of curvature {-lam:g}")
    P = _Problem(m, lam)
    phi = np.zeros(m.n_vertices) if phi0 is None else np.array(phi0, dtype=float)
    ls = cfg.line_search

    F = P.assembled(phi)
    S = P.functional(phi)
    history = [float(np.max(np.abs(F / P.A)))]
    it = 0
    while history[-1] >= cfg.residual_tolerance and it < cfg.max_iterations:
        it += 1
        J = P.jacobian(phi)
        if cfg.regularization:
            J = J + sp.identity(m.n_vertices, format="csc") * (cfg.regularization * J.diagonal().max())
        step = spla.spsolve(J, -F)
        slope = float(F @ step) / (4 * math.pi)
        t = 1.0
        for _ in range(ls.max_halvings):
            trial = phi + t * step
            S_trial = P.functional(trial)
            F_trial = P.assembled(trial)
            if S_trial <= S + ls.c1 * t * slope:
                break
            # near the solution S differences drown in roundoff; fall back on the residual
            if np.max(np.abs(F_trial / P.A)) < history[-1] and abs(S_trial - S) <= 1e-13 * max(1.0, abs(S)):
                break
            t *= ls.factor
        phi, F, S = trial, F_trial, S_trial
        history.append(float(np.max(np.abs(F / P.A))))

    converged = history[-1] < cfg.residual_tolerance
    shift = 0.0
    lam_out = lam
    lumped = float(np.sum(P.A * np.exp(2 * phi)))
    if cfg.area_constraint is not None:
        shift = 0.5 * math.log(cfg.area_constraint / lumped)
        phi = phi + shift
        lam_out = lam * math.exp(-2 * shift)
        lumped = float(np.sum(P.A * np.exp(2 * phi)))
    result = SolveResult(
        phi=phi, converged=converged, iterations=it, residual_history=history,
        lam=lam_out, shift=shift, area_lumped=lumped,
        area_scaled=total_area(m.with_phi(phi), scaled=True),
        curvature=_curvature_stats(m, phi),
    )
    if not converged:
        raise NonConvergence(
            f"residual {history[-1]:.3e} above {cfg.residual_tolerance:g} after {it} iterations",
            result=result,
        )
    return result


# ------------------------------------------------------------------ extremum character


def w_objective(m: TriMesh, phi, lam: float = 1.0, w0: float = 0.0) -> float:
    """W-side objective ``w0 - 2 pi S``: maximised where ``S`` is minimised."""
    return w0 - 2 * math.pi * liouville_functional(m, phi, lam)


def _retract(A, phi, v):
    """Constant shift putting ``phi + v`` back on the level set of ``sum A e^{2 phi}``."""
    area = np.sum(A * np.exp(2 * phi))
    return phi + v + 0.5 * math.log(area / np.sum(A * np.exp(2 * (phi + v))))


def project_area_preserving(m: TriMesh, phi, u) -> np.ndarray:
    """Remove the component of ``u`` that changes ``sum A e^{2 phi}`` to first order."""
    w = vertex_areas(m) * np.exp(2 * np.asarray(phi, dtype=float))
    u = np.asarray(u, dtype=float)
    return u - float(u @ w) / float(w.sum())


def second_difference(m: TriMesh, phi, u, eps=1e-3, lam=1.0, side="S") -> float:
    """``[F(phi_+) + F(phi_-) - 2 F(phi)] / eps^2`` along the area-constrained curve.

    ``phi_+-`` is ``phi +- eps u`` retracted onto the fixed-area set by a
    constant shift.  ``side`` selects the functional ``S`` or the W-side
    objective ``-2 pi S``.
    """
    u = np.asarray(u, dtype=float)
    if not np.any(u):
        return 0.0
    phi = np.asarray(phi, dtype=float)
    P = _Problem(m, lam)
    f = P.functional if side == "S" else (lambda p: -2 * math.pi * P.functional(p))
    plus, minus = _retract(P.A, phi, eps * u), _retract(P.A, phi, -eps * u)
    return (f(plus) + f(minus) - 2 * f(phi)) / eps**2


def extremum_character_check(m: TriMesh, phi_star, n_directions: int = 20, seed: int = 0,
                             eps: float = 1e-3, lam: float = 1.0, reject_below: float = 1e-8) -> dict:
    """Sign and size of constrained second differences at a solution.

    Directions are random vertex fields projected to be area preserving;
    those whose projection is (numerically) zero are rejected and counted.
    ``c`` is the smallest ``|second difference| / ||u||_A^2``.
    """
    rng = np.random.default_rng(seed)
    A = vertex_areas(m)
    w_side, s_side, ratios = [], [], []
    rejected = 0
    while len(w_side) < n_directions:
        raw = rng.standard_normal(m.n_vertices)
        u = project_area_preserving(m, phi_star, raw)
        norm2 = float(np.sum(A * u * u))
        if norm2 < reject_below * float(np.sum(A * raw * raw)):
            rejected += 1
            continue
        d_w = second_difference(m, phi_star, u, eps, lam, side="W")
        d_s = second_difference(m, phi_star, u, eps, lam, side="S")
        w_side.append(d_w)
        s_side.append(d_s)
        ratios.append(abs(d_w) / norm2)
    w_signs = sorted({int(np.sign(v)) for v in w_side})
    s_signs = sorted({int(np.sign(v)) for v in s_side})
    c = float(min(ratios))
    return {
        "n_directions": n_directions,
        "rejected": rejected,
        "eps": eps,
        "w_side_second_differences": [float(v) for v in w_side],
        "s_side_second_differences": [float(v) for v in s_side],
        "w_side_signs": w_signs,
        "s_side_signs": s_signs,
        "uniform_sign": w_signs == [-1] and s_signs == [1],
        "c": c,
        "nondegenerate": c > 0,
    }


def solver_report(result: SolveResult, m: TriMesh, cfg: SolverConfig) -> dict:
    """Self-describing summary of a solve (JSON-serialisable, no timings)."""
    chi = m.euler_characteristic
    return {
        "mesh": {"vertices": m.n_vertices, "edges": m.n_edges, "faces": m.n_faces,
                 "genus": m.genus, "euler_characteristic": chi},
        "config": {**asdict(cfg)},
        "converged": result.converged,
        "iterations": result.iterations,
        "residual_history": result.residual_history,
        "final_residual": result.residual,
        "achieved_lambda": result.lam,
        "area_shift": result.shift,
        "area_lumped": result.area_lumped,
        "area_scaled_mesh": result.area_scaled,
        "gauss_bonnet_area": 2 * math.pi * (-chi) / result.lam,
        "curvature_scaled_mesh": result.curvature,
        "functional_at_zero": liouville_functional(m, np.zeros(m.n_vertices), cfg.target_curvature),
        "functional_at_solution": liouville_functional(m, result.phi - result.shift,
                                                       cfg.target_curvature),
        "conventions": CONVENTIONS,
    }
