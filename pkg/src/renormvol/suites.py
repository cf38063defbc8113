"""Invariant suites run by the ``check`` command.

Each suite returns a list of :class:`Check` records.  An upper-bound check
passes when ``measured < tolerance`` (strict, so a zero tolerance always
fails); a ``within`` check passes when ``|measured - target| < tolerance``;
a lower-bound check passes when ``measured > tolerance`` and is not
affected by a global tolerance override.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional

import numpy as np

from . import epstein, fields, forms, liouville, mesh, schwarzian, wvolume
from . import fixtures
from .errors import WrongTopology
from .numdiff import convergence_order

EXACT_DEFECT = 1e-10   # below this at every step the FD defect is roundoff, not truncation


@dataclass
class Check:
    suite: str
    name: str
    measured: float
    tolerance: float
    relation: str = "<"          # "<", ">" or "within"
    target: Optional[float] = None
    detail: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        m = self.measured
        if m is None or (isinstance(m, float) and math.isnan(m)):
            return False
        if self.relation == "<":
            return m < self.tolerance
        if self.relation == ">":
            return m > self.tolerance
        return abs(m - self.target) < self.tolerance

    def to_dict(self) -> dict:
        d = {"suite": self.suite, "name": self.name, "measured": _clean(self.measured),
             "tolerance": self.tolerance, "relation": self.relation, "passed": self.passed}
        if self.target is not None:
            d["target"] = self.target
        if self.detail:
            d["detail"] = {k: _clean(v) for k, v in self.detail.items()}
        return d


def _clean(v):
    if isinstance(v, (np.floating, np.integer)):
        v = v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    return v


@dataclass(frozen=True)
class SuiteConfig:
    seed: int = 0
    n_jets: int = 10_000
    n_equidistant: int = 1_000
    rhos: tuple = (0.0, 0.25, 0.5, 1.0, 2.0)
    grid_step: float = 1e-4
    order_steps: tuple = (4e-3, 2e-3, 1e-3)
    codazzi_steps: tuple = (2e-2, 1e-2, 5e-3)
    mesh_levels: tuple = (16, 32)
    restarts: int = 5
    probe_directions: int = 20
    genus: int = 2
    r: float = 1.0
    rho_max: float = 10.0
    steps: int = 201
    dr: float = 1e-4
    tol: Optional[float] = None   # overrides every upper-bound tolerance


def _max(a) -> float:
    return float(np.max(np.abs(a)))


def _order_check(suite, name, errs, steps, half_width, extra=None):
    errs = [float(e) for e in errs]
    if max(errs) < EXACT_DEFECT:
        # roundoff at every step: the stencil is exact for this field
        return Check(suite, name, 2.0, half_width, "within", 2.0,
                     {"exact": True, "defects": errs, "steps": list(steps), **(extra or {})})
    order = convergence_order(errs, steps)
    return Check(suite, name, order, half_width, "within", 2.0,
                 {"defects": errs, "steps": list(steps), **(extra or {})})


# ------------------------------------------------------------------ forms


def forms_suite(cfg: SuiteConfig) -> List[Check]:
    rng = np.random.default_rng(cfg.seed)
    jets = forms.random_surface_jets(rng, cfg.n_jets)
    back = forms.from_infinity(forms.to_infinity(jets))
    err = max(_max(back.I - jets.I), _max(back.B - jets.B))
    out = [Check("forms", "involution", err, 1e-12, detail={"jets": cfg.n_jets})]

    Hstar = forms.mean_curvature_at_infinity(jets.B)
    Kstar = forms.curvature_at_infinity(jets.K, jets.H, jets.Ke)
    out.append(Check("forms", "gauss_at_infinity H*+K*=0", _max(Hstar + Kstar), 1e-12,
                     detail={"jets": cfg.n_jets}))
    out.append(Check("forms", "mean_curvature_at_infinity rational vs trace",
                     _max(forms.mean_curvature_at_infinity(jets.B)
                          - forms.mean_curvature_at_infinity_trace(jets.B)), 1e-12))

    sub = jets[: cfg.n_equidistant]
    sub_star = forms.to_infinity(sub)
    worst = 0.0
    for rho in cfg.rhos:
        a = forms.equidistant_metric(sub, rho)
        b = forms.equidistant_metric_from_infinity(sub_star, rho)
        worst = max(worst, _max(a - b))
    out.append(Check("forms", "equidistant metric: surface route vs infinity route", worst, 1e-11,
                     detail={"jets": cfg.n_equidistant, "rhos": list(cfg.rhos)}))
    return out


# ------------------------------------------------------------------ epstein


EXPANSION_FIELDS = ("flat", "halfplane", "disk", "annulus")
SOLUTION_FIELDS = ("halfplane", "disk", "strip", "annulus")


def epstein_suite(cfg: SuiteConfig) -> List[Check]:
    out = []
    worst, details = 0.0, {}
    for name in EXPANSION_FIELDS:
        f = fields.builtin_field(name)
        z = fields.default_point(f)
        for rho in (0.0, 1.0, 2.0):
            d = epstein.expansion_check(f, z, rho, cfg.grid_step)
            worst = max(worst, d)
            details[f"{name}/rho={rho:g}"] = d
            errs = [epstein.expansion_check(f, z, rho, h) for h in cfg.order_steps]
            out.append(_order_check("epstein", f"expansion order {name} rho={rho:g}", errs,
                                    cfg.order_steps, 0.2))
    out.insert(0, Check("epstein", "expansion_check", worst, 1e-6,
                        detail={"h": cfg.grid_step, **details}))

    ann = fields.builtin_field("annulus")
    z = fields.default_point(ann)
    jet_at = lambda p: epstein.infinity_jet(ann, p)  # noqa: E731
    errs = [forms.codazzi_residual_at_infinity(jet_at, z, h) for h in cfg.codazzi_steps]
    out.append(_order_check("epstein", "codazzi order (annulus)", errs, cfg.codazzi_steps, 0.3))
    out.append(Check("epstein", "codazzi residual (annulus)",
                     forms.codazzi_residual_at_infinity(jet_at, z, cfg.grid_step), 1e-5,
                     detail={"h": cfg.grid_step}))

    strip = fields.builtin_field("strip")
    out.append(Check("epstein", "strip theta = -1/2",
                     abs(epstein.theta(strip, fields.default_point(strip)) + 0.5), 1e-12))
    worst = 0.0
    for R in (2.0, math.e, 10.0):
        f = fields.builtin_field("annulus", R=R)
        for k in range(3):
            w = math.sqrt(R) * complex(math.cos(0.6 + 2 * k), math.sin(0.6 + 2 * k))
            worst = max(worst, abs(epstein.theta(f, w) - schwarzian.annulus_theta(R, w)))
    out.append(Check("epstein", "annulus theta closed form", worst, 1e-8))

    worst = 0.0
    for name in SOLUTION_FIELDS:
        f = fields.builtin_field(name)
        worst = max(worst, epstein.dbar_theta(f, fields.default_point(f), cfg.grid_step))
    out.append(Check("epstein", "dbar_theta on Liouville solutions", worst, 1e-6))
    q = fields.builtin_field("quadratic")
    out.append(Check("epstein", "dbar_theta negative control |z|^2",
                     epstein.dbar_theta(q, fields.default_point(q), cfg.grid_step), 1e-2, ">"))
    return out


# ------------------------------------------------------------------ schwarzian


KERNEL_POINTS = (0.3 + 0.2j, -0.7 + 1.1j, 1.5 - 0.4j, 2.2 + 0.9j)
COCYCLE_POINTS = (1.5 + 0.7j, 0.7 - 0.4j, -1.3 + 0.9j)


def schwarzian_suite(cfg: SuiteConfig) -> List[Check]:
    rng = np.random.default_rng(cfg.seed + 1)
    out = []
    worst_s, worst_fit = 0.0, 0.0
    for _ in range(10):
        a, b, c, d = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        T = schwarzian.mobius(a, b, c, d)
        worst_s = max(worst_s, max(abs(schwarzian.schwarzian(T, z)) for z in KERNEL_POINTS))
        worst_fit = max(worst_fit, schwarzian.mobius_fit_defect(T, KERNEL_POINTS) / max(
            1.0, max(abs(T(z)) for z in KERNEL_POINTS)))
    out.append(Check("schwarzian", "Mobius kernel S(T) = 0", worst_s, 1e-10))
    out.append(Check("schwarzian", "Mobius three-point fit", worst_fit, 1e-10))

    maps = schwarzian.builtin_maps()
    worst = 0.0
    for fname, f in maps.items():
        for gname, g in maps.items():
            for z in COCYCLE_POINTS:
                worst = max(worst, schwarzian.cocycle_check(f, g, z))
    out.append(Check("schwarzian", "cocycle identity (all built-in pairs)", worst, 1e-8,
                     detail={"pairs": len(maps) ** 2}))

    e = schwarzian.exp_map()
    out.append(Check("schwarzian", "S(e^z) = -1/2",
                     max(abs(schwarzian.schwarzian(e, z) + 0.5) for z in COCYCLE_POINTS), 1e-10))
    out.append(Check("schwarzian", "S(e^z) = -1/2 (numeric derivatives)",
                     max(abs(schwarzian.schwarzian(e, z, numeric=True) + 0.5)
                         for z in COCYCLE_POINTS), 1e-6,
                     detail={"h": schwarzian.NUMERIC_STEP, "levels": schwarzian.RICHARDSON_LEVELS}))

    strip = fields.builtin_field("strip")
    d_strip = schwarzian.theta_vs_schwarzian("strip", {}, fields.default_point(strip))
    ann = fields.builtin_field("annulus")
    d_ann = schwarzian.theta_vs_schwarzian("annulus", {"R": math.e}, fields.default_point(ann))
    out.append(Check("schwarzian", "theta = S(g), g: domain -> half-plane", max(d_strip, d_ann), 1e-8,
                     detail={"strip": d_strip, "annulus": d_ann}))
    return out


# ------------------------------------------------------------------ mesh


def mesh_suite(cfg: SuiteConfig) -> List[Check]:
    out = []
    for label, m in (("icosahedron", fixtures.icosahedron()), ("flat torus", fixtures.flat_torus(8)),
                     ("genus-2", fixtures.genus2_octagon(8))):
        K, A = mesh.gaussian_curvature(m), mesh.vertex_areas(m)
        gb = abs(float(np.sum(K * A)) - 2 * math.pi * m.euler_characteristic)
        out.append(Check("mesh", f"Gauss-Bonnet {label}", gb, 1e-10,
                         detail={"chi": m.euler_characteristic}))
    torus = fixtures.flat_torus(8)
    out.append(Check("mesh", "flat torus K = 0", _max(mesh.gaussian_curvature(torus)), 1e-12))

    rng = np.random.default_rng(cfg.seed + 2)
    g2 = fixtures.genus2_octagon(8)
    u, v = rng.standard_normal((2, g2.n_vertices))
    A = mesh.vertex_areas(g2)
    sym = abs(float(np.sum(u * mesh.laplacian(g2, v) * A) - np.sum(v * mesh.laplacian(g2, u) * A)))
    out.append(Check("mesh", "laplacian symmetric", sym, 1e-10))
    out.append(Check("mesh", "laplacian divergence theorem",
                     abs(float(np.sum(mesh.laplacian(g2, u) * A))), 1e-10))
    out.append(Check("mesh", "laplacian of constant", _max(mesh.laplacian(g2, np.ones(g2.n_vertices))),
                     1e-12))

    lin = _torus_linear_defect(fixtures.flat_torus(16))
    out.append(Check("mesh", "linear function harmonic on torus interior", lin, 1e-10))
    errs, hs = [], []
    for n in (16, 32, 64):
        t = fixtures.flat_torus(n)
        x = t.meta["coords"][:, 0]
        lap = mesh.laplacian(t, np.sin(2 * math.pi * x))
        errs.append(_max(lap + 4 * math.pi**2 * np.sin(2 * math.pi * x)))
        hs.append(1.0 / n)
    out.append(_order_check("mesh", "laplacian sin refinement order", errs, hs, 0.3))
    errs, hs = [], []
    for level in (2, 3, 4):
        s = fixtures.icosphere(level)
        errs.append(abs(mesh.total_area(s) - 4 * math.pi))
        hs.append(2.0**-level)
    out.append(_order_check("mesh", "sphere area refinement order", errs, hs, 0.3))
    return out


def _torus_linear_defect(t: mesh.TriMesh) -> float:
    """``Lap x`` at vertices whose one-ring does not cross the identification seam."""
    n = t.meta["n"]
    x = t.meta["coords"][:, 0]
    lap = mesh.laplacian(t, x)
    i = np.arange(t.n_vertices) // n
    j = np.arange(t.n_vertices) % n
    inner = (i > 0) & (i < n - 1) & (j > 0) & (j < n - 1)
    return _max(lap[inner])


# ------------------------------------------------------------------ liouville


def constructed_problem(level: int, seed: int):
    """Genus-2 fixture with background ``e^{2 psi}`` times the hyperbolic metric."""
    hyp = fixtures.genus2_octagon(level)
    psi = fixtures.bump_field(hyp, np.random.default_rng(seed))
    return hyp.rescaled(hyp.scaled_lengths(psi)), psi


def liouville_suite(cfg: SuiteConfig) -> List[Check]:
    out = []
    solver = liouville.SolverConfig(residual_tolerance=1e-10)
    rng = np.random.default_rng(cfg.seed + 3)

    hyp = fixtures.genus2_octagon(cfg.mesh_levels[0])
    out.append(Check("liouville", "functional at phi=0 (genus 2)",
                     liouville.liouville_functional(hyp, np.zeros(hyp.n_vertices)), 0.02, "within", 0.5,
                     detail={"constant": "1/(8 pi)"}))
    phi, d = 0.1 * rng.standard_normal((2, hyp.n_vertices))
    grad = liouville.functional_gradient(hyp, phi)
    eps = 1e-5
    fd = (liouville.liouville_functional(hyp, phi + eps * d)
          - liouville.liouville_functional(hyp, phi - eps * d)) / (2 * eps)
    out.append(Check("liouville", "Euler-Lagrange: gradient = A r / (4 pi)",
                     abs(fd - float(grad @ d)) / max(1.0, abs(fd)), 1e-8, detail={"eps": eps}))

    errs, areas, residuals, iters, phis = [], [], [], [], None
    for level in cfg.mesh_levels:
        m0, psi = constructed_problem(level, cfg.seed)
        res = liouville.solve_uniformization(m0, solver)
        errs.append(_max(res.phi + psi))
        areas.append(res.area_scaled)
        residuals.append(res.residual)
        iters.append(res.iterations)
        last = (m0, res)
    out.append(Check("liouville", "solver residual", max(residuals), 1e-8,
                     detail={"iterations": iters, "levels": list(cfg.mesh_levels)}))
    out.append(Check("liouville", "Newton iterations", float(max(iters)), 30.5))
    ratios = [errs[k] / errs[k + 1] for k in range(len(errs) - 1)]
    out.append(Check("liouville", "constructed solution error ratio per refinement", min(ratios), 3.0, ">",
                     detail={"errors": errs, "levels": list(cfg.mesh_levels)}))
    out.append(Check("liouville", "solution area / 4 pi", max(abs(a / (4 * math.pi) - 1) for a in areas),
                     0.02, detail={"areas": areas}))

    m0, res = last
    area_cfg = replace(solver, area_constraint=4 * math.pi)
    sols = []
    for _ in range(cfg.restarts):
        start = rng.uniform(-1.0, 1.0, m0.n_vertices)
        sols.append(liouville.solve_uniformization(m0, area_cfg, phi0=start).phi)
    spread = max(_max(a - b) for a in sols for b in sols)
    out.append(Check("liouville", "random restarts agree", spread, 1e-8,
                     detail={"restarts": cfg.restarts}))

    c = 0.7
    shifted = m0.rescaled(m0.lengths * math.exp(c))
    res_c = liouville.solve_uniformization(shifted, solver)
    out.append(Check("liouville", "conformal shift covariance", _max(res_c.phi - (res.phi - c)), 1e-8))

    try:
        liouville.solve_uniformization(fixtures.icosphere(1), solver)
        wrong = 0.0
    except WrongTopology:
        wrong = 1.0
    out.append(Check("liouville", "sphere raises WrongTopology", wrong, 0.5, ">"))

    probe = liouville.extremum_character_check(m0, res.phi, cfg.probe_directions, seed=cfg.seed)
    out.append(Check("liouville", "extremum: uniform sign of constrained second differences",
                     1.0 if probe["uniform_sign"] else 0.0, 0.5, ">",
                     detail={"w_side_signs": probe["w_side_signs"], "s_side_signs": probe["s_side_signs"]}))
    out.append(Check("liouville", "extremum: c = min |d2| / |u|^2", probe["c"], 0.0, ">",
                     detail={"rejected": probe["rejected"]}))
    return out


# ------------------------------------------------------------------ wvolume


def wvolume_suite(cfg: SuiteConfig) -> List[Check]:
    t = wvolume.FuchsianTube(cfg.genus, cfg.r)
    A = t.core_area
    g = wvolume.tube_geometry(t)
    out = [
        Check("wvolume", "W closed form A_S r", wvolume.w_volume(g.V, g.int_H_da), 1e-12 * A * cfg.r + 1e-15,
              "within", A * cfg.r),
        Check("wvolume", "volume quadrature vs closed form", g.quadrature_defect, 1e-12 * max(1.0, g.V)),
        Check("wvolume", "self-duality (V + V*)/2 = W", wvolume.self_duality_defect(g.V, g.int_H_da), 1e-12),
    ]
    lim = wvolume.renormalized_limit(t, cfg.rho_max, cfg.steps)
    out.append(Check("wvolume", "V_R = W - sum pi (g-1)", lim.defect, 1e-6,
                     detail={"V_R": lim.V_R, "limit": lim.limit}))
    out.append(Check("wvolume", "limit decay slope", lim.decay_slope, 0.1, "within", -2.0))
    for label, fn in (("boundary", wvolume.schlafli_fd_check), ("infinity", wvolume.schlafli_at_infinity_check)):
        s = fn(t, cfg.dr)
        out.append(Check("wvolume", f"Schlafli ({label}) formula vs A_S", abs(s.formula - A), 1e-6,
                         detail={"dW_dr": s.dW_dr, "formula": s.formula, "alternative": s.alternative,
                                 "per_component": s.per_component, "sign": s.sign, "dr": s.dr,
                                 "defect_vs_difference": s.defect}))
        out.append(Check("wvolume", f"Schlafli ({label}) alternative form", abs(s.alternative - A), 1e-6))
        out.append(Check("wvolume", f"Schlafli ({label}) defect order", s.order, 0.2, "within", 2.0))
    out.append(Check("wvolume", "direct dW/dr = A_S",
                     abs(wvolume.schlafli_fd_check(t, cfg.dr).dW_dr - A), 1e-6))
    cc = wvolume.w_at_constant_curvature(t)
    out.append(Check("wvolume", "K* = -1 at r0 = log(2)/2", abs(cc.K_star + 1), 1e-12))
    out.append(Check("wvolume", "W_M = A_S log(2)/2", abs(cc.W_M - A * math.log(2) / 2), 1e-12))
    if cfg.genus == 2:
        cm = wvolume.w_at_constant_curvature(t, mesh_level=cfg.mesh_levels[0])
        out.append(Check("wvolume", "W_M mesh cross-check (relative)", cm.mesh_defect / cm.W_M, 0.02,
                         detail={"mesh_W_M": cm.mesh_W_M, "mesh_vertices": cm.mesh_vertices}))
    return out


SUITES: Dict[str, Callable[[SuiteConfig], List[Check]]] = {
    "forms": forms_suite,
    "epstein": epstein_suite,
    "schwarzian": schwarzian_suite,
    "mesh": mesh_suite,
    "liouville": liouville_suite,
    "wvolume": wvolume_suite,
}


def apply_tolerance_override(checks: List[Check], tol: Optional[float]) -> List[Check]:
    if tol is None:
        return checks
    return [c if c.relation == ">" else replace(c, tolerance=tol) for c in checks]


def run_suites(names, cfg: SuiteConfig) -> List[Check]:
    checks = []
    for name in names:
        checks += SUITES[name](cfg)
    return apply_tolerance_override(checks, cfg.tol)
