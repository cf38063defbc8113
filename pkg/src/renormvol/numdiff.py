"""Centred finite differences in the complex plane and convergence-order helpers."""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np


def wirtinger(f: Callable[[complex], complex], z: complex, h: float):
    """``(f_z, f_zbar)`` of an arbitrary smooth function by centred differences."""
    fx = (f(z + h) - f(z - h)) / (2 * h)
    fy = (f(z + 1j * h) - f(z - 1j * h)) / (2 * h)
    return 0.5 * (fx - 1j * fy), 0.5 * (fx + 1j * fy)


def real_derivatives(f: Callable[[complex], float], z: complex, h: float, richardson=False):
    """First and second partials of a real function of ``z = x + iy``.

    Returns ``(f, fx, fy, fxx, fxy, fyy)`` from second-order centred stencils.
    With ``richardson=True`` the step-``h`` and step-``2h`` results are
    combined into a fourth-order estimate.
    """
    def once(s):
        c = f(z)
        px, mx = f(z + s), f(z - s)
        py, my = f(z + 1j * s), f(z - 1j * s)
        pp, pm = f(z + s + 1j * s), f(z + s - 1j * s)
        mp, mm = f(z - s + 1j * s), f(z - s - 1j * s)
        return np.array([
            c,
            (px - mx) / (2 * s),
            (py - my) / (2 * s),
            (px - 2 * c + mx) / s**2,
            (pp - pm - mp + mm) / (4 * s * s),
            (py - 2 * c + my) / s**2,
        ])

    d = once(h)
    if richardson:
        d = (4 * d - once(2 * h)) / 3
    return tuple(float(v) for v in d)


def gaussian_curvature(metric: Callable[[complex], np.ndarray], z: complex, h: float) -> float:
    """Gaussian curvature of a metric field by the Brioschi formula.

    ``metric(z)`` returns the 2x2 matrix ``[[E, F], [F, G]]`` in the
    coordinates ``(u, v) = (Re z, Im z)``.  All partials are centred, so the
    result is O(h^2) accurate.
    """
    c = metric(z)
    px, mx = metric(z + h), metric(z - h)
    py, my = metric(z + 1j * h), metric(z - 1j * h)
    pp, pm = metric(z + h + 1j * h), metric(z + h - 1j * h)
    mp, mm = metric(z - h + 1j * h), metric(z - h - 1j * h)
    d_u = (px - mx) / (2 * h)
    d_v = (py - my) / (2 * h)
    d_uu = (px - 2 * c + mx) / h**2
    d_vv = (py - 2 * c + my) / h**2
    d_uv = (pp - pm - mp + mm) / (4 * h * h)
    E, F, G = c[0, 0], c[0, 1], c[1, 1]
    Eu, Fu, Gu = d_u[0, 0], d_u[0, 1], d_u[1, 1]
    Ev, Fv, Gv = d_v[0, 0], d_v[0, 1], d_v[1, 1]
    Evv, Guu, Fuv = d_vv[0, 0], d_uu[1, 1], d_uv[0, 1]
    m1 = np.array([
        [-0.5 * Evv + Fuv - 0.5 * Guu, 0.5 * Eu, Fu - 0.5 * Ev],
        [Fv - 0.5 * Gu, E, F],
        [0.5 * Gv, F, G],
    ])
    m2 = np.array([
        [0.0, 0.5 * Ev, 0.5 * Gu],
        [0.5 * Ev, E, F],
        [0.5 * Gu, F, G],
    ])
    return float((np.linalg.det(m1) - np.linalg.det(m2)) / (E * G - F * F) ** 2)


def convergence_order(errors: Sequence[float], steps: Sequence[float]) -> float:
    """Least-squares slope of ``log(error)`` against ``log(step)``."""
    e = np.log(np.asarray(errors, dtype=float))
    s = np.log(np.asarray(steps, dtype=float))
    slope, _ = np.polyfit(s, e, 1)
    return float(slope)


def halving_order(fn: Callable[[float], float], h: float) -> float:
    """``log2(fn(h) / fn(h/2))``: the observed order from one step halving."""
    a, b = fn(h), fn(h / 2)
    return math.log2(a / b)
