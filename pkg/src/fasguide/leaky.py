"""Leaky waves of the fast layer over a slow half-space.

Replacing the slow layer by a half-space ``y < 0`` with an outgoing
radiation condition gives the relation

    rho1 * alpha2 * tan(alpha2 * h2) = -i * rho2 * alpha1

With time dependence ``exp(-i omega t)`` a wave leaving the fast layer
downward behaves as ``exp(-i alpha1 y)``; continuity of pressure and normal
velocity at ``y = 0`` against the rigid-lid layer solution
``cos(alpha2 (y - h2))`` yields the relation above.  We solve the pole-free
form ``G = rho1 * alpha2 sin(alpha2 h2) + i rho2 alpha1 cos(alpha2 h2)``.

``alpha1`` is the principal root (Re alpha1 > 0), the branch that carries
energy away from the layer for real omega.  The leaky root has Im xi > 0
and the field therefore grows with depth: the usual signature of a leaky
mode, which is why the decaying branch admits no real-frequency solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import WaveguideConfig, _layer
from .errors import ConvergenceError
from .estimate import FasEstimate

MAX_ITER = 50
TOL = 1e-10


@dataclass(frozen=True)
class LeakyRoot:
    omega: complex
    xi_l: complex
    residual: float


def _g_and_slope(xi, omega, cfg: WaveguideConfig):
    c1, c2 = complex(cfg.c1), complex(cfg.c2)
    q2 = omega**2 / c2**2 - xi**2
    a1 = np.sqrt(omega**2 / c1**2 - xi**2 + 0j)
    lay = _layer(q2, cfg.h2)
    rho1, rho2 = cfg.medium1.density, cfg.medium2.density
    g = rho1 * lay.asin + 1j * rho2 * a1 * lay.cos
    dg = -2 * xi * (rho1 * lay.dasin + 1j * rho2 * a1 * lay.dcos) - 1j * rho2 * xi / a1 * lay.cos
    scale = abs(rho1 * lay.asin) + abs(rho2 * a1 * lay.cos)
    return complex(g), complex(dg), float(max(1.0, scale))


def leaky_residual(xi, omega, cfg: WaveguideConfig) -> float:
    """|G| relative to the size of its two terms."""
    g, _, scale = _g_and_slope(complex(xi), complex(omega), cfg)
    return abs(g) / scale


def default_seed(omega, cfg: WaveguideConfig) -> complex:
    """Just above the fast bulk wavenumber: the leaky wave travels near c2."""
    return complex(omega) / complex(cfg.c2).real * 1.05 + 0.1j


def _newton(xi, omega, cfg):
    for _ in range(MAX_ITER):
        g, dg, scale = _g_and_slope(xi, omega, cfg)
        if dg == 0:
            break
        step = g / dg
        xi -= step
        if abs(step) <= 1e-14 * max(1.0, abs(xi)):
            return xi
    g, _, scale = _g_and_slope(xi, omega, cfg)
    if np.isfinite(xi) and abs(g) / scale < TOL:
        return xi
    return None


def solve_leaky(omega, cfg: WaveguideConfig, seed: complex | None = None, retries: int = 8) -> LeakyRoot:
    """Newton iteration for the leaky wavenumber at (possibly complex) omega.

    For real omega a root with Im xi <= 0 is rejected and the seed perturbed.
    """
    omega = complex(omega)
    if omega == 0:
        raise ValueError("omega must be non-zero")
    base = complex(seed) if seed is not None else default_seed(omega, cfg)
    real_omega = omega.imag == 0
    for attempt in range(retries + 1):
        start = base if attempt == 0 else base * (1 + 0.03 * attempt) + 0.1j * attempt
        xi = _newton(start, omega, cfg)
        if xi is None:
            continue
        if xi.real < 0:
            xi = -xi  # G depends on xi**2 only
        if real_omega and xi.imag <= 0:
            continue
        return LeakyRoot(omega, xi, leaky_residual(xi, omega, cfg))
    raise ConvergenceError(f"leaky relation did not converge at omega={omega}", last_good=omega)


def leaky_sweep(omegas, cfg: WaveguideConfig, seed: complex | None = None, start_index: int | None = None):
    """Solve along a frequency grid, warm-starting each point from its neighbour.

    The sweep starts at ``start_index`` (default: middle of the grid) and runs
    outward in both directions.
    """
    omegas = np.asarray(omegas)
    if omegas.size == 0:
        return []
    i0 = omegas.size // 2 if start_index is None else start_index
    roots = [None] * omegas.size
    roots[i0] = solve_leaky(omegas[i0], cfg, seed)
    for direction in (1, -1):
        prev = roots[i0]
        i = i0 + direction
        while 0 <= i < omegas.size:
            prev = roots[i] = solve_leaky(omegas[i], cfg, prev.xi_l)
            i += direction
    return roots


def estimate_fas_leaky(omega0: float, cfg: WaveguideConfig, delta: float = 0.1, seed: complex | None = None) -> FasEstimate:
    """v_fas = 1 / Re(dxi_L/domega) by centred difference; kappa = Im xi_L(omega0)."""
    mid = solve_leaky(omega0, cfg, seed)
    lo = solve_leaky(omega0 - delta, cfg, mid.xi_l)
    hi = solve_leaky(omega0 + delta, cfg, mid.xi_l)
    slope = (hi.xi_l - lo.xi_l) / (2 * delta)
    return FasEstimate(
        "leaky",
        float(1.0 / slope.real),
        float(mid.xi_l.imag),
        float(omega0),
        {"xi": [mid.xi_l.real, mid.xi_l.imag]},
    )
