"""Dispersion roots continued into complex frequency.

The roots xi(omega) of N = 0 are branches of one multivalued analytic
function.  Its order-2 branch points (N = dN/dk = 0) sit near the
quasi-crossings of the real diagram.  Above them, at fixed Im omega, one
branch (sheet 0') has much smaller Im xi than all others; its slope and
imaginary part give the velocity and decay of the first arriving signal.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from .core import WaveguideConfig, n_and_partials, n_scale
from .dispersion import cutoff_frequencies, find_gv_peaks, find_real_roots, local_maxima, trace_branches
from .errors import AmbiguityError, BranchPointCollision, ConvergenceError
from .estimate import FasEstimate


@dataclass(frozen=True)
class ComplexRoot:
    omega: complex
    k: complex
    residual: float = 0.0
    sheet_tag: str = ""


@dataclass(frozen=True)
class BranchPoint:
    omega_bp: complex
    k_bp: complex
    order: int = 2

    @property
    def group(self) -> str:
        """'above', 'below' or 'on' the real omega axis."""
        im = self.omega_bp.imag
        if abs(im) <= 1e-8 * max(1.0, abs(self.omega_bp)):
            return "on"
        return "above" if im > 0 else "below"


def _nk(k, omega, cfg):
    """N, dN/dk, dN/domega at complex (k, omega)."""
    n, dn_ds, dn_dw = n_and_partials(k * k, omega, cfg)
    return complex(n), complex(2 * k * dn_ds), complex(dn_dw)


def residual(k, omega, cfg) -> float:
    n = abs(complex(n_and_partials(k * k, omega, cfg)[0]))
    return n / max(1.0, float(n_scale(k * k, omega, cfg)))


def newton_k(k, omega, cfg, maxiter=50, tol=1e-13):
    """Newton on N(., omega) = 0; returns (k, iterations) or raises ConvergenceError."""
    for it in range(1, maxiter + 1):
        n, nk, _ = _nk(k, omega, cfg)
        if nk == 0:
            break
        step = n / nk
        k -= step
        if abs(step) <= tol * max(1.0, abs(k)):
            return k, it
    raise ConvergenceError(f"Newton in k did not converge at omega={omega}", last_good=omega)


def _nearest(branch_points, omega):
    if not branch_points:
        return None
    return min(branch_points, key=lambda b: abs(b.omega_bp - omega))


def continue_root(
    start: ComplexRoot,
    path,
    cfg: WaveguideConfig,
    max_step: float = 0.05,
    min_step: float = 1e-9,
    max_newton: int = 5,
    collision_tol: float = 1e-6,
    branch_points=None,
) -> list[ComplexRoot]:
    """Follow a root of N(k, omega) = 0 along a polyline of complex frequencies.

    Predictor: linear extrapolation with dk/domega = -N_omega / N_k.
    Corrector: Newton in k.  A step is halved whenever Newton needs more than
    ``max_newton`` iterations or its total correction exceeds half the
    predicted increment.  Returns the root at every waypoint.
    """
    k = complex(start.k)
    w = complex(start.omega)
    if residual(k, w, cfg) > 1e-8:
        raise ConvergenceError(f"start point is not a root (residual {residual(k, w, cfg):.3g})", last_good=w)
    tag = start.sheet_tag or f"from omega={w:.6g}, k={k:.6g}"
    out = []
    h = max_step
    for target in path:
        target = complex(target)
        while w != target:
            dist = abs(target - w)
            step = min(h, dist)
            w_new = target if step >= dist else w + (target - w) * (step / dist)
            _, nk, nw = _nk(k, w, cfg)
            scale = max(1.0, float(n_scale(k * k, w, cfg)))
            if abs(nk) * max(1.0, abs(k)) < collision_tol * scale:
                near = _nearest(branch_points, w)
                raise BranchPointCollision(
                    f"dN/dk vanishes near omega={w:.6g}, k={k:.6g}" + (f"; nearest branch point {near}" if near else ""),
                    omega=w,
                    k=k,
                    nearest=near,
                )
            k_pred = k + (-nw / nk) * (w_new - w)
            ok = False
            try:
                k_new = k_pred
                for it in range(max_newton + 1):
                    n, nk_new, _ = _nk(k_new, w_new, cfg)
                    dk = n / nk_new
                    k_new -= dk
                    if abs(dk) <= 1e-13 * max(1.0, abs(k_new)):
                        ok = it < max_newton
                        break
                if ok and abs(k_new - k_pred) > 0.5 * abs(k_pred - k) + 1e-10:
                    ok = False
            except ZeroDivisionError:
                ok = False
            if not ok:
                h = step / 2
                if h < min_step:
                    raise ConvergenceError(f"continuation stalled near omega={w:.6g}", last_good=w)
                continue
            k, w = k_new, w_new
            h = min(max_step, 2 * step)
        out.append(ComplexRoot(w, k, residual(k, w, cfg), tag))
    return out


# --------------------------------------------------------------------------
# branch points


def _bp_newton(s, w, cfg, maxiter=60, h=1e-6):
    """Vectorised Newton on (N, dN/ds) = 0 in (s, omega)."""
    s = np.asarray(s, dtype=complex).copy()
    w = np.asarray(w, dtype=complex).copy()
    ok = np.zeros(s.shape, dtype=bool)
    alive = np.ones(s.shape, dtype=bool)
    with np.errstate(all="ignore"):
        return _bp_newton_loop(s, w, ok, alive, cfg, maxiter, h)


def _bp_newton_loop(s, w, ok, alive, cfg, maxiter, h):
    for _ in range(maxiter):
        n, ns, nw = n_and_partials(s, w, cfg)
        _, ns_p, _ = n_and_partials(s + h, w, cfg)
        _, ns_m, _ = n_and_partials(s - h, w, cfg)
        _, ns_wp, _ = n_and_partials(s, w + h, cfg)
        _, ns_wm, _ = n_and_partials(s, w - h, cfg)
        nss = (ns_p - ns_m) / (2 * h)
        nsw = (ns_wp - ns_wm) / (2 * h)
        det = ns * nsw - nw * nss
        with np.errstate(divide="ignore", invalid="ignore"):
            ds = (n * nsw - nw * ns) / det
            dw = (ns * ns - n * nss) / det
        bad = ~np.isfinite(ds) | ~np.isfinite(dw) | (det == 0)
        alive &= ~bad
        ds = np.where(alive, ds, 0)
        dw = np.where(alive, dw, 0)
        s -= ds
        w -= dw
        conv = alive & (np.abs(ds) <= 1e-11 * np.maximum(1, np.abs(s))) & (np.abs(dw) <= 1e-11 * np.maximum(1, np.abs(w)))
        ok |= conv
        alive &= ~conv
        if not alive.any():
            break
    return s, w, ok


def quasi_crossing_seeds(branches, window):
    """(s, omega) at local minima of the gap between neighbouring real branches."""
    lo, hi = window
    grid = {}
    for br in branches:
        for p in br.points:
            grid.setdefault(round(p.omega, 9), []).append(p.k**2)
    ws = np.array(sorted(grid))
    seeds = []
    rows = [np.sort(np.asarray(grid[w])) for w in ws]
    depth = max((len(r) for r in rows), default=0)
    for j in range(depth - 1):
        # j-th gap counted from the top of the spectrum (stable across cutoffs)
        gap = np.array([r[-1 - j] - r[-2 - j] if len(r) > j + 1 else np.nan for r in rows])
        mid = np.array([0.5 * (r[-1 - j] + r[-2 - j]) if len(r) > j + 1 else np.nan for r in rows])
        for i in local_maxima(ws, -gap, lo, hi):
            seeds.append((mid[i], ws[i]))
    return seeds


def find_branch_points(
    region,
    cfg: WaveguideConfig,
    re_step: float = 0.5,
    im_levels: int = 6,
    s_seeds: int = 12,
    max_im_k: float | None = None,
    include_cutoffs: bool = True,
) -> list[BranchPoint]:
    """Order-2 branch points (N = dN/dk = 0) with omega in a rectangle.

    ``region`` is ``(re_lo, re_hi, im_lo, im_hi)``.  The 2x2 system is solved
    in ``s = k**2`` (where N = dN/ds = 0) so that the trivial solutions at
    ``k = 0`` do not attract the iteration; seeds come from a coarse grid and
    from the quasi-crossings of the real diagram.  Cutoffs (k = 0 on the real
    axis, where dN/dk = 2k dN/ds vanishes) are reported as the on-axis group.
    ``max_im_k`` drops points far from the real k axis.
    """
    re_lo, re_hi, im_lo, im_hi = region
    if not (re_lo < re_hi and im_lo <= im_hi):
        raise ValueError("region must be (re_lo, re_hi, im_lo, im_hi) with re_lo < re_hi")
    seeds_s, seeds_w = [], []
    ims = [y for y in np.linspace(im_lo, im_hi, im_levels) if y != 0] or [im_lo]
    for wr in np.arange(re_lo, re_hi + re_step / 2, re_step):
        for wi in ims:
            for sr in np.linspace(0, (wr / cfg.slowest_speed) ** 2, s_seeds, endpoint=False):
                seeds_s.append(sr)
                seeds_w.append(complex(wr, wi))
    branches = trace_branches(np.arange(max(re_lo - 1, 0.05), re_hi + 1, 0.05), cfg)
    for s, wr in quasi_crossing_seeds(branches, (re_lo, re_hi)):
        for wi in (0.5, -0.5):
            seeds_s.append(s)
            seeds_w.append(complex(wr, wi))
    s, w, ok = _bp_newton(np.array(seeds_s), np.array(seeds_w), cfg)
    found: list[BranchPoint] = []
    for si, wi in zip(s[ok], w[ok]):
        if not (re_lo <= wi.real <= re_hi and im_lo <= wi.imag <= im_hi):
            continue
        k = cmath.sqrt(si)
        if abs(wi.imag) <= 1e-8 * abs(wi):
            wi = complex(wi.real, 0.0)
        if abs(k) < 1e-6:
            continue  # k = 0 solutions are cutoffs, added below
        if max_im_k is not None and abs(k.imag) > max_im_k:
            continue
        if any(abs(b.omega_bp - wi) < 1e-4 and abs(b.k_bp - k) < 1e-4 for b in found):
            continue
        found.append(BranchPoint(complex(wi), complex(k)))
    if include_cutoffs and im_lo <= 0 <= im_hi:
        for wc in cutoff_frequencies(re_lo, re_hi, cfg):
            found.append(BranchPoint(complex(wc), 0j))
    found.sort(key=lambda b: (b.omega_bp.real, b.omega_bp.imag))
    return found


# --------------------------------------------------------------------------
# sheet 0'


def sheet0prime(
    omega_re_grid,
    im_height: float = 1.0,
    cfg: WaveguideConfig | None = None,
    peaks=None,
    max_step: float = 0.05,
    ambiguity: float = 0.10,
) -> list[ComplexRoot]:
    """The branch of minimal Im xi at fixed Im omega = ``im_height``.

    All real roots at the first group-velocity peak are continued vertically
    to the target height; the candidate with smallest Im xi is sheet 0' and
    is then swept in Re omega across the grid.
    """
    if cfg is None:
        raise ValueError("cfg is required")
    grid = np.asarray(omega_re_grid, dtype=float)
    if grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise ValueError("omega grid must be ascending with at least two points")
    if im_height <= 0:
        raise ValueError("im_height must be positive")
    if peaks is None:
        branches = trace_branches(np.arange(max(grid[0] - 1, 0.05), grid[-1] + 1, 0.05), cfg)
        peaks = find_gv_peaks(branches, (grid[0], grid[-1]), cfg)
    if not peaks:
        raise ValueError("no group-velocity peak inside the grid to seed sheet 0'")
    first_error = None
    for peak in peaks:
        try:
            w0 = peak.omega_star
            best = _lift_min_im(w0, im_height, cfg, max_step, ambiguity)
            break
        except AmbiguityError as exc:
            # near the low end of the band sheet 0' is not yet separated; try the next peak
            first_error = first_error or exc
    else:
        raise first_error
    tag = f"sheet0' from gv peak omega*={w0:.6g} lifted to Im omega={im_height:g}"
    seed = ComplexRoot(best.omega, best.k, best.residual, tag)
    right = grid[grid >= w0]
    left = grid[grid < w0][::-1]
    res = {}
    if right.size:
        for r in continue_root(seed, right + 1j * im_height, cfg, max_step=max_step):
            res[r.omega.real] = r
    if left.size:
        for r in continue_root(seed, left + 1j * im_height, cfg, max_step=max_step):
            res[r.omega.real] = r
    return [res[w] for w in sorted(res)]


def _lift_min_im(w0, im_height, cfg, max_step, ambiguity):
    top = complex(w0, im_height)
    candidates = []
    for r in find_real_roots(w0, cfg):
        if r.k == 0:
            continue
        try:
            end = continue_root(ComplexRoot(complex(w0), complex(r.k)), [top], cfg, max_step=max_step)[-1]
        except ConvergenceError:
            continue
        candidates.append(end)
    if not candidates:
        raise ConvergenceError("no real root could be continued to the target height", last_good=w0)
    candidates.sort(key=lambda c: c.k.imag)
    best = candidates[0]
    if len(candidates) > 1:
        second = candidates[1]
        if second.k.imag - best.k.imag < ambiguity * abs(best.k.imag):
            raise AmbiguityError(
                f"sheet 0' not identifiable at omega={top}: Im xi {best.k.imag:.4g} vs {second.k.imag:.4g}",
                candidates=(best, second),
            )
    return best


def _oscillation_period(w, y):
    idx = local_maxima(w, y)
    if len(idx) < 2:
        return None
    return float(np.mean(np.diff(w[idx])))


def estimate_fas_mr(curve, omega0: float, span: float | None = None) -> FasEstimate:
    """v_fas = 1 / Re(dxi/domega) and kappa = Im xi - Im omega / v_fas on sheet 0'.

    Sheet 0' inherits a ripple from the quasi-crossings below it, with period
    equal to their spacing.  The slope is therefore taken as a centred
    difference over one ripple period (``span``, estimated from the curve when
    not given); with no ripple it falls back to adjacent grid points.
    """
    w = np.array([c.omega.real for c in curve])
    xi = np.array([c.k for c in curve])
    height = float(np.mean([c.omega.imag for c in curve]))
    if w.size < 3:
        raise ValueError("curve needs at least three points")
    if not (w[0] < omega0 < w[-1]):
        raise ValueError(f"omega0={omega0} outside the curve span [{w[0]}, {w[-1]}]")
    if span is None:
        span = _oscillation_period(w, xi.imag)
    if span is None:
        i = int(np.clip(np.searchsorted(w, omega0), 1, w.size - 1))
        span = 2 * max(w[i] - w[i - 1], w[min(i + 1, w.size - 1)] - w[i])
    half = min(span / 2, omega0 - w[0], w[-1] - omega0)

    def at(x):
        return complex(np.interp(x, w, xi.real), np.interp(x, w, xi.imag))

    slope = (at(omega0 + half) - at(omega0 - half)) / (2 * half)
    v = 1.0 / slope.real
    xi0 = at(omega0)
    kappa = xi0.imag - height / v
    return FasEstimate(
        "miklowitz_randles",
        float(v),
        float(kappa),
        float(omega0),
        {"im_omega": height, "span": float(2 * half), "xi": [xi0.real, xi0.imag]},
    )


def curve_kappa(curve, span: float | None = None) -> np.ndarray:
    """kappa at every curve point; NaN where a full slope span does not fit."""
    w = np.array([c.omega.real for c in curve])
    if span is None:
        span = _oscillation_period(w, np.array([c.k.imag for c in curve]))
    out = np.full(w.size, np.nan)
    if w.size < 3:
        return out
    half = span / 2 if span else 0.0
    for i, x in enumerate(w):
        if w[0] < x < w[-1] and x - half >= w[0] and x + half <= w[-1]:
            out[i] = estimate_fas_mr(curve, x, span).kappa
    return out
