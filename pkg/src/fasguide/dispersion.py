"""Real dispersion diagram: roots of N(k, omega) = 0, branches, group velocity.

Roots are searched in ``s = k**2`` rather than ``k``.  N is a real entire
function of ``s`` for real ``omega``, the cutoff ``k -> 0`` is an ordinary
simple root in ``s``, and evanescent roots are simply negative ``s``.  The
scan grid is built from points equally spaced in each layer's transverse
wavenumber ``alpha_j``, because N oscillates at a rate set by
``alpha_j * h_j`` and not by ``k``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .core import WaveguideConfig, n_and_partials, n_scale
from .errors import CutoffSingularityError, ResolutionError

DEFAULT_REFINE = 32  # scan points per pi of alpha_j * h_j
DEFAULT_TOL = 1e-8
MIN_SEPARATION = 1e-6


@dataclass(frozen=True)
class DispersionRoot:
    omega: float
    k: float
    evanescent: bool = False
    residual: float = 0.0  # |N| / max(1, |term scale|)

    @property
    def s(self) -> float:
        """k**2 (negative for evanescent roots, where ``k`` holds |Im k|)."""
        return -self.k**2 if self.evanescent else self.k**2

    @property
    def wavenumber(self) -> complex:
        return 1j * self.k if self.evanescent else complex(self.k)


@dataclass
class Branch:
    index: int
    points: list = field(default_factory=list)
    cutoff_omega: float | None = None

    @property
    def omegas(self) -> np.ndarray:
        return np.array([p.omega for p in self.points])

    @property
    def ks(self) -> np.ndarray:
        return np.array([p.k for p in self.points])

    def group_velocities(self, cfg: WaveguideConfig) -> np.ndarray:
        return group_velocity_array(self.ks, self.omegas, cfg)


@dataclass(frozen=True)
class GvPeak:
    omega_star: float
    k_star: float
    v_gr: float
    branch_index: int = -1

    @property
    def slope(self) -> float:
        """dk/domega at the peak."""
        return 1.0 / self.v_gr


# --------------------------------------------------------------------------
# bracketing machinery


def refine_brackets(f, a, b, fa, fb, xtol=1e-14, maxiter=200):
    """Vectorised Illinois false position on many sign-change brackets at once.

    ``f`` maps an array of abscissae to an array of real values of the same
    shape; bracket ``i`` is ``[a[i], b[i]]`` with ``fa[i] * fb[i] <= 0``.
    """
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    fa = np.array(fa, dtype=float)
    fb = np.array(fb, dtype=float)
    if a.size == 0:
        return a
    x = np.where(fa == 0, a, np.where(fb == 0, b, 0.5 * (a + b)))
    done = (fa == 0) | (fb == 0)
    side = np.zeros(a.shape, dtype=int)
    for _ in range(maxiter):
        width = np.abs(b - a)
        done |= width <= xtol * np.maximum(1.0, np.abs(a) + np.abs(b))
        if done.all():
            break
        denom = fb - fa
        with np.errstate(divide="ignore", invalid="ignore"):
            xf = b - fb * (b - a) / denom
        bad = ~np.isfinite(xf) | (xf <= np.minimum(a, b)) | (xf >= np.maximum(a, b))
        xf = np.where(bad, 0.5 * (a + b), xf)
        fx = f(xf)
        # once the sign test says a root is hit exactly, stop that bracket
        hit = (fx == 0) & ~done
        x = np.where(hit | ~done, xf, x)
        done |= hit
        left = np.sign(fx) == np.sign(fa)
        # Illinois: halve the stale endpoint value when the same side repeats
        new_a = np.where(left, xf, a)
        new_fa = np.where(left, fx, np.where(side == -1, fa / 2, fa))
        new_b = np.where(left, b, xf)
        new_fb = np.where(left, np.where(side == 1, fb / 2, fb), fx)
        side = np.where(left, 1, -1)
        a = np.where(done, a, new_a)
        b = np.where(done, b, new_b)
        fa = np.where(done, fa, new_fa)
        fb = np.where(done, fb, new_fb)
    closed = np.abs(b - a) <= xtol * np.maximum(1.0, np.abs(a) + np.abs(b))
    x = np.where(closed & ~((fa == 0) | (fb == 0)), 0.5 * (a + b), x)
    return x


def _sign_brackets(nodes, values):
    sv = np.sign(values)
    idx = np.nonzero(sv[:-1] * sv[1:] < 0)[0]
    exact = np.nonzero(sv == 0)[0]
    return idx, exact


def _alpha_nodes(lo2, hi2, h, refine):
    """Points equally spaced in alpha over alpha**2 in [lo2, hi2] (positive part only)."""
    lo2, hi2 = max(lo2, 0.0), max(hi2, 0.0)
    if hi2 <= lo2:
        return np.empty(0)
    a_lo, a_hi = math.sqrt(lo2), math.sqrt(hi2)
    n = max(2, int(math.ceil((a_hi - a_lo) * h * refine / math.pi)) + 1)
    return np.linspace(a_lo, a_hi, n) ** 2


def _speeds(cfg):
    return complex(cfg.c1).real, complex(cfg.c2).real


def s_scan_nodes(omega: float, s_lo: float, s_hi: float, cfg: WaveguideConfig, refine=DEFAULT_REFINE):
    """Scan grid in s = k**2 at fixed real omega."""
    c1, c2 = _speeds(cfg)
    parts = [np.linspace(s_lo, s_hi, max(3, int(2 * refine) + 1))]
    for c, h in ((c1, cfg.h1), (c2, cfg.h2)):
        w = omega**2 / c**2
        a2 = _alpha_nodes(w - s_hi, w - s_lo, h, refine)
        parts.append(w - a2)
    nodes = np.unique(np.concatenate(parts))
    return nodes[(nodes >= s_lo) & (nodes <= s_hi)]


def omega_scan_nodes(s: float, lo: float, hi: float, cfg: WaveguideConfig, refine=DEFAULT_REFINE):
    """Scan grid in omega at fixed s = k**2."""
    c1, c2 = _speeds(cfg)
    parts = [np.linspace(lo, hi, max(3, int(2 * refine) + 1))]
    for c, h in ((c1, cfg.h1), (c2, cfg.h2)):
        a2 = _alpha_nodes(lo**2 / c**2 - s, hi**2 / c**2 - s, h, refine)
        parts.append(c * np.sqrt(np.maximum(a2 + s, 0.0)))
    nodes = np.unique(np.concatenate(parts))
    return nodes[(nodes >= lo) & (nodes <= hi)]


def _n_real_s(omega, cfg):
    return lambda s: n_and_partials(s, omega, cfg)[0].real


def _n_real_omega(s, cfg):
    return lambda w: n_and_partials(s, w, cfg)[0].real


def _roots_on_nodes(f, nodes):
    if nodes.size < 2:
        return np.empty(0)
    vals = f(nodes)
    idx, exact = _sign_brackets(nodes, vals)
    roots = refine_brackets(f, nodes[idx], nodes[idx + 1], vals[idx], vals[idx + 1])
    roots = np.sort(np.concatenate([roots, nodes[exact]]))
    if roots.size > 1:
        keep = np.concatenate([[True], np.diff(roots) > MIN_SEPARATION * np.maximum(1.0, np.abs(roots[1:]))])
        roots = roots[keep]
    return roots


def s_roots(omega: float, s_lo: float, s_hi: float, cfg: WaveguideConfig, refine=DEFAULT_REFINE, validate=False):
    """All sign-changing roots of N(s, omega) for s in [s_lo, s_hi]."""
    f = _n_real_s(omega, cfg)
    # a branch may lie exactly on the slow light line (homogeneous duct, mode 0);
    # scan a little past the end and clip, so a root at s_hi is bracketed
    top = s_hi + 1e-9 * max(1.0, abs(s_hi))
    clip = s_hi + 1e-12 * max(1.0, abs(s_hi))
    roots = _roots_on_nodes(f, s_scan_nodes(omega, s_lo, top, cfg, refine))
    roots = roots[roots <= clip]
    if validate:
        fine = _roots_on_nodes(f, s_scan_nodes(omega, s_lo, top, cfg, 2 * refine))
        fine = fine[fine <= clip]
        if fine.size != roots.size:
            raise ResolutionError(
                f"root count at omega={omega:g} changed from {roots.size} to {fine.size} when the scan grid was halved"
            )
    return roots


def omega_roots(s: float, lo: float, hi: float, cfg: WaveguideConfig, refine=DEFAULT_REFINE, validate=False):
    """All roots omega in [lo, hi] of N(s, omega) = 0 at fixed real s = k**2."""
    f = _n_real_omega(s, cfg)
    roots = _roots_on_nodes(f, omega_scan_nodes(s, lo, hi, cfg, refine))
    if validate:
        fine = _roots_on_nodes(f, omega_scan_nodes(s, lo, hi, cfg, 2 * refine))
        if fine.size != roots.size:
            raise ResolutionError(f"omega-root count at s={s:g} changed on grid halving")
    return roots


def find_real_roots(
    omega: float,
    cfg: WaveguideConfig,
    k_max: float | None = None,
    tol: float = DEFAULT_TOL,
    refine: int = DEFAULT_REFINE,
    validate: bool = True,
    evanescent: bool = False,
    q_max: float | None = None,
) -> list[DispersionRoot]:
    """Propagating (and optionally evanescent) roots of N(k, omega) = 0.

    Propagating roots lie in ``0 <= k <= omega / c_slow``: beyond the slow
    light line both layers are evanescent and N has a fixed sign.  The result
    is sorted by ascending ``k``; evanescent roots (``k = i q``) follow,
    sorted by ascending ``q``.
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    k_top = omega / cfg.slowest_speed
    if k_max is not None:
        if k_max <= 0:
            raise ValueError("k_max must be positive")
        k_top = min(k_top, k_max)
    out = []
    for s in s_roots(omega, 0.0, k_top**2, cfg, refine, validate):
        out.append(DispersionRoot(omega, math.sqrt(max(s, 0.0)), False, _residual(s, omega, cfg)))
    if evanescent:
        q_top = q_max if q_max is not None else k_top
        for s in s_roots(omega, -(q_top**2), 0.0, cfg, refine, validate)[::-1]:
            if s < 0:
                out.append(DispersionRoot(omega, math.sqrt(-s), True, _residual(s, omega, cfg)))
    bad = [r for r in out if not r.residual < tol]
    if bad:
        raise ResolutionError(f"root refinement left |N| = {bad[0].residual:.3g} >= tol at omega={omega:g}")
    return out


def _residual(s, omega, cfg):
    """|N| relative to the size of its terms (raw |N| grows like cosh in the evanescent layer)."""
    n = abs(complex(n_and_partials(s, omega, cfg)[0]))
    return float(n / max(1.0, float(n_scale(s, omega, cfg))))


# --------------------------------------------------------------------------
# group velocity


def group_velocity_array(k, omega, cfg: WaveguideConfig):
    """-dN/dk / dN/domega for real roots (vectorised; no cutoff check)."""
    k = np.asarray(k, dtype=float)
    _, dn_ds, dn_dw = n_and_partials(k**2, omega, cfg)
    return np.real(-2 * k * dn_ds / dn_dw)


def group_velocity(root: DispersionRoot, cfg: WaveguideConfig) -> float:
    """Group velocity (dk/domega)**-1 by implicit differentiation of N = 0."""
    if root.evanescent:
        raise ValueError("group velocity is defined for propagating roots only")
    _, dn_ds, dn_dw = n_and_partials(root.k**2, root.omega, cfg)
    dn_dk = 2 * root.k * complex(dn_ds)
    dn_dw = complex(dn_dw)
    if abs(dn_dk) <= 1e-10 * abs(dn_dw):
        raise CutoffSingularityError(f"dN/dk vanishes at omega={root.omega:g}, k={root.k:g} (cutoff)")
    return float((-dn_dk / dn_dw).real)


def _ds_domega(s, omega, cfg):
    """Slope ds/domega of a branch, regular through cutoffs."""
    _, dn_ds, dn_dw = n_and_partials(s, omega, cfg)
    return np.real(-dn_dw / dn_ds)


def polish_root(s: float, omega: float, cfg: WaveguideConfig, maxiter: int = 50) -> float:
    """Newton in s at fixed omega, starting from ``s``."""
    for _ in range(maxiter):
        n, dn_ds, _ = n_and_partials(s, omega, cfg)
        step = float(np.real(n / dn_ds))
        s -= step
        if abs(step) <= 1e-15 * max(1.0, abs(s)):
            break
    return s


# --------------------------------------------------------------------------
# branch tracing


def trace_branches(
    omega_grid,
    cfg: WaveguideConfig,
    k_max: float | None = None,
    refine: int = DEFAULT_REFINE,
    validate: bool = True,
    max_depth: int = 6,
    tie_ratio: float = 0.5,
) -> list[Branch]:
    """Connect per-frequency root sets into continuous branches.

    Each root at the next frequency is matched to the branch whose
    first-order prediction (in ``s = k**2``) is nearest.  A match is accepted
    only when the nearest candidate is closer than ``tie_ratio`` times the
    runner-up; otherwise the frequency step is halved locally.  Roots without
    a predecessor open new branches (cutoffs); branches whose root vanished
    are closed.  Branch indices follow order of appearance, the initial set
    being numbered from the largest ``k`` down.
    """
    omegas = np.asarray(omega_grid, dtype=float)
    if omegas.size == 0:
        return []
    if np.any(np.diff(omegas) <= 0):
        raise ValueError("omega grid must be strictly ascending")

    def roots_at(w):
        top = w / cfg.slowest_speed if k_max is None else min(w / cfg.slowest_speed, k_max)
        return s_roots(w, 0.0, top**2, cfg, refine, validate)

    branches: list[Branch] = []
    active: list[int] = []  # branch indices, aligned with current s values
    current = roots_at(omegas[0])
    for s in current[::-1]:
        b = Branch(index=len(branches))
        b.points.append(_make_root(s, omegas[0], cfg))
        branches.append(b)
        active.append(b.index)
    # keep `current` aligned with `active`
    current = current[::-1]

    def advance(w0, s0, act, w1, depth):
        s1 = roots_at(w1)
        assignment = _match(s0, w0, s1, w1, cfg, tie_ratio)
        if assignment is None:
            if depth >= max_depth:
                raise ResolutionError(f"ambiguous branch matching between omega={w0:g} and {w1:g}")
            wm = 0.5 * (w0 + w1)
            sm, actm = advance(w0, s0, act, wm, depth + 1)
            return advance(wm, sm, actm, w1, depth + 1)
        new_s, new_act = [], []
        taken = set()
        for bi, j in zip(act, assignment):
            if j is None:
                continue
            taken.add(j)
            branches[bi].points.append(_make_root(s1[j], w1, cfg))
            new_s.append(s1[j])
            new_act.append(bi)
        for j in sorted(set(range(s1.size)) - taken, key=lambda j: -s1[j]):
            b = Branch(index=len(branches), cutoff_omega=_cutoff_between(w0, w1, cfg))
            b.points.append(_make_root(s1[j], w1, cfg))
            branches.append(b)
            new_s.append(s1[j])
            new_act.append(b.index)
        return np.array(new_s), new_act

    for w0, w1 in zip(omegas[:-1], omegas[1:]):
        current, active = advance(w0, np.asarray(current), active, w1, 0)
    return branches


def _make_root(s, omega, cfg):
    return DispersionRoot(float(omega), math.sqrt(max(float(s), 0.0)), False, _residual(s, omega, cfg))


def _match(s0, w0, s1, w1, cfg, tie_ratio):
    """Index into s1 for each entry of s0 (None if the branch ended), or None if ambiguous."""
    if s0.size == 0:
        return []
    if s1.size == 0:
        return [None] * s0.size
    pred = s0 + (w1 - w0) * _ds_domega(s0, w0, cfg)
    out = []
    for p, old in zip(pred, s0):
        d = np.abs(s1 - p)
        order = np.argsort(d)
        j = int(order[0])
        if d.size > 1 and d[j] >= tie_ratio * d[order[1]]:
            return None
        # a root that would have to travel below s = 0 has left through a cutoff
        if p < 0 and d[j] > abs(p) + abs(old):
            out.append(None)
            continue
        out.append(j)
    used = [j for j in out if j is not None]
    if len(set(used)) != len(used):
        return None
    return out


def _cutoff_between(w0, w1, cfg):
    """Cutoff frequency (root of N(0, omega)) in [w0, w1], if any."""
    f = _n_real_omega(0.0, cfg)
    f0, f1 = f(np.array([w0]))[0], f(np.array([w1]))[0]
    if f0 * f1 > 0:
        return None
    return float(refine_brackets(f, [w0], [w1], [f0], [f1])[0])


def cutoff_frequencies(lo: float, hi: float, cfg: WaveguideConfig, refine=DEFAULT_REFINE) -> np.ndarray:
    """Frequencies in [lo, hi] where a branch reaches k = 0."""
    return omega_roots(0.0, lo, hi, cfg, refine)


# --------------------------------------------------------------------------
# group-velocity peaks


def parabolic_vertex(x, y):
    """Vertex abscissa and value of the parabola through three points."""
    x0, x1, x2 = x
    y0, y1, y2 = y
    d0, d2 = x0 - x1, x2 - x1
    denom = d0 * d2 * (d0 - d2)
    if denom == 0:
        return x1, y1
    a = (d2 * (y0 - y1) - d0 * (y2 - y1)) / denom
    b = (d0**2 * (y2 - y1) - d2**2 * (y0 - y1)) / denom
    if a >= 0:
        return x1, y1
    xv = -b / (2 * a)
    xv = min(max(xv, min(d0, d2)), max(d0, d2))
    return x1 + xv, y1 + a * xv**2 + b * xv


def local_maxima(x, y, lo=-np.inf, hi=np.inf, rtol=1e-9):
    """Indices of strict interior local maxima of y with lo < x[i] < hi.

    A maximum must exceed both neighbours by ``rtol * |y|`` so that rounding
    noise on a flat curve does not count.  Maxima whose neighbours fall
    outside the window are treated as edge maxima and dropped.
    """
    x = np.asarray(x)
    y = np.asarray(y)
    idx = []
    for i in range(1, len(y) - 1):
        margin = rtol * abs(y[i])
        if not (y[i] - y[i - 1] > margin and y[i] - y[i + 1] > margin):
            continue
        if x[i - 1] < lo or x[i + 1] > hi:
            continue
        idx.append(i)
    return idx


def find_gv_peaks(branches, omega_window, cfg: WaveguideConfig, passes: int = 3) -> list[GvPeak]:
    """Strict local maxima of group velocity along each branch.

    Each sampled maximum is refined by repeated parabolic interpolation: the
    vertex of the parabola through three samples is re-evaluated exactly
    (root polished at that frequency) and the stencil shrunk tenfold.
    """
    lo, hi = omega_window
    peaks = []
    for br in branches:
        if len(br.points) < 3:
            continue
        w = br.omegas
        vg = br.group_velocities(cfg)
        for i in local_maxima(w, vg, lo, hi):
            peaks.append(_refine_peak(br, i, vg, cfg, passes))
    peaks.sort(key=lambda p: p.omega_star)
    return peaks


def _refine_peak(br: Branch, i: int, vg, cfg, passes):
    w = br.omegas
    s = br.ks**2
    xs = w[i - 1 : i + 2]
    ys = vg[i - 1 : i + 2]
    ss = s[i - 1 : i + 2]
    wv, _ = parabolic_vertex(xs, ys)
    h = min(w[i] - w[i - 1], w[i + 1] - w[i])
    for _ in range(passes):
        s_guess = float(np.interp(wv, xs, ss))
        stencil = np.array([wv - h, wv, wv + h])
        ss = np.array([polish_root(s_guess + (x - wv) * _ds_domega(s_guess, wv, cfg), x, cfg) for x in stencil])
        ys = group_velocity_array(np.sqrt(np.maximum(ss, 0.0)), stencil, cfg)
        xs = stencil
        wv, _ = parabolic_vertex(xs, ys)
        h /= 10
    s_star = polish_root(float(np.interp(wv, xs, ss)), wv, cfg)
    k_star = math.sqrt(max(s_star, 0.0))
    v = group_velocity(DispersionRoot(wv, k_star), cfg)
    return GvPeak(float(wv), k_star, v, br.index)


@functools.lru_cache(maxsize=32)
def max_group_velocity(cfg: WaveguideConfig, band: tuple, step: float = 0.05) -> float:
    """Largest group velocity of any propagating root with omega in ``band``."""
    lo, hi = band
    best = 0.0
    for w in np.arange(max(lo, step), hi + step / 2, step):
        top = w / cfg.slowest_speed
        s = s_roots(w, 0.0, top**2, cfg)
        s = s[s > 0]
        if s.size:
            best = max(best, float(np.max(group_velocity_array(np.sqrt(s), w, cfg))))
    return best
