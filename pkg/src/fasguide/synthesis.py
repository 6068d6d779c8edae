"""Time-domain receiver signal and first-arriving-signal (FAS) measurement.

Modal sum
---------
The field is a sum over the roots xi_n(omega) of N:

    u'(t) = (i / 2 pi) Int F(omega) sum_n M / N_k exp(i xi_n L - i omega t) domega,
    u = 2 Re u'.

The residue weight M / N_k has an inverse-square-root singularity at every
cutoff (N_k -> 0), which defeats a plain trapezoid rule in omega.  Along a
branch, however, d omega = -(N_k / N_omega) dk, so

    (M / N_k) d omega = -(M / N_omega) dk

and the integrand is smooth in k.  The quadrature therefore runs over a
uniform midpoint grid in k (and in q for the evanescent leg k = i q),
collecting at each node every omega in the band with N(k, omega) = 0.

Direct inversion
----------------
The oracle integrates the double Fourier integral with both sound speeds
given a small negative imaginary part, then extrapolates the limiting
absorption to zero (Richardson in epsilon).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import WaveguideConfig, apply_limiting_absorption, m_kernel, n_and_partials
from .dispersion import max_group_velocity, omega_roots, parabolic_vertex
from .errors import FasNotFound, ResolutionError
from .estimate import FasEstimate

DEFAULT_BAND = (8.0, 48.0)
DEFAULT_FLOOR = 1e-4


@dataclass(frozen=True)
class ProbePulse:
    """Gaussian-windowed cosine f(t) = A exp(-(t - t0)**2 / (2 sigma**2)) cos(omega0 (t - t0))."""

    omega0: float = 28.0
    sigma: float = 0.2
    band: tuple = DEFAULT_BAND
    amplitude: float = 1.0
    delay: float = 0.0

    def __post_init__(self):
        lo, hi = self.band
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not 0 < lo < self.omega0 < hi:
            raise ValueError("need 0 < band_lo < omega0 < band_hi")
        object.__setattr__(self, "band", (float(lo), float(hi)))

    def edge_ratio(self) -> float:
        """Largest spectrum magnitude at a band edge relative to the peak."""
        peak = abs(pulse_spectrum(self, self.omega0))
        return max(abs(pulse_spectrum(self, w)) for w in self.band) / peak


def pulse_spectrum(p: ProbePulse, omega):
    """F(omega) = Int f(t) exp(i omega t) dt."""
    omega = np.asarray(omega, dtype=float)
    s2 = p.sigma**2
    g = np.exp(-s2 * (omega - p.omega0) ** 2 / 2) + np.exp(-s2 * (omega + p.omega0) ** 2 / 2)
    f = p.amplitude * p.sigma * math.sqrt(math.pi / 2) * g
    if p.delay:
        f = f * np.exp(1j * omega * p.delay)
    return f[()] if f.ndim == 0 else f


def pulse_time(p: ProbePulse, t):
    t = np.asarray(t, dtype=float) - p.delay
    return p.amplitude * np.exp(-(t**2) / (2 * p.sigma**2)) * np.cos(p.omega0 * t)


@dataclass
class TimeSeries:
    t: np.ndarray
    u: np.ndarray
    L: float
    analytic: np.ndarray | None = field(default=None, repr=False)  # 2 u', with u = Re

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        if self.t.shape != self.u.shape:
            raise ValueError("t and u must have the same shape")
        if self.t.size > 2:
            dt = np.diff(self.t)
            if np.any(np.abs(dt - dt[0]) > 1e-9 * max(1.0, abs(dt[0]))):
                raise ValueError("time grid must be uniform")

    @property
    def envelope(self) -> np.ndarray:
        if self.analytic is not None:
            return np.abs(self.analytic)
        from scipy.signal import hilbert

        return np.abs(hilbert(self.u))


@dataclass(frozen=True)
class FasMeasurement:
    L: float
    tof: float
    amplitude: float


@dataclass(frozen=True)
class DecayFit:
    kappa: float
    v_fas: float
    plain_velocities: tuple = ()
    monotone: bool = True

    def __iter__(self):
        return iter((self.kappa, self.v_fas))


# --------------------------------------------------------------------------
# modal sum


@dataclass(frozen=True)
class ModalNodes:
    """Quadrature nodes of the branch-parametrised modal sum.

    ``weight`` already contains -M / N_omega times the k (or i q) step, so a
    node contributes ``F(omega) * weight * exp(i k L - i omega t)``.
    """

    k: np.ndarray
    omega: np.ndarray
    weight: np.ndarray


@functools.lru_cache(maxsize=16)
def modal_nodes(cfg: WaveguideConfig, band: tuple, dk: float = 0.02, q_max: float = 0.0) -> ModalNodes:
    lo, hi = band
    ks, ws, wts = [], [], []

    def collect(s, k, step):
        roots = omega_roots(s, lo, hi, cfg)
        if roots.size == 0:
            return
        m = m_kernel(s, roots, cfg)
        _, _, dn_dw = n_and_partials(s, roots, cfg)
        ks.append(np.full(roots.size, k, dtype=complex))
        ws.append(roots)
        wts.append(-m / dn_dw * step)

    for k in np.arange(dk / 2, hi / cfg.slowest_speed, dk):
        collect(k * k, k, dk)
    if q_max > 0:
        for q in np.arange(dk / 2, q_max, dk):
            # omega falls as q grows on this leg, so the orientation flips: dk = -i dq
            collect(-q * q, 1j * q, -1j * dk)
    if not ws:
        return ModalNodes(np.empty(0, complex), np.empty(0), np.empty(0, complex))
    return ModalNodes(np.concatenate(ks), np.concatenate(ws), np.concatenate(wts))


def _evanescent_depth(L):
    # q beyond which exp(-q L) < 1e-13, rounded up so distances share cached nodes
    return float(max(3, math.ceil(30.0 / L)))


def _sum_nodes(nodes: ModalNodes, L, t, p, chunk=4096):
    amp = pulse_spectrum(p, nodes.omega) * nodes.weight * np.exp(1j * nodes.k * L)
    out = np.zeros(t.size, dtype=complex)
    for i in range(0, nodes.omega.size, chunk):
        sl = slice(i, i + chunk)
        out += np.exp(-1j * np.outer(t, nodes.omega[sl])) @ amp[sl]
    return 2 * (1j / (2 * math.pi)) * out


def modal_sum_field(
    L: float,
    t_grid,
    p: ProbePulse,
    cfg: WaveguideConfig,
    dk: float = 0.02,
    evanescent: bool = True,
    check_resolution: bool = False,
) -> TimeSeries:
    """Receiver trace u(L, t) by the modal residue sum over the pulse band.

    With ``check_resolution`` the sum is repeated at half the k step and a
    relative RMS change above 1% raises ResolutionError.
    """
    if not L > 0:
        raise ValueError("L must be positive")
    t = np.asarray(t_grid, dtype=float)
    q_max = _evanescent_depth(L) if evanescent else 0.0
    z = _sum_nodes(modal_nodes(cfg, p.band, dk, q_max), L, t, p)
    if check_resolution:
        fine = _sum_nodes(modal_nodes(cfg, p.band, dk / 2, q_max), L, t, p)
        change = np.sqrt(np.mean((fine.real - z.real) ** 2)) / max(np.sqrt(np.mean(fine.real**2)), 1e-300)
        if change > 0.01:
            raise ResolutionError(f"modal sum changed by {change:.2%} when the k step was halved")
        z = fine
    return TimeSeries(t, z.real, float(L), z)


# --------------------------------------------------------------------------
# direct inversion


def _kernel_transform(cfg, omegas, L, ks, hk):
    """G(omega) = Int M/N exp(i k L) dk over the real k axis (M/N is even in k)."""
    s = ks**2
    out = np.empty(omegas.size, dtype=complex)
    for i, w in enumerate(omegas):
        c = apply_limiting_absorption(cfg, w)
        n = n_and_partials(s, w, c)[0]
        m = m_kernel(s, w, c)
        out[i] = 2 * hk * np.sum(m / n * np.cos(ks * L))
    return out


def direct_inversion_field(
    L: float,
    t_grid,
    p: ProbePulse,
    cfg: WaveguideConfig,
    dk: float | None = None,
    domega: float = 0.02,
    k_max: float | None = None,
    richardson: bool = True,
) -> TimeSeries:
    """Receiver trace from the (omega, k) double integral under limiting absorption.

    The absorbed sound speeds ``c (1 - i eps)`` move the poles off the real k
    axis; the k integral is a midpoint sum and the omega integral a trapezoid
    over the pulse band.  The finite absorption damps the field roughly as
    ``exp(-eps omega t)``; with ``richardson`` the results for eps and 2 eps
    are combined as ``2 u(eps) - u(2 eps)`` to cancel the first-order effect.
    """
    eps = cfg.absorption_epsilon
    if not eps > 0:
        raise ValueError("direct inversion needs absorption_epsilon > 0")
    lo, hi = p.band
    # pole half-width ~ eps * k; require it to span 4 grid points at the pulse centre
    width = eps * p.omega0 / cfg.fastest_speed
    if dk is None:
        dk = width / 4
    elif dk > width / 4:
        raise ResolutionError(f"k step {dk:g} too coarse for absorption eps={eps:g} (need <= {width / 4:.3g})")
    if k_max is None:
        k_max = hi / cfg.slowest_speed + 4
    ks = np.arange(dk / 2, k_max, dk)
    omegas = np.arange(lo, hi + domega / 2, domega)
    wts = np.full(omegas.size, domega)
    wts[[0, -1]] /= 2
    t = np.asarray(t_grid, dtype=float)
    fw = pulse_spectrum(p, omegas) * wts

    def field_for(c):
        g = _kernel_transform(c, omegas, L, ks, dk)
        return 2 * (np.exp(-1j * np.outer(t, omegas)) @ (fw * g)) / (4 * math.pi**2)

    z = field_for(cfg)
    if richardson:
        z = 2 * z - field_for(replace(cfg, absorption_epsilon=2 * eps))
    return TimeSeries(t, z.real, float(L), z)


# --------------------------------------------------------------------------
# FAS extraction and fitting


def fas_window(L: float, cfg: WaveguideConfig, band: tuple) -> tuple:
    """[0.8 L / c_fast, 0.98 L / v_g,max] with v_g,max the largest guided group velocity in the band."""
    return 0.8 * L / cfg.fastest_speed, 0.98 * L / max_group_velocity(cfg, tuple(band))


def extract_fas(series: TimeSeries, cfg: WaveguideConfig, p: ProbePulse, floor: float = DEFAULT_FLOOR) -> FasMeasurement:
    """Time of flight and amplitude of the first arriving signal.

    ToF is the first local maximum of the envelope above ``floor`` inside
    the search window (refined by a parabola through three samples).  The
    first maximum rather than the largest is taken because the front of the
    fastest guided pulse already rises at the end of the window.
    """
    t0, t1 = fas_window(series.L, cfg, p.band)
    env = series.envelope
    t = series.t
    for i in range(1, t.size - 1):
        if not (t0 <= t[i] <= t1):
            continue
        if env[i] > floor and env[i] >= env[i - 1] and env[i] > env[i + 1]:
            tof, amp = parabolic_vertex(t[i - 1 : i + 2], env[i - 1 : i + 2])
            return FasMeasurement(series.L, float(tof), float(amp))
    raise FasNotFound(f"no envelope maximum above {floor:g} in [{t0:.3g}, {t1:.3g}] at L={series.L:g}")


def fit_decay(measurements) -> DecayFit:
    """kappa from ln(amplitude) vs L and v_fas from L vs ToF, both by least squares."""
    ms = sorted(measurements, key=lambda m: m.L)
    if len({m.L for m in ms}) < 2:
        raise ValueError("need measurements at two or more distinct distances")
    L = np.array([m.L for m in ms])
    tof = np.array([m.tof for m in ms])
    amp = np.array([m.amplitude for m in ms])
    kappa = -np.polyfit(L, np.log(amp), 1)[0]
    v = np.polyfit(tof, L, 1)[0]
    return DecayFit(
        float(kappa),
        float(v),
        tuple(float(x) for x in L / tof),
        bool(np.all(np.diff(amp) < 0)),
    )


def default_time_grid(L: float, dt: float = 0.01) -> np.ndarray:
    return np.arange(0.0, 0.5 * L + 2.0, dt)


@dataclass
class SimulationResult:
    traces: list
    measurements: list
    fit: DecayFit | None

    def estimate(self, omega0: float) -> FasEstimate:
        if self.fit is None:
            raise ValueError("decay fit needs two or more distances")
        return FasEstimate(
            "measured",
            self.fit.v_fas,
            self.fit.kappa,
            float(omega0),
            {"plain_velocities": list(self.fit.plain_velocities), "monotone": self.fit.monotone},
        )

    def to_dict(self) -> dict:
        return {
            "kappa": None if self.fit is None else self.fit.kappa,
            "v_fas": None if self.fit is None else self.fit.v_fas,
            "per_L": [
                {"L": m.L, "tof": m.tof, "amplitude": m.amplitude, "v_plain": m.L / m.tof} for m in self.measurements
            ],
        }


def simulate(
    cfg: WaveguideConfig,
    p: ProbePulse,
    distances,
    dt: float = 0.01,
    dk: float = 0.02,
    evanescent: bool = True,
    floor: float = DEFAULT_FLOOR,
    check_resolution: bool = False,
) -> SimulationResult:
    """Modal-sum traces at each distance, their FAS measurements and the decay fit."""
    distances = [float(L) for L in distances]
    if not distances or any(L <= 0 for L in distances):
        raise ValueError("distances must be non-empty and positive")
    traces, meas = [], []
    for L in distances:
        tr = modal_sum_field(L, default_time_grid(L, dt), p, cfg, dk, evanescent, check_resolution)
        traces.append(tr)
        meas.append(extract_fas(tr, cfg, p, floor))
    fit = fit_decay(meas) if len(set(distances)) >= 2 else None
    return SimulationResult(traces, meas, fit)
