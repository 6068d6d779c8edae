"""Tangent-plus-linear model of the pseudo-branch of the real diagram.

Near the pseudo-branch the real branches are approximated by

    xi_a(omega) = a * tan(beta * omega + gamma) + omega / v + c

The group-velocity peaks omega*_n are the slope minima of the branches.
Putting the zeros of the tangent there makes both value and slope match:
the slope at a zero is ``a * beta + 1 / v``, hence

    a = (1 / v_gr - 1 / v) / beta.

Continued to complex omega, tan(beta * omega + gamma) -> i, so Im xi_a -> a
and ``a`` estimates the decay of the first arriving signal, with ``v`` its
velocity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dispersion import GvPeak, local_maxima, parabolic_vertex
from .estimate import FasEstimate


@dataclass(frozen=True)
class LinearFit:
    v: float
    c: float
    pairs: tuple = ()  # (omega_lo, omega_hi, v) per neighbouring pair

    def __iter__(self):
        return iter((self.v, self.c))


@dataclass(frozen=True)
class BetaEstimate:
    mean: float
    gaps: tuple = ()  # (omega_lo, omega_hi, beta)


@dataclass(frozen=True)
class Anchor:
    omega_star: float
    k_star: float
    a: float
    flagged: bool = False  # negative a: v inconsistent with the peak slope


@dataclass
class TangentModel:
    v: float
    c: float
    beta: float
    gamma: float
    anchors: list = field(default_factory=list)

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if not self.v > 0:
            raise ValueError("v must be positive")

    def a(self, omega):
        """Piecewise-linear a(omega) through the anchors (constant beyond them)."""
        return interpolate_a(self.anchors, omega)

    def xi(self, omega):
        omega = np.asarray(omega)
        a = self.a(np.real(omega))
        return a * np.tan(self.beta * omega + self.gamma) + omega / self.v + self.c

    def slope(self, omega):
        """d xi / d omega with a held fixed (a is slowly varying)."""
        omega = np.asarray(omega)
        a = self.a(np.real(omega))
        return a * self.beta / np.cos(self.beta * omega + self.gamma) ** 2 + 1 / self.v

    def to_dict(self) -> dict:
        return {
            "v": self.v,
            "c": self.c,
            "beta": self.beta,
            "gamma": self.gamma,
            "anchors": [
                {"omega_star": p.omega_star, "k_star": p.k_star, "a": p.a, "xi_model": float(np.real(self.xi(p.omega_star)))}
                for p in self.anchors
            ],
        }


def _sorted(peaks):
    peaks = sorted(peaks, key=lambda p: p.omega_star)
    if len(peaks) < 2:
        raise ValueError("at least two group-velocity peaks are required")
    return peaks


def fit_linear(peaks) -> LinearFit:
    """Global (v, c) from least squares of k* = omega*/v + c, plus pairwise v."""
    peaks = _sorted(peaks)
    w = np.array([p.omega_star for p in peaks])
    k = np.array([p.k_star for p in peaks])
    slope, c = np.polyfit(w, k, 1)
    pairs = tuple((a.omega_star, b.omega_star, (b.omega_star - a.omega_star) / (b.k_star - a.k_star)) for a, b in zip(peaks, peaks[1:]))
    return LinearFit(float(1 / slope), float(c), pairs)


def estimate_beta(peaks) -> BetaEstimate:
    """beta = pi / (omega*_{n+1} - omega*_n) per gap, and their mean."""
    peaks = _sorted(peaks)
    gaps = tuple((a.omega_star, b.omega_star, math.pi / (b.omega_star - a.omega_star)) for a, b in zip(peaks, peaks[1:]))
    return BetaEstimate(float(np.mean([g[2] for g in gaps])), gaps)


def _local(pairs_values, n_peaks):
    """Per-peak value: the adjacent pair for end peaks, the mean of both for interior ones."""
    out = []
    for i in range(n_peaks):
        adj = [pairs_values[j] for j in (i - 1, i) if 0 <= j < len(pairs_values)]
        out.append(float(np.mean(adj)))
    return out


def estimate_a(peaks, v=None, beta=None) -> list[Anchor]:
    """Per-peak a = (1/beta)(1/v_gr - 1/v).

    ``v`` and ``beta`` default to local values: those of the neighbouring
    pair (end peaks) or the mean of both neighbouring pairs (interior peaks).
    Negative values are kept and flagged.
    """
    peaks = _sorted(peaks)
    n = len(peaks)
    vs = [v] * n if v is not None else _local([p[2] for p in fit_linear(peaks).pairs], n)
    bs = [beta] * n if beta is not None else _local([g[2] for g in estimate_beta(peaks).gaps], n)
    out = []
    for p, vi, bi in zip(peaks, vs, bs):
        a = (1 / p.v_gr - 1 / vi) / bi
        out.append(Anchor(p.omega_star, p.k_star, float(a), a < 0))
    return out


def interpolate_a(anchors, omega):
    w = np.array([p.omega_star for p in anchors])
    a = np.array([p.a for p in anchors])
    return np.interp(omega, w, a)


def build_model(peaks) -> TangentModel:
    """Global tangent model: least-squares (v, c), mean beta, gamma from the central peak.

    Anchor a values are chosen so the model slope equals 1/v_gr exactly at
    every anchor (they reduce to the pairwise formula where the tangent
    vanishes).
    """
    peaks = _sorted(peaks)
    lin = fit_linear(peaks)
    beta = estimate_beta(peaks).mean
    central = peaks[(len(peaks) - 1) // 2]
    gamma = float(math.remainder(-beta * central.omega_star, math.pi))
    anchors = []
    for p in peaks:
        sec2 = 1 / math.cos(beta * p.omega_star + gamma) ** 2
        a = (1 / p.v_gr - 1 / lin.v) / (beta * sec2)
        anchors.append(Anchor(p.omega_star, p.k_star, float(a), a < 0))
    return TangentModel(lin.v, lin.c, beta, gamma, anchors)


def estimate_fas_pseudo(peaks, omega0: float) -> FasEstimate:
    """v_fas from the peak pair straddling omega0; kappa = a interpolated at omega0."""
    peaks = _sorted(peaks)
    lin = fit_linear(peaks)
    anchors = estimate_a(peaks)
    w = [p.omega_star for p in peaks]
    extrapolated = not (w[0] <= omega0 <= w[-1])
    j = int(np.clip(np.searchsorted(w, omega0) - 1, 0, len(lin.pairs) - 1))
    v_local = lin.pairs[j][2]
    kappa = float(interpolate_a(anchors, omega0))
    return FasEstimate(
        "pseudo_branch",
        float(v_local),
        kappa,
        float(omega0),
        {"v_global": lin.v, "extrapolated": extrapolated, "flagged_anchors": [p.omega_star for p in anchors if p.flagged]},
    )


def peaks_from_curve(omega, k, slope=None) -> list[GvPeak]:
    """Slope minima of a sampled curve k(omega), for synthetic diagrams.

    ``slope`` (dk/domega) is differentiated numerically when not given.
    """
    omega = np.asarray(omega, dtype=float)
    k = np.asarray(k, dtype=float)
    slope = np.gradient(k, omega) if slope is None else np.asarray(slope, dtype=float)
    vg = 1 / slope
    out = []
    for i in local_maxima(omega, vg):
        w_star, v_star = parabolic_vertex(omega[i - 1 : i + 2], vg[i - 1 : i + 2])
        # k is locally cubic around an inflection point: use a cubic through four samples
        lo = max(0, min(i - 1, len(omega) - 4))
        coef = np.polyfit(omega[lo : lo + 4] - w_star, k[lo : lo + 4], 3)
        out.append(GvPeak(float(w_star), float(coef[-1]), float(v_star)))
    return out
