"""Two-layer acoustic waveguide: configuration and spectral kernels.

The waveguide occupies ``-h1 <= y <= h2``.  The lower layer (medium 1) sits on
a rigid floor, the upper layer (medium 2) is closed by a rigid lid carrying the
point source.  After a Fourier transform in ``x`` and ``t`` the receiver field
is ``F(omega) * M(k, omega) / N(k, omega)`` with

    alpha_j = sqrt(omega**2 / c_j**2 - k**2)
    M = (alpha1/alpha2) sin(alpha1 h1) sin(alpha2 h2) - (rho1/rho2) cos(alpha1 h1) cos(alpha2 h2)
    N = alpha2 (rho1/rho2) cos(alpha1 h1) sin(alpha2 h2) + alpha1 sin(alpha1 h1) cos(alpha2 h2)

Both kernels are even in each ``alpha_j``, so they are entire functions of
``s = k**2`` and ``omega``.  All evaluation here goes through the even
building blocks ``cos(a h)``, ``a sin(a h)`` and ``sin(a h) / a`` of
``a**2``, which removes every square-root ambiguity and the ``alpha2 -> 0``
singularity of ``M``.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError

# below this |alpha h| the derivative of sin(alpha h)/alpha uses its Taylor series
_SERIES_CUTOFF = 1e-2


@dataclass(frozen=True)
class Medium:
    """Homogeneous fluid layer material (dimensionless units)."""

    density: float
    sound_speed: complex

    def __post_init__(self):
        if not np.isfinite(self.density) or self.density <= 0:
            raise ConfigError(f"density must be positive, got {self.density!r}")
        c = complex(self.sound_speed)
        if not np.isfinite(c) or c.real <= 0:
            raise ConfigError(f"sound speed must have positive real part, got {self.sound_speed!r}")


@dataclass(frozen=True)
class WaveguideConfig:
    """Geometry and media of the two-layer waveguide.

    ``medium1`` fills the lower layer of thickness ``h1``, ``medium2`` the
    upper layer of thickness ``h2``.  ``absorption_epsilon`` is the relative
    imaginary part given to the sound speeds by
    :func:`apply_limiting_absorption`; only the direct double-integral
    inversion uses it.
    """

    h1: float
    h2: float
    medium1: Medium
    medium2: Medium
    absorption_epsilon: float = 1e-3

    def __post_init__(self):
        for name in ("h1", "h2"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ConfigError(f"{name} must be positive, got {value!r}")
        if not np.isfinite(self.absorption_epsilon) or self.absorption_epsilon < 0:
            raise ConfigError("absorption_epsilon must be >= 0")
        if complex(self.medium2.sound_speed).real <= complex(self.medium1.sound_speed).real:
            warnings.warn(
                "upper medium is not faster than the lower one; "
                "first-arriving-signal analysis assumes c2 > c1",
                stacklevel=3,
            )

    @property
    def c1(self) -> complex:
        return self.medium1.sound_speed

    @property
    def c2(self) -> complex:
        return self.medium2.sound_speed

    @property
    def rho_ratio(self) -> float:
        """rho1 / rho2."""
        return self.medium1.density / self.medium2.density

    @property
    def slowest_speed(self) -> float:
        return min(complex(self.c1).real, complex(self.c2).real)

    @property
    def fastest_speed(self) -> float:
        return max(complex(self.c1).real, complex(self.c2).real)

    def to_dict(self) -> dict:
        def _c(c):
            c = complex(c)
            return c.real if c.imag == 0 else [c.real, c.imag]

        return {
            "h1": self.h1,
            "h2": self.h2,
            "media": [
                {"rho": self.medium1.density, "c": _c(self.medium1.sound_speed)},
                {"rho": self.medium2.density, "c": _c(self.medium2.sound_speed)},
            ],
            "epsilon": self.absorption_epsilon,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "WaveguideConfig":
        try:
            media = data["media"]
            if len(media) != 2:
                raise ConfigError("'media' must list exactly two layers (lower, upper)")
            built = []
            for m in media:
                c = m["c"]
                if isinstance(c, (list, tuple)):
                    c = complex(c[0], c[1])
                built.append(Medium(float(m["rho"]), c))
            return cls(
                h1=float(data["h1"]),
                h2=float(data["h2"]),
                medium1=built[0],
                medium2=built[1],
                absorption_epsilon=float(data.get("epsilon", 1e-3)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"malformed waveguide config: {exc}") from exc


def demo_config(**overrides) -> WaveguideConfig:
    """The demonstration waveguide: H1=1, H2=0.4, c1=1, c2=5, rho1=rho2=1."""
    cfg = WaveguideConfig(1.0, 0.4, Medium(1.0, 1.0), Medium(1.0, 5.0))
    return replace(cfg, **overrides) if overrides else cfg


def load_config(path) -> WaveguideConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if "waveguide" in data:
        data = data["waveguide"]
    return WaveguideConfig.from_dict(data)


def save_config(cfg: WaveguideConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")


def apply_limiting_absorption(cfg: WaveguideConfig, omega: float) -> WaveguideConfig:
    """Give both sound speeds the imaginary part ``-eps * c * sign(omega)``."""
    eps = cfg.absorption_epsilon
    if eps == 0 or omega == 0:
        return cfg
    factor = 1 - 1j * eps * math.copysign(1.0, omega)
    return replace(
        cfg,
        medium1=Medium(cfg.medium1.density, complex(cfg.c1) * factor),
        medium2=Medium(cfg.medium2.density, complex(cfg.c2) * factor),
    )


@dataclass(frozen=True)
class SpectralPoint:
    k: complex
    omega: complex


@dataclass(frozen=True)
class KernelValues:
    alpha1: complex
    alpha2: complex
    m: complex
    n: complex
    dn_dk: complex


def _out(x):
    x = np.asarray(x)
    return x[()] if x.ndim == 0 else x


def alpha(j: int, k, omega, cfg: WaveguideConfig):
    """Transverse wavenumber of layer ``j`` (principal square root)."""
    if j not in (1, 2):
        raise ValueError("layer index must be 1 or 2")
    c = cfg.c1 if j == 1 else cfg.c2
    k = np.asarray(k, dtype=complex)
    omega = np.asarray(omega, dtype=complex)
    return _out(np.sqrt(omega**2 / complex(c) ** 2 - k**2))


@dataclass
class _Layer:
    """Even functions of ``s = alpha**2`` for one layer, with d/ds derivatives."""

    cos: np.ndarray  # cos(alpha h)
    asin: np.ndarray  # alpha sin(alpha h)
    sinc: np.ndarray  # sin(alpha h) / alpha
    dcos: np.ndarray = field(repr=False)
    dasin: np.ndarray = field(repr=False)
    dsinc: np.ndarray = field(repr=False)


def _layer(s, h: float) -> _Layer:
    s = np.asarray(s, dtype=complex)
    a = np.sqrt(s)
    x = a * h
    cos = np.cos(x)
    sin = np.sin(x)
    zero = a == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        sinc = np.where(zero, h, sin / np.where(zero, 1.0, a))
        small = np.abs(x) < _SERIES_CUTOFF
        safe_s = np.where(small, 1.0, s)
        series = -(h**3) / 6 + s * h**5 / 60 - s**2 * h**7 / 1680
        dsinc = np.where(small, series, (h * cos - sinc) / (2 * safe_s))
    return _Layer(
        cos=cos,
        asin=a * sin,
        sinc=sinc,
        dcos=-h * sinc / 2,
        dasin=(sinc + h * cos) / 2,
        dsinc=dsinc,
    )


def kernels_from_alpha(alpha1, alpha2, cfg: WaveguideConfig):
    """(M, N) computed directly from given transverse wavenumbers.

    Used to check evenness: flipping the sign of either ``alpha`` must not
    change the result.
    """
    a1 = np.asarray(alpha1, dtype=complex)
    a2 = np.asarray(alpha2, dtype=complex)
    r = cfg.rho_ratio
    c1, s1 = np.cos(a1 * cfg.h1), np.sin(a1 * cfg.h1)
    c2, s2 = np.cos(a2 * cfg.h2), np.sin(a2 * cfg.h2)
    with np.errstate(divide="ignore", invalid="ignore"):
        sinc2 = np.where(a2 == 0, cfg.h2, s2 / np.where(a2 == 0, 1.0, a2))
    m = a1 * s1 * sinc2 - r * c1 * c2
    n = a2 * r * c1 * s2 + a1 * s1 * c2
    return _out(m), _out(n)


def _radicands(s, omega, cfg):
    s = np.asarray(s, dtype=complex)
    omega = np.asarray(omega, dtype=complex)
    return omega**2 / complex(cfg.c1) ** 2 - s, omega**2 / complex(cfg.c2) ** 2 - s


def n_and_partials(s, omega, cfg: WaveguideConfig):
    """N together with dN/ds (s = k**2) and dN/domega.

    Returns arrays ``(n, dn_ds, dn_domega)`` broadcast over ``s`` and ``omega``.
    """
    q1, q2 = _radicands(s, omega, cfg)
    l1, l2 = _layer(q1, cfg.h1), _layer(q2, cfg.h2)
    r = cfg.rho_ratio
    n = r * l1.cos * l2.asin + l1.asin * l2.cos
    dn_dq1 = r * l1.dcos * l2.asin + l1.dasin * l2.cos
    dn_dq2 = r * l1.cos * l2.dasin + l1.asin * l2.dcos
    omega = np.asarray(omega, dtype=complex)
    dn_ds = -(dn_dq1 + dn_dq2)
    dn_domega = 2 * omega * (dn_dq1 / complex(cfg.c1) ** 2 + dn_dq2 / complex(cfg.c2) ** 2)
    return n, dn_ds, dn_domega


def n_scale(s, omega, cfg: WaveguideConfig):
    """Magnitude of the two terms of N; the natural scale for a residual."""
    q1, q2 = _radicands(s, omega, cfg)
    l1, l2 = _layer(q1, cfg.h1), _layer(q2, cfg.h2)
    return np.abs(cfg.rho_ratio * l1.cos * l2.asin) + np.abs(l1.asin * l2.cos)


def m_kernel(s, omega, cfg: WaveguideConfig):
    """Numerator M as a function of s = k**2."""
    q1, q2 = _radicands(s, omega, cfg)
    l1, l2 = _layer(q1, cfg.h1), _layer(q2, cfg.h2)
    return l1.asin * l2.sinc - cfg.rho_ratio * l1.cos * l2.cos


def dispersion_function(k, omega, cfg: WaveguideConfig):
    """N(k, omega)."""
    k = np.asarray(k, dtype=complex)
    return _out(n_and_partials(k**2, omega, cfg)[0])


def dn_dk(k, omega, cfg: WaveguideConfig):
    k = np.asarray(k, dtype=complex)
    _, dn_ds, _ = n_and_partials(k**2, omega, cfg)
    return _out(2 * k * dn_ds)


def dn_domega(k, omega, cfg: WaveguideConfig):
    k = np.asarray(k, dtype=complex)
    return _out(n_and_partials(k**2, omega, cfg)[2])


def eval_kernels(p: SpectralPoint, cfg: WaveguideConfig) -> KernelValues:
    """Evaluate alpha_1, alpha_2, M, N and dN/dk at one spectral point."""
    k, omega = complex(p.k), complex(p.omega)
    s = k * k
    n, dn_ds, _ = n_and_partials(s, omega, cfg)
    return KernelValues(
        alpha1=complex(alpha(1, k, omega, cfg)),
        alpha2=complex(alpha(2, k, omega, cfg)),
        m=complex(m_kernel(s, omega, cfg)),
        n=complex(n),
        dn_dk=complex(2 * k * dn_ds),
    )
