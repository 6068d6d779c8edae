"""FAS estimate record shared by the three analysis methods and the measurement."""

from __future__ import annotations

from dataclasses import dataclass, field

METHODS = ("miklowitz_randles", "leaky", "pseudo_branch", "measured")


@dataclass(frozen=True)
class FasEstimate:
    """Velocity and exponential decay of the first arriving signal."""

    method: str
    v_fas: float
    kappa: float
    omega0: float
    details: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not self.v_fas > 0:
            raise ValueError(f"v_fas must be positive, got {self.v_fas!r}")

    def to_dict(self) -> dict:
        out = {"v_fas": self.v_fas, "kappa": self.kappa, "omega0": self.omega0}
        out.update(self.details)
        return out
