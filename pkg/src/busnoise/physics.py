"""Shuttle and idle error probabilities from spin-qubit hardware parameters.

All quantities are SI (seconds, metres, metres per second).  Helpers in
``UNITS`` convert the usual lab units.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

UNITS = {
    "s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9,
    "m": 1.0, "mm": 1e-3, "um": 1e-6, "nm": 1e-9,
    "m/s": 1.0, "um/us": 1.0, "mm/s": 1e-3,
}


def to_si(value: float, unit: str) -> float:
    try:
        return float(value) * UNITS[unit]
    except KeyError:
        raise ValueError(f"unknown unit {unit!r}; known: {sorted(UNITS)}") from None


class PhysicsError(ValueError):
    pass


@dataclass(frozen=True)
class HardwareParams:
    T1: float
    T2: float
    l_c: float
    L_s: float
    v: float
    t_idle: float = 0.0
    T_1q: float = 0.0
    T_2q: float = 0.0

    def __post_init__(self):
        for name in ("T1", "T2", "l_c", "v"):
            val = getattr(self, name)
            if not (isinstance(val, (int, float)) and math.isfinite(val) and val > 0):
                raise PhysicsError(f"{name} must be a positive finite number, got {val!r}")
        for name in ("L_s", "t_idle", "T_1q", "T_2q"):
            val = getattr(self, name)
            if not (isinstance(val, (int, float)) and math.isfinite(val) and val >= 0):
                raise PhysicsError(f"{name} must be a non-negative finite number, got {val!r}")

    def scaled(self, time: float = 1.0, length: float = 1.0) -> "HardwareParams":
        """Same device with time and length units rescaled (for invariance checks)."""
        return HardwareParams(self.T1 * time, self.T2 * time, self.l_c * length, self.L_s * length,
                              self.v * length / time, self.t_idle * time, self.T_1q * time, self.T_2q * time)


@dataclass(frozen=True)
class Probability:
    value: float
    clamped: bool = False  # the formula exceeded 1 and was capped
    perturbative: bool = True  # small-probability regime where the linearised formula holds

    def __float__(self) -> float:
        return self.value


def _report(x: float) -> Probability:
    return Probability(min(x, 1.0), clamped=x > 1.0, perturbative=x < 1.0)


def dephasing_probability(hp: HardwareParams) -> Probability:
    """Conveyor-shuttle dephasing ``2 l_c L_s / (v T2)^2``."""
    return _report(2.0 * hp.l_c * hp.L_s / (hp.v * hp.T2) ** 2)


def relaxation_probability(hp: HardwareParams) -> Probability:
    """Relaxation during transport ``L_s / (v T1)``."""
    return _report(hp.L_s / (hp.v * hp.T1))


def idle_probabilities(hp: HardwareParams) -> tuple[Probability, Probability]:
    """``(t/T1, (t/T2)^2)`` for an idle period ``t_idle``."""
    return _report(hp.t_idle / hp.T1), _report((hp.t_idle / hp.T2) ** 2)


@dataclass
class Suggestion:
    ber: float
    shuttle_channel: str
    p_deph: float
    p_rel: float
    idle_relaxation: float
    idle_dephasing: float
    mapping: str
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def suggest_noise(hp: HardwareParams, shuttle_channel: str = "unbiased") -> Suggestion:
    """Map hardware numbers onto a bus error rate.

    Unbiased runs use ``p_deph + p_rel``; biased (pure dephasing) runs use
    ``p_deph`` alone.
    """
    pd = dephasing_probability(hp)
    pr = relaxation_probability(hp)
    ir, idp = idle_probabilities(hp)
    if shuttle_channel == "biased":
        ber, mapping = pd.value, "ber = p_deph (biased: dephasing only)"
    elif shuttle_channel == "unbiased":
        ber, mapping = min(1.0, pd.value + pr.value), "ber = p_deph + p_rel (unbiased)"
    else:
        raise PhysicsError(f"unknown shuttle channel {shuttle_channel!r}")
    notes = []
    for name, p in (("p_deph", pd), ("p_rel", pr), ("idle relaxation", ir), ("idle dephasing", idp)):
        if p.clamped:
            notes.append(f"{name} exceeded 1 and was clamped")
        elif not p.perturbative:
            notes.append(f"{name} is outside the perturbative regime")
    return Suggestion(ber, shuttle_channel, pd.value, pr.value, ir.value, idp.value, mapping, notes)
