"""Converter parameters and control-scheme selection."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union


@dataclass(frozen=True)
class Pvmc:
    """Proportional voltage-mode control, y = k_p (v_r - v_C)."""

    k_p: float

    def __post_init__(self):
        if self.k_p <= 0:
            raise ValueError("k_p must be > 0")


@dataclass(frozen=True)
class VmcType3:
    """Voltage-mode control through a type-III compensator.

    The compensator is an integrator with two zeros (z1, z2) and two
    additional poles (p1, p2), all in rad/s, with gain K_c.
    """

    K_c: float
    z1: float
    z2: float
    p1: float
    p2: float

    def __post_init__(self):
        for name in ("K_c", "z1", "z2", "p1", "p2"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")


@dataclass(frozen=True)
class CmcOpenLoop:
    """Peak current-mode control with the voltage loop open.

    The reference input is the current command i_c (amperes).
    """


@dataclass(frozen=True)
class CmcClosedLoop:
    """Peak current-mode control with a proportional voltage loop,
    i_c = k_p (v_r - v_C)."""

    k_p: float

    def __post_init__(self):
        if self.k_p <= 0:
            raise ValueError("k_p must be > 0")


ControlScheme = Union[Pvmc, VmcType3, CmcOpenLoop, CmcClosedLoop]


@dataclass(frozen=True)
class ConverterParams:
    """Physical boost-converter parameters plus the control scheme.

    Attributes
    ----------
    v_s : source voltage (V), > 0
    L : inductance (H), > 0
    C_f : output capacitance (F), > 0
    R : load resistance (ohm), > 0
    r : parasitic inductor resistance (ohm), >= 0
    R_c : capacitor ESR (ohm), >= 0
    V_h : PWM ramp amplitude (V), >= 0
    f_s : switching frequency (Hz), > 0
    scheme : control scheme instance
    """

    v_s: float
    L: float
    C_f: float
    R: float
    r: float
    R_c: float
    V_h: float
    f_s: float
    scheme: ControlScheme

    def __post_init__(self):
        for name in ("v_s", "L", "C_f", "R", "f_s"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        for name in ("r", "R_c", "V_h"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not isinstance(self.scheme, (Pvmc, VmcType3, CmcOpenLoop, CmcClosedLoop)):
            raise ValueError(f"unknown control scheme: {self.scheme!r}")

    @property
    def eta(self) -> float:
        """Resistance ratio r/R."""
        return self.r / self.R

    @property
    def T(self) -> float:
        """Clock period 1/f_s (s)."""
        return 1.0 / self.f_s

    @property
    def k_p(self) -> float:
        """Proportional gain of the active scheme."""
        if isinstance(self.scheme, (Pvmc, CmcClosedLoop)):
            return self.scheme.k_p
        raise ValueError(f"scheme {type(self.scheme).__name__} has no k_p")

    @property
    def kappa(self) -> float:
        """Effective gain k_p/V_h."""
        if self.V_h <= 0:
            raise ValueError("kappa undefined for V_h = 0")
        return self.k_p / self.V_h

    def replace(self, **changes) -> "ConverterParams":
        """Return a copy with the given fields replaced."""
        import dataclasses

        return dataclasses.replace(self, **changes)
