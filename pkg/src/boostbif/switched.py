"""Exact two-stage switched state-space models of the controlled boost converter.

Every model follows one comparator convention: the cycle starts in stage S1
(switch on, inductor charging), and the stage latches to S2 at the first
instant where the control output y = C x + D u falls to the sawtooth ramp
h(t) = V_h * (t mod T) / T.  In steady state this gives D * V_h = y.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from .params import CmcClosedLoop, CmcOpenLoop, ConverterParams, Pvmc, VmcType3


@dataclass(frozen=True)
class RampSpec:
    """Trailing-edge sawtooth: rises from 0 at each clock edge to V_h at T."""

    V_h: float
    T: float

    def value(self, t: float) -> float:
        return self.V_h * (t % self.T) / self.T


@dataclass(frozen=True)
class StateSpaceRealization:
    """SISO state-space realization (A, B, C) with zero feedthrough."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def transfer(self, s: complex) -> complex:
        """Evaluate C (sI - A)^-1 B."""
        n = self.A.shape[0]
        return complex(self.C @ np.linalg.solve(s * np.eye(n) - self.A, self.B))


@dataclass(frozen=True, eq=False)
class SwitchedModel:
    """Piecewise-LTI model: x' = A_i x + B_i u in stage i, u = (v_s, v_r).

    The feedback row gives y = C_row x + D_row u, compared against the ramp.
    E1/E2 are the per-stage output-voltage rows; E is their mean.
    """

    N: int
    A1: np.ndarray
    A2: np.ndarray
    B1: np.ndarray
    B2: np.ndarray
    C_row: np.ndarray
    D_row: np.ndarray
    E1: np.ndarray
    E2: np.ndarray
    E: np.ndarray
    T: float
    ramp: RampSpec
    state_labels: Tuple[str, ...]
    params: ConverterParams = field(repr=False)

    def __post_init__(self):
        for name in ("A1", "A2", "B1", "B2", "C_row", "D_row", "E1", "E2", "E"):
            arr = np.ascontiguousarray(np.asarray(getattr(self, name), dtype=float))
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        n = self.N
        shapes = {
            "A1": (n, n), "A2": (n, n), "B1": (n, 2), "B2": (n, 2),
            "C_row": (n,), "D_row": (2,), "E1": (n,), "E2": (n,), "E": (n,),
        }
        for name, shape in shapes.items():
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} must have shape {shape}")
        if not np.array_equal(self.E, (self.E1 + self.E2) / 2.0):
            raise ValueError("E must equal (E1 + E2)/2 exactly")
        if len(self.state_labels) != n:
            raise ValueError("state_labels length must equal N")

    def u_vector(self, v_r: float) -> np.ndarray:
        return np.array([self.params.v_s, v_r])

    def output_y(self, x: np.ndarray, v_r: float) -> float:
        return float(self.C_row @ x + self.D_row @ self.u_vector(v_r))


def _power_stage(p: ConverterParams):
    """Stage matrices for the boost power stage, ESR included.

    In S1 the capacitor discharges through the load alone; in S2 the inductor
    feeds the capacitor/load node.  With ESR the output voltage is
    v_o = v_C + R_c i_C, so E1 != E2 when R_c > 0; both reduce to the ideal
    rows as R_c -> 0.
    """
    L, C, R, r, Rc = p.L, p.C_f, p.R, p.r, p.R_c
    A1 = np.array([[-r / L, 0.0],
                   [0.0, -1.0 / (C * (R + Rc))]])
    E1 = np.array([0.0, R / (R + Rc)])
    A2 = np.array([[-(r + R * Rc / (R + Rc)) / L, -R / ((R + Rc) * L)],
                   [R / ((R + Rc) * C), -1.0 / ((R + Rc) * C)]])
    E2 = np.array([R * Rc / (R + Rc), R / (R + Rc)])
    B = np.array([[1.0 / L, 0.0],
                  [0.0, 0.0]])
    return A1, A2, B, E1, E2


def build_pvmc_model(params: ConverterParams) -> SwitchedModel:
    """Switched model for proportional voltage-mode control (N = 2)."""
    if not isinstance(params.scheme, Pvmc):
        raise ValueError("build_pvmc_model requires a Pvmc scheme")
    k_p = params.scheme.k_p
    A1, A2, B, E1, E2 = _power_stage(params)
    return SwitchedModel(
        N=2, A1=A1, A2=A2, B1=B, B2=B,
        C_row=np.array([0.0, -k_p]), D_row=np.array([0.0, k_p]),
        E1=E1, E2=E2, E=(E1 + E2) / 2.0,
        T=params.T, ramp=RampSpec(params.V_h, params.T),
        state_labels=("i_L", "v_C"), params=params,
    )


def realize_type3(comp: VmcType3) -> StateSpaceRealization:
    """3-state realization of the type-III compensator transfer function.

    Modal form: one integrator state plus one state per pole, with each
    state rescaled to contribute unit weight to the output.  The balanced
    scaling keeps the realization numerically benign; a companion form has
    coefficient magnitudes spanning ten decades for typical pole/zero
    placements, which wrecks finite-difference Jacobians downstream.
    """
    Kc, z1, z2, p1, p2 = comp.K_c, comp.z1, comp.z2, comp.p1, comp.p2
    g = Kc * p1 * p2 / (z1 * z2)
    r0 = Kc  # residue of the pole at s = 0
    if abs(p1 - p2) > 1e-9 * (p1 + p2):
        r1 = g * (z1 - p1) * (z2 - p1) / ((-p1) * (p2 - p1))
        r2 = g * (z1 - p2) * (z2 - p2) / ((-p2) * (p1 - p2))
        A = np.diag([0.0, -p1, -p2])
        B = np.array([r0, r1, r2])
        C = np.array([1.0, 1.0, 1.0])
        # a residue can vanish when a zero cancels a pole; drop its output
        # weight so the scaling stays finite
        for i, res in enumerate((r0, r1, r2)):
            if res == 0.0:
                C[i] = 0.0
                B[i] = 1.0
    else:
        # repeated pole p: G = r0/s + ra/(s+p) + rb/(s+p)^2 (Jordan chain)
        pm = (p1 + p2) / 2.0
        rb = g * (z1 - pm) * (z2 - pm) / (-pm)
        ra = g * (pm * pm - z1 * z2) / (pm * pm)
        A = np.array([[0.0, 0.0, 0.0],
                      [0.0, -pm, 0.0],
                      [0.0, 1.0, -pm]])
        B = np.array([r0, 1.0, 0.0])
        C = np.array([1.0, ra, rb])
    return StateSpaceRealization(A=A, B=B, C=C)


def build_type3_model(params: ConverterParams) -> SwitchedModel:
    """Switched model for VMC with a type-III compensator (N = 5).

    The compensator integrates e = v_r - v_o and the control output is
    y = v_r + G_c(s) e, so the composed feedback row stays stage-independent
    while the stage matrices pick up the (stage-dependent) v_o coupling.
    """
    if not isinstance(params.scheme, VmcType3):
        raise ValueError("build_type3_model requires a VmcType3 scheme")
    comp = realize_type3(params.scheme)
    A1p, A2p, Bp, E1p, E2p = _power_stage(params)

    def stack(Ap, Ep):
        A = np.zeros((5, 5))
        A[:2, :2] = Ap
        A[2:, 2:] = comp.A
        A[2:, :2] = -np.outer(comp.B, Ep)
        B = np.zeros((5, 2))
        B[:2, :] = Bp
        B[2:, 1] = comp.B
        return A, B

    A1, B1 = stack(A1p, E1p)
    A2, B2 = stack(A2p, E2p)
    E1 = np.concatenate([E1p, np.zeros(3)])
    E2 = np.concatenate([E2p, np.zeros(3)])
    return SwitchedModel(
        N=5, A1=A1, A2=A2, B1=B1, B2=B2,
        C_row=np.concatenate([[0.0, 0.0], comp.C]),
        D_row=np.array([0.0, 1.0]),
        E1=E1, E2=E2, E=(E1 + E2) / 2.0,
        T=params.T, ramp=RampSpec(params.V_h, params.T),
        state_labels=("i_L", "v_C", "xc_int", "xc_p1", "xc_p2"), params=params,
    )


def build_cmc_model(params: ConverterParams) -> SwitchedModel:
    """Switched model for peak current-mode control (N = 2).

    Open loop: y = i_c - i_L, with the reference input carrying i_c.
    Closed loop: y = k_p (v_r - v_C) - i_L.  Either way the switch fires on
    the downward crossing of y through the compensation ramp (amplitude V_h,
    zero for uncompensated CMC), i.e. when i_L reaches the ramp-corrected
    current command.
    """
    if isinstance(params.scheme, CmcOpenLoop):
        C_row = np.array([-1.0, 0.0])
        D_row = np.array([0.0, 1.0])
    elif isinstance(params.scheme, CmcClosedLoop):
        k_p = params.scheme.k_p
        C_row = np.array([-1.0, -k_p])
        D_row = np.array([0.0, k_p])
    else:
        raise ValueError("build_cmc_model requires a CMC scheme")
    A1, A2, B, E1, E2 = _power_stage(params)
    return SwitchedModel(
        N=2, A1=A1, A2=A2, B1=B, B2=B,
        C_row=C_row, D_row=D_row,
        E1=E1, E2=E2, E=(E1 + E2) / 2.0,
        T=params.T, ramp=RampSpec(params.V_h, params.T),
        state_labels=("i_L", "v_C"), params=params,
    )


def build_model(params: ConverterParams) -> SwitchedModel:
    """Dispatch to the builder matching params.scheme."""
    if isinstance(params.scheme, Pvmc):
        return build_pvmc_model(params)
    if isinstance(params.scheme, VmcType3):
        return build_type3_model(params)
    return build_cmc_model(params)
