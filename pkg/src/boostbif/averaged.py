"""State-space-averaged analysis: steady states, coexisting solutions,
characteristic coefficients, poles, and the saddle-node / Hopf critical
conditions in closed form.

All formulas ignore the capacitor ESR, which only perturbs the ripple; the
averaged steady state and the bifurcation conditions depend on the inductor
parasitic resistance r through eta = r/R.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from .params import CmcClosedLoop, ConverterParams, Pvmc, VmcType3


class NoBifurcationError(ValueError):
    """Raised when the requested bifurcation cannot occur (e.g. SNB at r = 0)."""


def averaged_matrices(params: ConverterParams, d: float) -> Tuple[np.ndarray, np.ndarray]:
    """Duty-weighted power-stage matrices A = d A1 + (1-d) A2, B (ESR ignored)."""
    L, C, R, r = params.L, params.C_f, params.R, params.r
    A = np.array([[-r / L, -(1.0 - d) / L],
                  [(1.0 - d) / C, -1.0 / (R * C)]])
    B = np.array([[1.0 / L, 0.0],
                  [0.0, 0.0]])
    return A, B


def averaged_steady_state(params: ConverterParams, d: float) -> Tuple[float, float]:
    """Averaged operating point (I_L, V_C) at duty ratio d.

    I_L = v_s / (R (eta + (1-d)^2)),  V_C = v_s (1-d) / (eta + (1-d)^2).
    """
    eta = params.eta
    u = 1.0 - d
    den = eta + u * u
    if den == 0.0:
        raise ValueError("degenerate steady state: eta = 0 and d = 1")
    return params.v_s / (params.R * den), params.v_s * u / den


def i_peak(params: ConverterParams, d: float) -> float:
    """Peak inductor current I_L + dI_L/2 with ripple dI_L = (v_s - r I_L) d T / L."""
    il, _ = averaged_steady_state(params, d)
    ripple = (params.v_s - params.r * il) * d * params.T / params.L
    return il + ripple / 2.0


def vr_of_duty(params: ConverterParams, d: float) -> float:
    """Steady-state reference voltage that sustains duty ratio d."""
    _, vc = averaged_steady_state(params, d)
    scheme = params.scheme
    if isinstance(scheme, Pvmc):
        return d / params.kappa + vc
    if isinstance(scheme, CmcClosedLoop):
        return i_peak(params, d) / scheme.k_p + vc
    if isinstance(scheme, VmcType3):
        # infinite DC gain regulates v_o to the reference exactly
        return vc
    raise ValueError("vr_of_duty is undefined for open-loop CMC "
                     "(the reference is a current, not a voltage)")


def open_loop_duty(params: ConverterParams, i_c: float,
                   d_max: float = 0.999) -> Optional[float]:
    """Duty ratio at which the peak current reaches the command i_c (CMC open loop).

    Returns None when i_c is below the minimum reachable peak current.
    I_peak(d) is strictly increasing, so the solution is unique.
    """
    if i_peak(params, 0.0) >= i_c:
        return None
    if i_peak(params, d_max) <= i_c:
        return None
    lo, hi = 0.0, d_max
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if i_peak(params, mid) < i_c:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12:
            break
    return 0.5 * (lo + hi)


def duty_solutions(params: ConverterParams, v_r: float,
                   n_grid: int = 2000, d_max: float = 0.999) -> List[float]:
    """All duty ratios in (0, d_max) with vr_of_duty(d) = v_r, sorted ascending.

    Sign changes are bracketed on a dense grid and refined by bisection to a
    duty tolerance of 1e-12; the grid density guards against near-tangency
    at the fold.  An empty list means no averaged solution exists.
    """
    f = lambda d: vr_of_duty(params, d) - v_r
    grid = np.linspace(0.0, d_max, n_grid)
    vals = np.array([f(d) for d in grid])
    roots = []
    for i in range(n_grid - 1):
        a, b = grid[i], grid[i + 1]
        fa, fb = vals[i], vals[i + 1]
        if fa == 0.0:
            if a > 0.0:
                roots.append(a)
            continue
        if fa * fb < 0.0:
            while b - a > 1e-12:
                m = 0.5 * (a + b)
                fm = f(m)
                if fa * fm <= 0.0:
                    b = m
                else:
                    a, fa = m, fm
            roots.append(0.5 * (a + b))
    if vals[-1] == 0.0:
        roots.append(grid[-1])
    return sorted(roots)


def characteristic_coeffs(params: ConverterParams, d: float) -> Tuple[float, float]:
    """Closed-loop characteristic coefficients (c_1, c_0) of s^2 + c_1 s + c_0.

    c_1 = r/L + 1/(RC) - kappa I_L / C
    c_0 = (eta + (1-d)^2 + kappa R I_L ((1-d)^2 - eta)) / (L C)
    """
    if not isinstance(params.scheme, Pvmc):
        raise ValueError("characteristic coefficients apply to the PVMC loop")
    L, C, R = params.L, params.C_f, params.R
    eta, kappa = params.eta, params.kappa
    il, _ = averaged_steady_state(params, d)
    u2 = (1.0 - d) ** 2
    c1 = params.r / L + 1.0 / (R * C) - kappa * il / C
    c0 = (eta + u2 + kappa * R * il * (u2 - eta)) / (L * C)
    return c1, c0


def averaged_poles(params: ConverterParams, d: float) -> Tuple[complex, complex]:
    """Roots of s^2 + c_1 s + c_0 (exact quadratic formula)."""
    c1, c0 = characteristic_coeffs(params, d)
    disc = complex(c1 * c1 - 4.0 * c0) ** 0.5
    return (-c1 + disc) / 2.0, (-c1 - disc) / 2.0


def snb_duty(params: ConverterParams) -> float:
    """Critical duty ratio D_S of the saddle-node bifurcation.

    PVMC: exact positive root of c_0(D) = 0, i.e. D_S = 1 - sqrt(w) with
    w the positive root of w^2 + (2 eta + kappa v_s) w + eta^2 - kappa v_s eta = 0.
    CMC closed loop: numeric maximizer of the steady-state reference curve
    (golden-section search).  Type-III VMC / large-gain limit: 1 - sqrt(eta).
    """
    if params.r <= 0:
        raise NoBifurcationError("no saddle-node bifurcation when r = 0")
    eta = params.eta
    scheme = params.scheme
    if isinstance(scheme, Pvmc):
        kv = params.kappa * params.v_s
        w = math.sqrt((2.0 * eta + kv / 4.0) * kv) - eta - kv / 2.0
        if not 0.0 < w < 1.0:
            raise NoBifurcationError("c_0 has no root in the duty range")
        return 1.0 - math.sqrt(w)
    if isinstance(scheme, CmcClosedLoop):
        return _golden_max(lambda d: vr_of_duty(params, d), 0.0, 0.9999, tol=1e-9)
    if isinstance(scheme, VmcType3):
        return 1.0 - math.sqrt(eta)
    raise NoBifurcationError("open-loop CMC has no saddle-node bifurcation")


def _golden_max(f, a: float, b: float, tol: float) -> float:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def snb_reference(params: ConverterParams) -> float:
    """Critical reference v_r* at which the two solutions coalesce."""
    scheme = params.scheme
    if isinstance(scheme, VmcType3):
        if params.r <= 0:
            raise NoBifurcationError("no saddle-node bifurcation when r = 0")
        return params.v_s / (2.0 * math.sqrt(params.eta))
    return vr_of_duty(params, snb_duty(params))


def snb_reference_smallgain(params: ConverterParams) -> float:
    """Small-gain PVMC estimate v_r* = v_s/(2 sqrt(eta)) + (1 - sqrt(eta))/kappa."""
    if params.r <= 0:
        raise NoBifurcationError("no saddle-node bifurcation when r = 0")
    se = math.sqrt(params.eta)
    return params.v_s / (2.0 * se) + (1.0 - se) / params.kappa


def hopf_duty(params: ConverterParams) -> Optional[float]:
    """Critical duty ratio D_H of the averaged Hopf bifurcation, or None.

    D_H = 1 - sqrt(kappa v_s / (r R C / L + 1) - eta); absent when the
    radicand falls outside (0, 1] (in particular when the gain exceeds the
    threshold (1 + eta)(r R C/L + 1)/v_s, which pushes D_H below zero).
    """
    if not isinstance(params.scheme, Pvmc):
        raise ValueError("hopf_duty applies to the PVMC loop")
    denom = params.r * params.R * params.C_f / params.L + 1.0
    rad = params.kappa * params.v_s / denom - params.eta
    if rad <= 0.0 or rad > 1.0:
        return None
    return 1.0 - math.sqrt(rad)


def hopf_gain_threshold(params: ConverterParams) -> float:
    """Gain kappa above which the averaged Hopf bifurcation cannot occur."""
    denom = params.r * params.R * params.C_f / params.L + 1.0
    return (1.0 + params.eta) * denom / params.v_s


class HopfSnbOrder(NamedTuple):
    hopf_precedes: bool
    large_gain_condition: bool


def hopf_precedes_snb(params: ConverterParams) -> HopfSnbOrder:
    """Whether the Hopf point comes before the SNB as the duty increases.

    Also reports the sufficient condition kappa > 2 eta (r R C/L + 1)/v_s.
    """
    if not isinstance(params.scheme, Pvmc):
        raise ValueError("hopf_precedes_snb applies to the PVMC loop")
    if params.r <= 0:
        return HopfSnbOrder(False, False)
    denom = params.r * params.R * params.C_f / params.L + 1.0
    cond = params.kappa > 2.0 * params.eta * denom / params.v_s
    dh = hopf_duty(params)
    if dh is None:
        return HopfSnbOrder(False, cond)
    return HopfSnbOrder(dh < snb_duty(params), cond)


class CriticalMode(NamedTuple):
    K: float
    K_crit: float
    K_star: float
    snb_excluded: bool


def critical_mode_check(params: ConverterParams, d: float) -> CriticalMode:
    """CCM/DCM boundary constant vs. the SNB requirement at duty d.

    K = 2L/(RT) and critical-mode operation needs K = d(1-d)^2, while the
    SNB duty requires K = (2L/(rT))(1-d)^2.  SNB is excluded from critical
    mode when K* > K_crit, i.e. 2L/(rT) > d.
    """
    K = 2.0 * params.L / (params.R * params.T)
    K_crit = d * (1.0 - d) ** 2
    if params.r > 0:
        K_star = (2.0 * params.L / (params.r * params.T)) * (1.0 - d) ** 2
    else:
        K_star = math.inf
    return CriticalMode(K, K_crit, K_star, K_star > K_crit)


def control_to_output_tf(params: ConverterParams, d: float, s: complex) -> complex:
    """Control-to-output transfer function G_vd(s) = E (sI - A)^-1 (A1 - A2) X."""
    L, C = params.L, params.C_f
    il, vc = averaged_steady_state(params, d)
    A, _ = averaged_matrices(params, d)
    # forcing vector (A1 - A2) X = (V_C/L, -I_L/C)
    f0, f1 = vc / L, -il / C
    a11 = s - A[0, 0]
    a12 = -A[0, 1]
    a21 = -A[1, 0]
    a22 = s - A[1, 1]
    det = a11 * a22 - a12 * a21
    if det == 0:
        raise ZeroDivisionError("s is a pole of the averaged dynamics")
    # E = [0, 1]: second row of the resolvent
    return (-a21 * f0 + a11 * f1) / det


def dc_solution(params: ConverterParams) -> Tuple[float, float]:
    """Saturated D = 1 operating point (v_s/r, 0)."""
    if params.r <= 0:
        raise ValueError("the DC solution does not exist when r = 0 "
                         "(it would require i_L = v_s/r -> infinity)")
    return params.v_s / params.r, 0.0


@dataclass(frozen=True)
class AveragedPoint:
    """A duty-indexed averaged operating point with its small-signal data."""

    D: float
    I_L: float
    V_C: float
    c_1: float
    c_0: float
    poles: Tuple[complex, complex]


def averaged_point(params: ConverterParams, d: float) -> AveragedPoint:
    """Bundle the steady state and PVMC small-signal data at duty d."""
    il, vc = averaged_steady_state(params, d)
    c1, c0 = characteristic_coeffs(params, d)
    return AveragedPoint(D=d, I_L=il, V_C=vc, c_1=c1, c_0=c0,
                         poles=averaged_poles(params, d))


@dataclass(frozen=True)
class CriticalReport:
    """Closed-form critical conditions for one parameter set."""

    D_S: float
    v_r_star: float
    D_H: Optional[float]
    v_r_hopf: Optional[float]
    hopf_precedes_snb: bool
    K: float
    K_crit: float
    K_star: float
    snb_excluded_in_critical_mode: bool


def critical_report(params: ConverterParams) -> CriticalReport:
    """Evaluate all critical conditions (critical-mode check taken at D_S)."""
    ds = snb_duty(params)
    vr_star = snb_reference(params)
    dh = vr_h = None
    precedes = False
    if isinstance(params.scheme, Pvmc):
        dh = hopf_duty(params)
        if dh is not None:
            vr_h = vr_of_duty(params, dh)
        precedes = hopf_precedes_snb(params).hopf_precedes
    cm = critical_mode_check(params, ds)
    return CriticalReport(D_S=ds, v_r_star=vr_star, D_H=dh, v_r_hopf=vr_h,
                          hopf_precedes_snb=precedes, K=cm.K, K_crit=cm.K_crit,
                          K_star=cm.K_star, snb_excluded_in_critical_mode=cm.snb_excluded)
