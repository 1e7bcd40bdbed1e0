"""Periodic orbits of the stroboscopic map and their Floquet stability.

A kT-periodic solution is a fixed point of the k-fold clock-to-clock map.
Orbits are found by damped Newton iteration with a finite-difference
Jacobian; Floquet multipliers are the eigenvalues of the central-difference
Jacobian of the map at the fixed point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np

from . import averaged
from .params import VmcType3
from .switched import SwitchedModel
from .sim import _phi_gamma, get_engine, state_scale

GRAZING_ZONE = 1e-6  # duty distance from 0/1 inside which the map is not differentiated


class GrazingError(RuntimeError):
    """Switching instant too close to a cycle boundary for differentiation."""


def stroboscopic_map(model: SwitchedModel, v_r: float, x: np.ndarray,
                     n_presamples: int = 64) -> np.ndarray:
    """State after one clock period (equals a one-cycle simulation)."""
    x_next, _, _ = get_engine(model, n_presamples).cycle(np.asarray(x, float), v_r)
    return x_next


def _map_k(engine, v_r: float, x: np.ndarray, k: int):
    """k-fold map with per-cycle duties (None encoded as duty 1)."""
    duties = []
    for _ in range(k):
        x, t_star, _ = engine.cycle(x, v_r)
        duties.append(1.0 if t_star is None else t_star / engine.model.T)
    return x, duties


def _fd_jacobian(engine, v_r: float, x: np.ndarray, k: int) -> np.ndarray:
    """Central-difference Jacobian of the k-fold map at x."""
    n = len(x)
    J = np.empty((n, n))
    for i in range(n):
        h = max(1e-6, 1e-6 * abs(x[i]))
        xp = x.copy()
        xp[i] += h
        xm = x.copy()
        xm[i] -= h
        J[:, i] = (_map_k(engine, v_r, xp, k)[0] - _map_k(engine, v_r, xm, k)[0]) / (2 * h)
    return J


@dataclass
class Orbit:
    """A converged (or best-effort) kT-periodic fixed point."""

    model: SwitchedModel
    v_r: float
    period_mult: int
    x_star: np.ndarray
    duties: Tuple[float, ...]
    residual: float
    converged: bool
    multipliers: Optional[np.ndarray] = None
    classification: str = "unknown"

    @property
    def duty(self) -> float:
        return self.duties[0]

    @property
    def max_multiplier(self) -> float:
        if self.multipliers is None:
            return float("nan")
        return float(np.max(np.abs(self.multipliers)))

    def to_csv(self, path) -> None:
        """One-row CSV: state, duties, multiplier re/im pairs, classification."""
        cols = [f"x_{lab}" for lab in self.model.state_labels]
        cols += [f"duty_{i}" for i in range(self.period_mult)]
        n = self.model.N
        cols += [f"mult{i}_{p}" for i in range(n) for p in ("re", "im")]
        cols += ["residual", "converged", "classification", "v_r", "period_mult"]
        vals = [f"{v:.17e}" for v in self.x_star]
        vals += [f"{d:.17e}" for d in self.duties]
        if self.multipliers is not None:
            for m in self.multipliers:
                vals += [f"{m.real:.17e}", f"{m.imag:.17e}"]
        else:
            vals += ["nan", "nan"] * n
        vals += [f"{self.residual:.17e}", str(int(self.converged)),
                 self.classification, f"{self.v_r:.17e}", str(self.period_mult)]
        with open(path, "w", newline="") as fh:
            fh.write(",".join(cols) + "\n")
            fh.write(",".join(vals) + "\n")


def find_periodic_orbit(model: SwitchedModel, v_r: float, x_guess: np.ndarray,
                        period_mult: int = 1, newton_tol: float = 1e-10,
                        max_iter: int = 50, n_presamples: int = 64) -> Orbit:
    """Newton solve of P^k(x) = x from x_guess.

    The step is damped (halved up to 8 times while the residual fails to
    decrease) and falls back to a Tikhonov-regularized least-squares step
    when P^k - I is numerically singular, which happens right at a fold.
    A non-converged solve returns the best iterate flagged accordingly.
    """
    engine = get_engine(model, n_presamples)
    scale = state_scale(model)
    k = period_mult
    x = np.asarray(x_guess, dtype=float).copy()

    def residual(xx):
        fx, duties = _map_k(engine, v_r, xx, k)
        return fx - xx, float(np.linalg.norm((fx - xx) / scale)), duties

    F, best, duties = residual(x)
    for _ in range(max_iter):
        if best <= newton_tol:
            break
        J = _fd_jacobian(engine, v_r, x, k)
        A = J - np.eye(model.N)
        try:
            dx = np.linalg.solve(A, -F)
        except np.linalg.LinAlgError:
            lam = 1e-8
            dx = np.linalg.solve(A.T @ A + lam * np.eye(model.N), -A.T @ F)
        step = 1.0
        improved = False
        for _ in range(8):
            x_try = x + step * dx
            F_try, nrm_try, duties_try = residual(x_try)
            if nrm_try < best:
                improved = True
                break
            step *= 0.5
        if not improved:
            break  # stalled; keep the best iterate
        x, F, best, duties = x_try, F_try, nrm_try, duties_try

    converged = best <= newton_tol
    sat_high = all(d >= 1.0 for d in duties)
    if sat_high and not converged and model.N > 2:
        # compensator integrator wind-up: the saturated all-S1 map has no
        # full-state fixed point, but the power stage can still sit exactly
        # on the DC solution; accept it on the power-coordinate residual
        pw = float(np.linalg.norm(F[:2] / scale[:2]))
        if pw <= newton_tol:
            converged = True
            best = pw
    orbit = Orbit(model=model, v_r=v_r, period_mult=k, x_star=x,
                  duties=tuple(duties), residual=best, converged=converged)
    if converged and sat_high:
        orbit.classification = "saturated-dc"
    elif converged and all(d <= 0.0 for d in duties):
        orbit.classification = "saturated-low"
    if converged:
        try:
            orbit.multipliers = floquet_multipliers(model, orbit, n_presamples)
            info = classify_stability(orbit.multipliers)
            if orbit.classification == "unknown":
                orbit.classification = info.label
        except GrazingError:
            if orbit.classification == "unknown":
                orbit.classification = "grazing"
    else:
        orbit.classification = "no-convergence"
    return orbit


def floquet_multipliers(model: SwitchedModel, orbit: Orbit,
                        n_presamples: int = 64) -> np.ndarray:
    """Floquet multipliers: eigenvalues of the map Jacobian at the fixed point,
    sorted by descending magnitude.

    Raises GrazingError when any cycle switches within GRAZING_ZONE of a
    cycle boundary (the map is not differentiable through a graze).  Cycles
    saturated over the whole clock period are fine: the map is locally the
    smooth single-stage flow there.
    """
    for d in orbit.duties:
        if (0.0 < d < GRAZING_ZONE) or (1.0 - GRAZING_ZONE < d < 1.0):
            raise GrazingError(f"switching instant at duty {d} is too close to "
                               "the cycle boundary for finite differences")
    engine = get_engine(model, n_presamples)
    J = _fd_jacobian(engine, orbit.v_r, np.asarray(orbit.x_star, float),
                     orbit.period_mult)
    mult = np.linalg.eigvals(J)
    return mult[np.argsort(-np.abs(mult))]


class StabilityInfo(NamedTuple):
    label: str            # "stable" or "unstable"
    n_unstable: int
    tag: Optional[str]    # "snb", "pdb", "neimark" when a multiplier sits near the unit circle


def classify_stability(multipliers: np.ndarray, margin: float = 0.0,
                       delta: float = 0.02) -> StabilityInfo:
    """Routh-Hurwitz-style call on the sampled map: stable iff all |mult| < 1 - margin.

    The tag marks proximity to a codimension-one bifurcation: a real
    multiplier within delta of +1 (saddle-node), of -1 (period doubling),
    or a complex pair with modulus within delta of 1 (Neimark/Hopf).
    """
    mult = np.asarray(multipliers)
    mags = np.abs(mult)
    n_unstable = int(np.sum(mags > 1.0))
    stable = bool(np.all(mags < 1.0 - margin))
    tag = None
    band = delta * (1.0 + 1e-9)  # keep the band edge inclusive in floats
    real = np.abs(mult.imag) <= 1e-9 * (1.0 + mags)
    if np.any(real & (np.abs(mult.real - 1.0) <= band)):
        tag = "snb"
    elif np.any(real & (np.abs(mult.real + 1.0) <= band)):
        tag = "pdb"
    elif np.any(~real & (np.abs(mags - 1.0) <= band)):
        tag = "neimark"
    return StabilityInfo("stable" if stable else "unstable", n_unstable, tag)


def averaged_orbit_seed(model: SwitchedModel, v_r: float, duty: float) -> np.ndarray:
    """Clock-instant seed for a duty-`duty` orbit from the averaged solution.

    The averaged point is ripple-corrected to the clock instant (inductor
    current at its valley, capacitor voltage at its crest), which keeps the
    seed inside the Newton basin even when the current ripple is a large
    fraction of the mean.
    """
    p = model.params
    il, vc = averaged.averaged_steady_state(p, duty)
    d_il = (p.v_s - p.r * il) * duty * p.T / p.L
    d_vc = vc * duty * p.T / (p.R * p.C_f)
    x = np.zeros(model.N)
    x[0] = il - d_il / 2.0
    x[1] = vc + d_vc / 2.0
    if isinstance(p.scheme, VmcType3):
        # integrator state sets y = duty * V_h; fast states start relaxed
        x[2] = duty * p.V_h - v_r
    return x


def dc_seed(model: SwitchedModel) -> np.ndarray:
    """Seed at the saturated DC solution (v_s/r, 0, compensator relaxed)."""
    p = model.params
    x = np.zeros(model.N)
    x[0] = p.v_s / p.r
    if isinstance(p.scheme, VmcType3):
        # with v_o = 0 the integrator ramps; start it consistent with y > V_h
        x[2] = 2.0 * p.V_h
    return x


def fixed_duty_orbit(model: SwitchedModel, duty: float) -> Tuple[float, np.ndarray]:
    """Exact T-periodic loop state for a prescribed switching instant t* = duty*T.

    With the switching time frozen, periodicity plus the comparator condition
    y(t*) = h(t*) form one linear system in (x0, v_r): the reference voltage
    that sustains exactly this duty drops out alongside the clock state.
    Returns (v_r, x0).  This is the switched-model counterpart of the
    averaged steady-state relation and serves both as a high-quality Newton
    seed and as an independent cross-check on converged orbits.
    """
    if not 0.0 < duty < 1.0:
        raise ValueError("duty must lie strictly inside (0, 1)")
    p = model.params
    T = model.T
    ts = duty * T
    n = model.N
    P1, G1 = _phi_gamma(model.A1, model.B1, ts)
    P2, G2 = _phi_gamma(model.A2, model.B2, T - ts)
    W = P2 @ G1 + G2
    M = np.zeros((n + 1, n + 1))
    rhs = np.zeros(n + 1)
    M[:n, :n] = np.eye(n) - P2 @ P1
    M[:n, n] = -W[:, 1]
    rhs[:n] = W[:, 0] * p.v_s
    M[n, :n] = model.C_row @ P1
    M[n, n] = model.C_row @ G1[:, 1] + model.D_row[1]
    rhs[n] = model.ramp.V_h * duty - model.C_row @ G1[:, 0] * p.v_s \
        - model.D_row[0] * p.v_s
    sol = np.linalg.solve(M, rhs)
    return float(sol[n]), sol[:n]


def dc_orbit(model: SwitchedModel, v_r: float,
             n_presamples: int = 64) -> Optional[Orbit]:
    """The saturated duty-1 solution at (v_s/r, 0), or None when the
    comparator trips during a clock period started there.

    The power coordinates are an exact fixed point of the stage-1 flow, so
    no Newton iteration is involved.  With a type-III compensator the
    integrator winds up along the saturated branch; its state is not part
    of the fixed point and the orbit is reported on the power stage alone.
    """
    p = model.params
    if p.r <= 0:
        return None
    x = dc_seed(model)
    engine = get_engine(model, n_presamples)
    _, t_star, _ = engine.cycle(x, v_r)
    if t_star is not None:
        return None
    orbit = Orbit(model=model, v_r=v_r, period_mult=1, x_star=x,
                  duties=(1.0,), residual=0.0, converged=True,
                  classification="saturated-dc")
    try:
        orbit.multipliers = floquet_multipliers(model, orbit, n_presamples)
    except GrazingError:
        pass
    return orbit
