"""Reference-voltage sweeps: branch tracking, stability classification, and
location of saddle-node, Neimark, and period-doubling points.

The sweep seeds orbits at every grid point from the averaged duty solutions
and from the saturated DC state, then chains converged orbits across the
grid (natural continuation, ascending and descending).  Branches are graphs
over v_r away from the fold, so critical points are pinned afterwards by
bisection on v_r: multiplier-crossing indicators for Neimark/PDB, orbit-pair
disappearance for the fold.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import averaged
from .orbits import (GRAZING_ZONE, Orbit, dc_orbit, find_periodic_orbit,
                     fixed_duty_orbit)
from .params import CmcOpenLoop
from .sim import state_scale
from .switched import SwitchedModel

DUTY_MAX_DEFAULT = 0.99
DEDUP_TOL = 1e-6
BRANCH_JUMP = 0.05


@dataclass
class Branch:
    """Ordered (v_r, Orbit) points sharing one solution family."""

    origin: str
    points: List[Tuple[float, Orbit]] = field(default_factory=list)

    def duties(self) -> np.ndarray:
        return np.array([orb.duty for _, orb in self.points])

    def grid(self) -> np.ndarray:
        return np.array([vr for vr, _ in self.points])


@dataclass
class CriticalPoint:
    kind: str  # "snb" | "neimark" | "pdb"
    v_r: float
    duty: float
    state: np.ndarray


@dataclass
class BifurcationDiagram:
    sweep_grid: np.ndarray
    branches: List[Branch]
    critical_points: List[CriticalPoint]

    def t_branches(self) -> List[Branch]:
        return [b for b in self.branches if b.origin != "dc"]


def _is_valid_t_orbit(orbit: Orbit, duty_max: float) -> bool:
    return bool(orbit.converged
                and all(GRAZING_ZONE <= d <= duty_max for d in orbit.duties))


def _is_dc_orbit(orbit: Orbit) -> bool:
    return orbit.converged and orbit.classification == "saturated-dc"


def _dedup(cands: List[Tuple[Orbit, str]], scale: np.ndarray,
           tol: float = DEDUP_TOL) -> List[Tuple[Orbit, str]]:
    """Drop near-identical orbits; earlier entries win so origins stay put."""
    kept: List[Tuple[Orbit, str]] = []
    for orb, origin in cands:
        if all(np.linalg.norm((orb.x_star - o.x_star) / scale) > tol
               for o, _ in kept):
            kept.append((orb, origin))
    kept.sort(key=lambda c: c[0].duty)
    return kept


def _refine_seed_duty(model: SwitchedModel, v_r: float, duty_hint: float,
                      span: float = 0.05) -> float:
    """Duty near duty_hint whose frozen-switching-time orbit matches v_r.

    Walks outward from the hint until the exact-duty reference curve
    brackets v_r, then bisects.  Near duty saturation the T-orbit sits a
    hair from its own border collision with the DC branch, so a seed from
    an approximate duty can land on the saturated side of the comparator
    and fall onto the DC attractor; matching v_r exactly sidesteps that.
    Returns the hint unchanged when no bracket exists (e.g. past the fold).
    """
    lo_lim = max(GRAZING_ZONE, duty_hint - span)
    hi_lim = min(1.0 - GRAZING_ZONE, duty_hint + span)

    def f(d):
        return fixed_duty_orbit(model, d)[0] - v_r

    f0 = f(duty_hint)
    if f0 == 0.0:
        return duty_hint
    step = 2e-3
    a = b = duty_hint
    fa = fb = f0
    for _ in range(40):
        moved = False
        if a > lo_lim:
            a_new = max(lo_lim, a - step)
            fa_new = f(a_new)
            if fa_new * f0 < 0:
                lo, hi, flo = a_new, a, fa_new
                break
            a, fa, moved = a_new, fa_new, True
        if b < hi_lim:
            b_new = min(hi_lim, b + step)
            fb_new = f(b_new)
            if fb_new * f0 < 0:
                lo, hi, flo = b, b_new, fb
                break
            b, fb, moved = b_new, fb_new, True
        if not moved:
            return duty_hint
    else:
        return duty_hint
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if flo * fm <= 0:
            hi = mid
        else:
            lo, flo = mid, fm
        if hi - lo <= 1e-14:
            break
    return 0.5 * (lo + hi)


def solve_orbit_at(model: SwitchedModel, v_r: float, duty_hint: float,
                   duty_max: float = DUTY_MAX_DEFAULT,
                   newton_tol: float = 1e-10) -> Optional[Orbit]:
    """Find the T-periodic orbit near duty_hint at the reference v_r.

    The seed comes from the exact frozen-switching-time construction at a
    duty refined to the target v_r; Newton on the stroboscopic map then
    verifies and polishes the fixed point.  Returns None when no valid
    T-orbit is found.
    """
    d_seed = _refine_seed_duty(model, v_r, duty_hint)
    _, seed = fixed_duty_orbit(model, d_seed)
    orb = find_periodic_orbit(model, v_r, seed, newton_tol=newton_tol)
    return orb if _is_valid_t_orbit(orb, duty_max) else None


def _solve_point(model: SwitchedModel, v_r: float, duty_max: float,
                 newton_tol: float) -> List[Tuple[Orbit, str]]:
    """Averaged- and DC-seeded orbits at one grid point."""
    p = model.params
    cands: List[Tuple[Orbit, str]] = []
    if not isinstance(p.scheme, CmcOpenLoop):
        labels = ("averaged-lower", "averaged-upper")
        for i, d in enumerate(averaged.duty_solutions(p, v_r)):
            orb = solve_orbit_at(model, v_r, d, duty_max, newton_tol)
            if orb is not None:
                cands.append((orb, labels[min(i, 1)]))
    if p.r > 0:
        orb = dc_orbit(model, v_r)
        if orb is not None:
            cands.append((orb, "dc"))
    return cands


def _solve_point_star(args):
    return _solve_point(*args)


def sweep(model: SwitchedModel, v_r_min: float, v_r_max: float, n_points: int,
          duty_max: float = DUTY_MAX_DEFAULT, newton_tol: float = 1e-10,
          jobs: int = 1, locate: bool = True) -> BifurcationDiagram:
    """Sweep v_r over [v_r_min, v_r_max] and assemble the bifurcation diagram.

    Orbits with a per-cycle duty above duty_max are treated as degenerate:
    within that band of duty saturation the switching tangency makes the
    sampled map effectively non-differentiable and the T-periodic solution
    is about to collide with the DC branch.
    """
    if not v_r_min < v_r_max:
        raise ValueError("v_r_min must be < v_r_max")
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    grid = np.linspace(v_r_min, v_r_max, n_points)
    scale = state_scale(model)

    # independent pass: averaged + DC seeds at every grid point
    tasks = [(model, vr, duty_max, newton_tol) for vr in grid]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            per_point = list(ex.map(_solve_point_star, tasks, chunksize=4))
    else:
        per_point = [_solve_point_star(t) for t in tasks]
    per_point = [_dedup(c, scale) for c in per_point]

    # continuation passes: re-seed each neighbor's orbits, both directions
    for order in (range(1, n_points), range(n_points - 2, -1, -1)):
        for i in order:
            j = i - 1 if order.step == 1 else i + 1
            for prev, _ in per_point[j]:
                if prev.classification == "saturated-dc":
                    continue
                orb = solve_orbit_at(model, grid[i], prev.duty, duty_max,
                                     newton_tol)
                if orb is None:
                    orb = find_periodic_orbit(model, grid[i], prev.x_star,
                                              period_mult=prev.period_mult,
                                              newton_tol=newton_tol)
                    if not _is_valid_t_orbit(orb, duty_max):
                        continue
                per_point[i] = _dedup(per_point[i] + [(orb, "continuation")],
                                      scale)

    branches = _assemble_branches(grid, per_point)
    diagram = BifurcationDiagram(sweep_grid=grid, branches=branches,
                                 critical_points=[])
    if locate:
        diagram.critical_points = _locate_all(model, diagram, duty_max, newton_tol)
    return diagram


def _assemble_branches(grid: np.ndarray,
                       per_point: List[List[Tuple[Orbit, str]]]) -> List[Branch]:
    """Chain orbits across the grid by duty continuity."""
    open_t: List[Branch] = []
    dc_branch: Optional[Branch] = None
    done: List[Branch] = []
    for i, vr in enumerate(grid):
        dc_here = [orb for orb, _ in per_point[i] if orb.classification == "saturated-dc"]
        t_here = [(orb, org) for orb, org in per_point[i]
                  if orb.classification != "saturated-dc"]
        if dc_here:
            if dc_branch is None:
                dc_branch = Branch(origin="dc")
            dc_branch.points.append((vr, dc_here[0]))
        matched = [False] * len(t_here)
        still_open: List[Branch] = []
        for br in open_t:
            last_duty = br.points[-1][1].duty
            best_j, best_gap = None, BRANCH_JUMP
            for j, (orb, _) in enumerate(t_here):
                gap = abs(orb.duty - last_duty)
                if not matched[j] and gap <= best_gap:
                    best_j, best_gap = j, gap
            if best_j is None:
                done.append(br)
            else:
                matched[best_j] = True
                br.points.append((vr, t_here[best_j][0]))
                still_open.append(br)
        open_t = still_open
        for j, (orb, org) in enumerate(t_here):
            if not matched[j]:
                nb = Branch(origin=org)
                nb.points.append((vr, orb))
                open_t.append(nb)
    done.extend(open_t)
    if dc_branch is not None:
        done.append(dc_branch)
    # deterministic order: by first grid value, then by first duty
    done.sort(key=lambda b: (b.points[0][0], b.points[0][1].duty))
    return done


def _neimark_indicator(orbit: Orbit) -> Optional[float]:
    if orbit.multipliers is None:
        return None
    m = orbit.multipliers
    mags = np.abs(m)
    complex_pair = np.abs(m.imag) > 1e-9 * (1.0 + mags)
    if not np.any(complex_pair):
        return None
    return float(np.max(mags[complex_pair]) - 1.0)


def _pdb_indicator(orbit: Orbit) -> Optional[float]:
    if orbit.multipliers is None:
        return None
    m = orbit.multipliers
    real = np.abs(m.imag) <= 1e-9 * (1.0 + np.abs(m))
    if not np.any(real):
        return None
    return float(np.min(m.real[real]) + 1.0)


_INDICATORS = {"neimark": _neimark_indicator, "pdb": _pdb_indicator}


class NoBracketError(RuntimeError):
    """The branch does not bracket the requested multiplier crossing."""


def locate_bifurcation(model: SwitchedModel, branch: Branch, kind: str,
                       rel_tol: float = 1e-4, duty_max: float = DUTY_MAX_DEFAULT,
                       newton_tol: float = 1e-10,
                       fold_probe: Optional[float] = None) -> Tuple[float, float]:
    """Pin a critical point on a branch by bisection on v_r.

    kind = "neimark" or "pdb": bisect the multiplier-crossing indicator
    between the bracketing pair of branch points.  kind = "snb": bisect on
    disappearance of the orbit beyond the branch end (fold_probe gives a
    v_r known to lie past the fold; defaults to one grid step beyond).
    Returns (v_r_crit, duty_crit).
    """
    return _locate(model, branch, kind, rel_tol, duty_max, newton_tol,
                   fold_probe)[:2]


def _locate(model: SwitchedModel, branch: Branch, kind: str,
            rel_tol: float, duty_max: float, newton_tol: float,
            fold_probe: Optional[float]) -> Tuple[float, float, np.ndarray]:
    pts = branch.points
    if len(pts) < 2:
        raise NoBracketError("branch too short")
    if kind in _INDICATORS:
        ind = _INDICATORS[kind]
        vals = [ind(orb) for _, orb in pts]
        bracket = None
        for i in range(len(pts) - 1):
            a, b = vals[i], vals[i + 1]
            if a is not None and b is not None and a * b < 0:
                bracket = i
                break
        if bracket is None:
            raise NoBracketError(f"no {kind} crossing on this branch")
        (va, orb_a), (vb, _) = pts[bracket], pts[bracket + 1]
        fa = vals[bracket]
        while abs(vb - va) > rel_tol * abs(0.5 * (va + vb)):
            vm = 0.5 * (va + vb)
            orb_m = solve_orbit_at(model, vm, orb_a.duty, duty_max, newton_tol)
            fm = ind(orb_m) if orb_m is not None else None
            if fm is None:
                raise NoBracketError(f"lost the orbit while bisecting {kind}")
            if fa * fm <= 0:
                vb = vm
            else:
                va, orb_a, fa = vm, orb_m, fm
        return 0.5 * (va + vb), orb_a.duty, orb_a.x_star
    if kind == "snb":
        va, orb_a = pts[-1]
        if fold_probe is None:
            step = abs(pts[-1][0] - pts[-2][0])
            fold_probe = va + step
        vb = fold_probe
        # make sure the probe really lies past the fold
        for _ in range(8):
            if solve_orbit_at(model, vb, orb_a.duty, duty_max, newton_tol) is None:
                break
            vb += (vb - va)
        else:
            raise NoBracketError("could not bracket the fold")
        while abs(vb - va) > rel_tol * abs(0.5 * (va + vb)):
            vm = 0.5 * (va + vb)
            orb_m = solve_orbit_at(model, vm, orb_a.duty, duty_max, newton_tol)
            if orb_m is not None:
                va, orb_a = vm, orb_m
            else:
                vb = vm
        return 0.5 * (va + vb), orb_a.duty, orb_a.x_star
    raise ValueError(f"unknown bifurcation kind: {kind!r}")


def _locate_all(model: SwitchedModel, diagram: BifurcationDiagram,
                duty_max: float, newton_tol: float) -> List[CriticalPoint]:
    found: List[CriticalPoint] = []
    grid = diagram.sweep_grid
    step = grid[1] - grid[0] if len(grid) > 1 else 0.0
    for br in diagram.t_branches():
        for kind in ("neimark", "pdb"):
            try:
                vr_c, duty_c, state = _locate(model, br, kind, 1e-4, duty_max,
                                              newton_tol, None)
            except NoBracketError:
                continue
            found.append(CriticalPoint(kind, vr_c, duty_c, state))
        # fold: branch ends inside the grid although the averaged solution
        # family continues (pair disappearance)
        v_end = br.points[-1][0]
        ends_inside = v_end < grid[-1] - 0.5 * step
        high_end_duty = br.points[-1][1].duty
        if ends_inside and not np.isclose(high_end_duty, duty_max, atol=0.02):
            try:
                vr_c, duty_c, state = _locate(model, br, "snb", 1e-4, duty_max,
                                              newton_tol, v_end + step)
                found.append(CriticalPoint("snb", vr_c, duty_c, state))
            except NoBracketError:
                pass
    # merge duplicate critical points located from both sides of a fold
    merged: List[CriticalPoint] = []
    for cp in sorted(found, key=lambda c: (c.kind, c.v_r)):
        dup = any(c.kind == cp.kind and abs(c.v_r - cp.v_r) <= 2e-3 * abs(cp.v_r)
                  for c in merged)
        if not dup:
            merged.append(cp)
    return merged


def coexistence_window(model: SwitchedModel, diagram: BifurcationDiagram,
                       duty_max: float = DUTY_MAX_DEFAULT, rel_tol: float = 1e-4,
                       newton_tol: float = 1e-10) -> Tuple[float, float]:
    """Refined v_r range over which two distinct T-periodic orbits coexist.

    The upper endpoint is the fold; the lower endpoint is where the
    higher-duty orbit leaves the trackable duty range (enters the
    near-saturation band on its way to the collision with the DC branch).
    """
    grid = diagram.sweep_grid
    counts = _orbit_counts(diagram)
    idx = np.where(counts >= 2)[0]
    if len(idx) == 0:
        raise NoBracketError("no coexistence region on the sweep grid")
    scale = state_scale(model)

    def count_at(vr: float, seeds: Sequence[Orbit]) -> Tuple[int, List[Orbit]]:
        got: List[Orbit] = []
        for s in seeds:
            orb = solve_orbit_at(model, vr, s.duty, duty_max, newton_tol)
            if orb is not None:
                got.append(orb)
        uniq: List[Orbit] = []
        for orb in sorted(got, key=lambda o: o.duty):
            if all(np.linalg.norm((orb.x_star - u.x_star) / scale) > DEDUP_TOL
                   for u in uniq):
                uniq.append(orb)
        return len(uniq), uniq

    def orbits_at(i: int) -> List[Orbit]:
        vr = grid[i]
        res = []
        for br in diagram.t_branches():
            for v, orb in br.points:
                if v == vr:
                    res.append(orb)
        return res

    step = grid[1] - grid[0]
    # upper endpoint
    hi_seeds = orbits_at(idx[-1])
    va = grid[idx[-1]]
    vb = grid[idx[-1] + 1] if idx[-1] + 1 < len(grid) else va + step
    for _ in range(8):
        n, _ = count_at(vb, hi_seeds)
        if n < 2:
            break
        vb += (vb - va)
    else:
        raise NoBracketError("could not bracket the upper coexistence endpoint")
    while abs(vb - va) > rel_tol * abs(0.5 * (va + vb)):
        vm = 0.5 * (va + vb)
        n, got = count_at(vm, hi_seeds)
        if n >= 2:
            va, hi_seeds = vm, got
        else:
            vb = vm
    v_hi = 0.5 * (va + vb)
    # lower endpoint
    lo_seeds = orbits_at(idx[0])
    if idx[0] == 0:
        v_lo = grid[0]
    else:
        va, vb = grid[idx[0]], grid[idx[0] - 1]
        while abs(vb - va) > rel_tol * abs(0.5 * (va + vb)):
            vm = 0.5 * (va + vb)
            n, got = count_at(vm, lo_seeds)
            if n >= 2:
                va, lo_seeds = vm, got
            else:
                vb = vm
        v_lo = 0.5 * (va + vb)
    return v_lo, v_hi


def _orbit_counts(diagram: BifurcationDiagram) -> np.ndarray:
    counts = np.zeros(len(diagram.sweep_grid), dtype=int)
    pos = {vr: i for i, vr in enumerate(diagram.sweep_grid)}
    for br in diagram.t_branches():
        for vr, _ in br.points:
            counts[pos[vr]] += 1
    return counts


def export_diagram(diagram: BifurcationDiagram, out_dir, run_id: str,
                   state_labels: Sequence[str]) -> Tuple[str, str]:
    """Write <run_id>_branches.csv and <run_id>_critical.csv; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    n = len(state_labels)
    bpath = os.path.join(out_dir, f"{run_id}_branches.csv")
    cpath = os.path.join(out_dir, f"{run_id}_critical.csv")
    mult_cols = [f"mult{i}_{p}" for i in range(n) for p in ("re", "im")]
    with open(bpath, "w", newline="") as fh:
        head = ["branch_id", "origin", "v_r", "duty", "v_C_at_clock",
                "classification", "max_mult"] + mult_cols
        head += [f"x_{lab}" for lab in state_labels]
        fh.write(",".join(head) + "\n")
        for bid, br in enumerate(diagram.branches):
            for vr, orb in br.points:
                row = [str(bid), br.origin, f"{vr:.17e}", f"{orb.duty:.17e}",
                       f"{orb.x_star[1]:.17e}", orb.classification]
                if orb.multipliers is not None:
                    row.append(f"{orb.max_multiplier:.17e}")
                    for m in orb.multipliers:
                        row += [f"{m.real:.17e}", f"{m.imag:.17e}"]
                else:
                    row.append("nan")
                    row += ["nan", "nan"] * n
                row += [f"{v:.17e}" for v in orb.x_star]
                fh.write(",".join(row) + "\n")
    with open(cpath, "w", newline="") as fh:
        head = ["kind", "v_r", "duty"] + [f"x_{lab}" for lab in state_labels]
        fh.write(",".join(head) + "\n")
        for cp in diagram.critical_points:
            row = [cp.kind, f"{cp.v_r:.17e}", f"{cp.duty:.17e}"]
            row += [f"{v:.17e}" for v in cp.state]
            fh.write(",".join(row) + "\n")
    return bpath, cpath
