"""Command-line front end.

    boostbif --config <path> [--out DIR] [--run-id ID] [--jobs N] <command> ...

Commands: analyze, steady --vr V, simulate --vr V [--cycles N] [--x0 ...],
sweep [--from V --to V --points N], poles [--d-from D --d-to D --points N].

Human-readable reports go to stdout (4 significant digits); machine-readable
CSVs carry full precision (17 significant digits) and land in the output
directory under the run id.  Exit codes: 0 success, 2 config parse error,
3 validation error, 4 convergence failure, 5 I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import averaged
from .config import ConfigError, RunConfig, parse_config
from .params import CmcClosedLoop, CmcOpenLoop, Pvmc
from .sim import detect_dc_saturation, simulate_cycles
from .sweep import (NoBracketError, coexistence_window, export_diagram, sweep)
from .switched import build_model

EXIT_PARSE, EXIT_VALIDATION, EXIT_CONVERGENCE, EXIT_IO = 2, 3, 4, 5


def _fmt(x) -> str:
    if x is None:
        return "-"
    return f"{x:.4g}"


def _csv_val(x) -> str:
    if x is None:
        return "nan"
    if isinstance(x, str):
        return x
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{x:.17e}"


def _write_csv(path, header: List[str], rows: List[List]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_csv_val(v) for v in row) + "\n")


def cmd_analyze(cfg: RunConfig, out_dir: Path) -> None:
    p = cfg.params
    scheme = type(p.scheme).__name__
    print(f"scheme          {scheme}")
    print(f"eta = r/R       {_fmt(p.eta)}")
    kappa = p.kappa if p.V_h > 0 and isinstance(p.scheme, (Pvmc, CmcClosedLoop)) else None
    if kappa is not None:
        print(f"kappa = k_p/V_h {_fmt(kappa)}")

    d_s = vr_star = vr_star_sg = None
    try:
        d_s = averaged.snb_duty(p)
        vr_star = averaged.snb_reference(p)
        print(f"D_S             {_fmt(d_s)}")
        print(f"v_r*            {_fmt(vr_star)}")
    except averaged.NoBifurcationError as exc:
        print(f"D_S             no SNB ({exc})")
    if isinstance(p.scheme, Pvmc) and p.r > 0:
        vr_star_sg = averaged.snb_reference_smallgain(p)
        print(f"v_r* (small-gain estimate) {_fmt(vr_star_sg)}")

    d_h = vr_h = thresh = None
    eq14 = precedes = None
    if isinstance(p.scheme, Pvmc):
        d_h = averaged.hopf_duty(p)
        thresh = averaged.hopf_gain_threshold(p)
        if d_h is None:
            rel = ">" if p.kappa > thresh else "<="
            print(f"D_H             no Hopf (kappa = {_fmt(p.kappa)} {rel} "
                  f"threshold {_fmt(thresh)})")
        else:
            vr_h = averaged.vr_of_duty(p, d_h)
            print(f"D_H             {_fmt(d_h)}")
            print(f"v_r(D_H)        {_fmt(vr_h)}")
        print(f"Hopf suppressed above gain threshold {_fmt(thresh)}: "
              f"{'yes' if p.kappa > thresh else 'no'} (kappa = {_fmt(p.kappa)})")
        order = averaged.hopf_precedes_snb(p)
        precedes, eq14 = order.hopf_precedes, order.large_gain_condition
        print(f"Hopf precedes SNB: {precedes} "
              f"(large-gain sufficient condition holds: {eq14})")

    cm = dc = None
    if d_s is not None:
        cm = averaged.critical_mode_check(p, d_s)
        print(f"critical mode   K = {_fmt(cm.K)}, K_crit(D_S) = {_fmt(cm.K_crit)}, "
              f"K* = {_fmt(cm.K_star)}, SNB excluded: {cm.snb_excluded}")
    if p.r > 0:
        dc = averaged.dc_solution(p)
        print(f"DC solution     (i_L, v_C) = ({_fmt(dc[0])}, {_fmt(dc[1])})")
    else:
        print("DC solution     none (r = 0)")

    _write_csv(out_dir / f"{cfg.run_id}_analyze.csv",
               ["eta", "kappa", "D_S", "v_r_star", "v_r_star_smallgain",
                "D_H", "v_r_hopf", "hopf_gain_threshold", "hopf_precedes_snb",
                "eq14_condition", "K", "K_crit", "K_star",
                "snb_excluded_critical_mode", "dc_i_L", "dc_v_C"],
               [[p.eta, kappa, d_s, vr_star, vr_star_sg, d_h, vr_h, thresh,
                 precedes, eq14,
                 cm.K if cm else None, cm.K_crit if cm else None,
                 cm.K_star if cm else None, cm.snb_excluded if cm else None,
                 dc[0] if dc else None, dc[1] if dc else None]])


def cmd_steady(cfg: RunConfig, v_r: float, out_dir: Path) -> None:
    p = cfg.params
    duties = averaged.duty_solutions(p, v_r)
    rows = []
    print(f"averaged operating points at v_r = {_fmt(v_r)}:")
    for d in duties:
        il, vc = averaged.averaged_steady_state(p, d)
        if isinstance(p.scheme, Pvmc):
            c1, c0 = averaged.characteristic_coeffs(p, d)
            s1, s2 = averaged.averaged_poles(p, d)
        else:
            c1 = c0 = None
            s1 = s2 = complex("nan")
        rows.append(["periodic", d, il, vc, c1, c0,
                     s1.real, s1.imag, s2.real, s2.imag])
        print(f"  D = {_fmt(d)}: I_L = {_fmt(il)}, V_C = {_fmt(vc)}"
              + (f", poles = {s1:.4g}, {s2:.4g}" if c1 is not None else ""))
    if not duties:
        print("  none (v_r exceeds the reachable range)")
    if p.r > 0:
        il, vc = averaged.dc_solution(p)
        rows.append(["dc", 1.0, il, vc, None, None,
                     None, None, None, None])
        print(f"  DC (D = 1): (i_L, v_C) = ({_fmt(il)}, {_fmt(vc)})")
    _write_csv(out_dir / f"{cfg.run_id}_steady.csv",
               ["kind", "D", "I_L", "V_C", "c_1", "c_0",
                "pole1_re", "pole1_im", "pole2_re", "pole2_im"], rows)


def _auto_x0(cfg: RunConfig, model, v_r: float) -> np.ndarray:
    from .orbits import averaged_orbit_seed

    p = cfg.params
    if isinstance(p.scheme, CmcOpenLoop):
        d = averaged.open_loop_duty(p, v_r)
        if d is None:
            d = 0.5
    else:
        sols = averaged.duty_solutions(p, v_r)
        d = sols[0] if sols else 0.5
    seed = averaged_orbit_seed(model, v_r, d)
    return seed * (1.0 + cfg.sim_kick)


def cmd_simulate(cfg: RunConfig, v_r: float, x0_spec: Optional[str],
                 n_cycles: int, out_dir: Path) -> None:
    model = build_model(cfg.params)
    if x0_spec in (None, "auto"):
        x0 = _auto_x0(cfg, model, v_r)
    else:
        vals = [float(v) for v in x0_spec.split(",")]
        if len(vals) != model.N:
            raise ValueError(f"--x0 needs {model.N} comma-separated values "
                             f"({', '.join(model.state_labels)})")
        x0 = np.array(vals)
    traj = simulate_cycles(model, x0, v_r, n_cycles,
                           n_presamples=cfg.presamples)
    path = out_dir / f"{cfg.run_id}_trajectory.csv"
    traj.to_csv(path)
    tail = traj.cycle_duties[-4:]
    window = min(100, n_cycles)
    print(f"simulated {n_cycles} cycles at v_r = {_fmt(v_r)} from x0 = "
          f"[{', '.join(_fmt(v) for v in x0)}]")
    print(f"terminal duty pattern: [{', '.join(_fmt(d) for d in tail)}]")
    print(f"cycles saturated high: {int(traj.saturated_high.sum())}, "
          f"low: {int(traj.saturated_low.sum())}")
    print(f"DC saturation over the last {window} cycles: "
          f"{detect_dc_saturation(traj, window)}")
    print(f"trajectory written to {path}")


def cmd_sweep(cfg: RunConfig, v_from: Optional[float], v_to: Optional[float],
              n_points: Optional[int], jobs: int, out_dir: Path) -> None:
    v_from = cfg.sweep_from if v_from is None else v_from
    v_to = cfg.sweep_to if v_to is None else v_to
    n_points = cfg.sweep_points if n_points is None else n_points
    if v_from is None or v_to is None:
        raise ValueError("sweep range missing: set [sweep] from/to in the "
                         "config or pass --from/--to")
    model = build_model(cfg.params)
    diagram = sweep(model, v_from, v_to, n_points, duty_max=cfg.duty_max,
                    jobs=jobs)
    bpath, cpath = export_diagram(diagram, out_dir, cfg.run_id,
                                  model.state_labels)
    print(f"sweep over v_r in [{_fmt(v_from)}, {_fmt(v_to)}], "
          f"{n_points} points:")
    for i, br in enumerate(diagram.branches):
        g, d = br.grid(), br.duties()
        n_stable = sum(1 for _, o in br.points if o.classification == "stable")
        print(f"  branch {i} ({br.origin}): v_r [{_fmt(g[0])}, {_fmt(g[-1])}], "
              f"duty [{_fmt(d[0])}, {_fmt(d[-1])}], {len(g)} points, "
              f"{n_stable} stable")
    for cp in diagram.critical_points:
        print(f"  critical point: {cp.kind} at v_r = {_fmt(cp.v_r)}, "
              f"duty = {_fmt(cp.duty)}")
    try:
        lo, hi = coexistence_window(model, diagram, duty_max=cfg.duty_max)
        print(f"  coexistence window: {_fmt(lo)} < v_r < {_fmt(hi)}")
    except NoBracketError:
        pass
    print(f"branches written to {bpath}, critical points to {cpath}")


def cmd_poles(cfg: RunConfig, d_from: Optional[float], d_to: Optional[float],
              n_points: Optional[int], out_dir: Path) -> None:
    p = cfg.params
    if not isinstance(p.scheme, Pvmc):
        raise ValueError("poles requires the pvmc scheme")
    d_from = cfg.poles_d_from if d_from is None else d_from
    d_to = cfg.poles_d_to if d_to is None else d_to
    n_points = cfg.poles_points if n_points is None else n_points
    grid = np.linspace(d_from, d_to, n_points)
    rows = []
    for d in grid:
        c1, c0 = averaged.characteristic_coeffs(p, d)
        s1, s2 = averaged.averaged_poles(p, d)
        rows.append([d, c1, c0, s1.real, s1.imag, s2.real, s2.imag])
    path = out_dir / f"{cfg.run_id}_poles.csv"
    _write_csv(path, ["D", "c_1", "c_0", "pole1_re", "pole1_im",
                      "pole2_re", "pole2_im"], rows)
    for name, idx in (("c_1", 1), ("c_0", 2)):
        vals = np.array([r[idx] for r in rows])
        flips = np.where(np.diff(np.sign(vals)) != 0)[0]
        for i in flips:
            print(f"{name} changes sign between D = {_fmt(grid[i])} "
                  f"and D = {_fmt(grid[i + 1])}")
    print(f"pole locus written to {path}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="boostbif",
                                 description="Boost-converter bifurcation analysis")
    ap.add_argument("--config", required=True, help="path to the run config")
    ap.add_argument("--out", default=None, help="output directory")
    ap.add_argument("--run-id", default=None, help="output file prefix")
    ap.add_argument("--jobs", type=int, default=None,
                    help="parallel workers for sweeps (default: all processors)")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", help="closed-form critical conditions")
    sp = sub.add_parser("steady", help="coexisting averaged operating points")
    sp.add_argument("--vr", type=float, required=True)
    sp = sub.add_parser("simulate", help="cycle-accurate trajectory")
    sp.add_argument("--vr", type=float, required=True)
    sp.add_argument("--cycles", type=int, default=None)
    sp.add_argument("--x0", default=None,
                    help="comma-separated initial state, or 'auto'")
    sp = sub.add_parser("sweep", help="bifurcation diagram over v_r")
    sp.add_argument("--from", dest="v_from", type=float, default=None)
    sp.add_argument("--to", dest="v_to", type=float, default=None)
    sp.add_argument("--points", type=int, default=None)
    sp = sub.add_parser("poles", help="averaged pole locus over duty")
    sp.add_argument("--d-from", type=float, default=None)
    sp.add_argument("--d-to", type=float, default=None)
    sp.add_argument("--points", type=int, default=None)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg_path = Path(args.config)
        try:
            text = cfg_path.read_text()
        except OSError as exc:
            print(f"error reading config {cfg_path}: {exc}", file=sys.stderr)
            return EXIT_IO
        cfg = parse_config(text, run_id=cfg_path.stem)
        if args.run_id:
            cfg.run_id = args.run_id
        if args.out:
            cfg.out_dir = args.out
        jobs = args.jobs if args.jobs is not None else cfg.jobs
        if jobs <= 0:
            jobs = os.cpu_count() or 1
        out_dir = Path(cfg.out_dir)
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            print(f"error creating output dir {out_dir}: {exc}", file=sys.stderr)
            return EXIT_IO

        if args.command == "analyze":
            cmd_analyze(cfg, out_dir)
        elif args.command == "steady":
            cmd_steady(cfg, args.vr, out_dir)
        elif args.command == "simulate":
            cycles = args.cycles if args.cycles is not None else cfg.sim_cycles
            cmd_simulate(cfg, args.vr, args.x0, cycles, out_dir)
        elif args.command == "sweep":
            cmd_sweep(cfg, args.v_from, args.v_to, args.points, jobs, out_dir)
        elif args.command == "poles":
            cmd_poles(cfg, args.d_from, args.d_to, args.points, out_dir)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        # a line number marks a parse failure; schema violations are validation
        return EXIT_PARSE if exc.line is not None else EXIT_VALIDATION
    except (NoBracketError,) as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except ValueError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
