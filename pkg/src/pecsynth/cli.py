"""Command-line pipeline: model emission, the two analysis programs, the
realization synthesis, the benchmark table, and attack simulations.

Every command is deterministic given its flags and seed; re-runs produce
byte-identical CSVs. Exit codes: 0 all solves optimal and certified, 1 solver
or infeasibility trouble, 2 file errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from pecsynth import files
from pecsynth import matrixkit as mk
from pecsynth.errors import Infeasible, PecsynthError
from pecsynth.lmi import SolverOptions
from pecsynth.model import Detector, make_scenario
from pecsynth.quadtank import SCENARIO_SETS, build_case
from pecsynth.realization import (
    assemble_closed_loop,
    realize_from_F,
    residual_driven_form,
    transform_plant,
)
from pecsynth.set_analysis import (
    detector_error_set_search,
    residual_set_search,
)
from pecsynth.simulator import SimConfig, StealthyFdi, simulate
from pecsynth.synthesis import SYNTH_OPTS, synthesize


def _out_dir(args) -> Path:
    out = args.out_dir or os.environ.get("PECSYNTH_OUT_DIR", ".")
    p = Path(out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _parse_grid(text):
    if text is None:
        return None
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _parse_scenario(text):
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _load_model(args):
    path = Path(args.model)
    if not path.exists():
        print(f"error: model file not found: {path}", file=sys.stderr)
        raise SystemExit(2)
    try:
        return files.load_model(path)
    except (ValueError, KeyError) as exc:
        print(f"error: cannot parse model file {path}: {exc}", file=sys.stderr)
        raise SystemExit(2)


def _solver_opts(args, margin=0.0):
    return SolverOptions(feas_tol=args.feas_tol, margin=margin)


def _residual_pipeline(plant, bounds, L, args):
    grid = _parse_grid(args.alpha_grid)
    ae = grid if grid else None
    ar = [a for a in grid if a <= 1.0] if grid else None
    if ar is not None and not ar:
        ar = [min(grid)]
    return residual_set_search(plant, bounds, L, ae, ar, _solver_opts(args))


def cmd_emit_quadtank(args):
    case = build_case()
    out = _out_dir(args) / (args.name or "quadtank.json")
    files.save_model(out, case.plant, case.base, case.L, case.bounds,
                     observer_poles=case.params.observer_poles,
                     meta={"case": "quadruple-tank"})
    print(f"wrote {out}")
    return 0


def cmd_residual_set(args):
    plant, base, L, bounds = _load_model(args)
    cert, Pi = _residual_pipeline(plant, bounds, L, args)
    out = _out_dir(args)
    files.save_certificate(out / "residual_Pe.json", cert)
    files.save_certificate(out / "residual_Pi.json", cert, extra={
        "P": files.mat_to_obj(Pi), "program": "ResidualSet-Pi",
    })
    print(f"-logdet(Pe) = {-mk.logdet_pd(cert.P):.6g}")
    print(f"-logdet(Pi) = {-mk.logdet_pd(Pi):.6g}")
    print(f"alpha = {cert.alpha}  residual = {cert.residual:.3g}")
    return 0


def _scenario_chain(plant, base, L, bounds, Pi, sensors, grid, feas_tol):
    """Error set + synthesis for one attacked-sensor set."""
    tp = transform_plant(plant)
    sc = make_scenario(plant.n_y, sensors)
    det = Detector(L=L, Pi=Pi, A=plant.A, C=plant.C)
    cl = assemble_closed_loop(base, tp, np.zeros((base.n_rho, plant.n_y)), sc)
    rd = residual_driven_form(cl, det, tp, sc)
    opts = SolverOptions(feas_tol=feas_tol)
    cert = detector_error_set_search(rd, bounds, Pi, grid, opts)
    res = synthesize(base, tp, det, bounds, cert, Pi, sc, grid,
                     SolverOptions(feas_tol=feas_tol, margin=SYNTH_OPTS.margin))
    return sc, cert, res


def cmd_error_set(args):
    plant, base, L, bounds = _load_model(args)
    sensors = _parse_scenario(args.scenario)
    cert_r, Pi = _residual_pipeline(plant, bounds, L, args)
    tp = transform_plant(plant)
    sc = make_scenario(plant.n_y, sensors)
    det = Detector(L=L, Pi=Pi, A=plant.A, C=plant.C)
    cl = assemble_closed_loop(base, tp, np.zeros((base.n_rho, plant.n_y)), sc)
    rd = residual_driven_form(cl, det, tp, sc)
    cert = detector_error_set_search(rd, bounds, Pi, _parse_grid(args.alpha_grid),
                                     _solver_opts(args))
    out = _out_dir(args)
    files.save_certificate(out / f"error_set_{'_'.join(map(str, sc.sensors))}.json", cert)
    print(f"sensors {sc.label()}: -logdet(Pe_bar) = {cert.objective:.6g} "
          f"(alpha = {cert.alpha[0]:.4g})")
    return 0


def cmd_synthesize(args):
    plant, base, L, bounds = _load_model(args)
    sensors = _parse_scenario(args.scenario)
    _, Pi = _residual_pipeline(plant, bounds, L, args)
    sc, cert, res = _scenario_chain(plant, base, L, bounds, Pi, sensors,
                                    _parse_grid(args.alpha_grid), args.feas_tol)
    tp = transform_plant(plant)
    realized = realize_from_F(base, tp, res.F_star)
    out = _out_dir(args)
    path = out / f"realization_{'_'.join(map(str, sc.sensors))}.json"
    files.save_realization(path, res, realized)
    print(f"sensors {sc.label()}: trace base = {res.baseline_trace:.6g}, "
          f"optimized = {res.trace_value:.6g}")
    print(f"F* =\n{np.array_str(res.F_star, precision=4, suppress_small=True)}")
    print(f"wrote {path}")
    return 0


def _table2_one(packed):
    (A, B, C, G, H, Ac, Bc, Cc, Dc, L, Ww, Wv, Pi, sensors, grid, feas_tol) = packed
    from pecsynth.model import BaseController, DisturbanceBounds, LtiPlant

    plant = LtiPlant(A=A, B=B, C=C, G=G, H=H)
    base = BaseController(A_c=Ac, B_c=Bc, C_c=Cc, D_c=Dc)
    bounds = DisturbanceBounds(Ww, Wv)
    sc, cert, res = _scenario_chain(plant, base, L, bounds, Pi, sensors, grid, feas_tol)
    return {
        "sensors": sc.label(),
        "logdet_Pe_bar": cert.objective,
        "trace_base": res.baseline_trace,
        "trace_opt": res.trace_value,
        "F": res.F_star,
    }


def cmd_table2(args):
    plant, base, L, bounds = _load_model(args)
    cert_r, Pi = _residual_pipeline(plant, bounds, L, args)
    grid = _parse_grid(args.alpha_grid)
    packs = [
        (plant.A, plant.B, plant.C, plant.G, plant.H,
         base.A_c, base.B_c, base.C_c, base.D_c, L,
         bounds.W_w, bounds.W_v, Pi, list(s), grid, args.feas_tol)
        for s in SCENARIO_SETS
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            rows = list(ex.map(_table2_one, packs))
    else:
        rows = [_table2_one(p) for p in packs]
    out = _out_dir(args) / "table2.csv"
    files.table2_to_csv(out, rows)
    print(f"-logdet(Pi) = {-mk.logdet_pd(Pi):.6g}")
    for row in rows:
        print(f"{row['sensors']:>12}: -logdet(Pe_bar) = {row['logdet_Pe_bar']:+10.3f}  "
              f"trace_base = {row['trace_base']:12.6g}  trace_opt = {row['trace_opt']:12.6g}")
    print(f"wrote {out}")
    return 0


def cmd_simulate(args):
    plant, base, L, bounds = _load_model(args)
    _, Pi = _residual_pipeline(plant, bounds, L, args)
    det = Detector(L=L, Pi=Pi, A=plant.A, C=plant.C)
    attack = None
    if args.attack_sensor:
        attack = StealthyFdi(sensor=args.attack_sensor, t_start=args.attack_start,
                             amplitude=args.amplitude)
    cfg = SimConfig(dt=args.dt, horizon=args.horizon, seed=args.seed,
                    disturbance_mode=args.mode, attack=attack)
    out = _out_dir(args)
    trace_b = simulate(plant, base, det, cfg, bounds)
    files.trace_to_csv(out / "trace_base.csv", trace_b)
    print(f"base:      max stealth = {trace_b.max_stealth():.6g}, "
          f"alarms = {trace_b.alarm_count()}")
    if args.realization:
        path = Path(args.realization)
        if not path.exists():
            print(f"error: realization file not found: {path}", file=sys.stderr)
            raise SystemExit(2)
        real = files.load_realization(path)
        tp = transform_plant(plant)
        pec = realize_from_F(base, tp, real["F"])
        trace_o = simulate(plant, pec, det, cfg, bounds)
        files.trace_to_csv(out / "trace_opt.csv", trace_o)
        du = float(np.abs(trace_b.u - trace_o.u).max())
        print(f"optimized: max stealth = {trace_o.max_stealth():.6g}, "
              f"alarms = {trace_o.alarm_count()}")
        print(f"max |u_base - u_opt| = {du:.6g}")
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="pecsynth",
                                 description="attack-resilient controller realization toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, model=True):
        if model:
            p.add_argument("--model", required=True, help="model JSON file")
        p.add_argument("--alpha-grid", default=None,
                       help="comma-separated multiplier grid override")
        p.add_argument("--feas-tol", type=float, default=1e-7)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--out-dir", default=None)

    p = sub.add_parser("emit-quadtank", help="write the default case model file")
    p.add_argument("--name", default=None)
    common(p, model=False)
    p.set_defaults(func=cmd_emit_quadtank)

    p = sub.add_parser("residual-set", help="attack-free residual/error ellipsoids")
    common(p)
    p.set_defaults(func=cmd_residual_set)

    p = sub.add_parser("error-set", help="detector error ellipsoid under attack")
    common(p)
    p.add_argument("--scenario", required=True, help="comma-separated sensor indices")
    p.set_defaults(func=cmd_error_set)

    p = sub.add_parser("synthesize", help="optimal realization for one scenario")
    common(p)
    p.add_argument("--scenario", required=True)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("table2", help="full benchmark over all scenarios")
    common(p)
    p.set_defaults(func=cmd_table2)

    p = sub.add_parser("simulate", help="attack simulation, CSV trace export")
    common(p)
    p.add_argument("--realization", default=None, help="realization JSON file")
    p.add_argument("--attack-sensor", type=int, default=0)
    p.add_argument("--attack-start", type=float, default=125.0)
    p.add_argument("--amplitude", type=float, default=0.1)
    p.add_argument("--horizon", type=float, default=250.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--mode", choices=("zero", "boundary"), default="zero")
    p.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit:
        raise
    except Infeasible as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PecsynthError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
