"""Command-line front end.

    monoreg check    scenario.json [--json]
    monoreg analyze  scenario.json [--json]
    monoreg simulate scenario.json [--out PATH] [--plot] [--force] [--json]
    monoreg sweep    scenario.json --epsilon e1,e2,... [--out PATH] [--force]

Exit codes: 0 success, 1 condition failure, 2 input error, 3 I/O failure,
4 numerical abort.  The environment variable MONOREG_SEED is reserved for
stochastic test sampling; the commands themselves are deterministic.
"""

import argparse
import io
import json
import math
import os
import sys

import numpy as np

from . import analysis, plant as plant_mod, plots, scenario as scenario_mod, simulator
from .errors import (ConvergenceError, EquilibriumError, MonoregError,
                     RegularizationError, ScenarioError)

EXIT_OK = 0
EXIT_CONDITION = 1
EXIT_INPUT = 2
EXIT_IO = 3
EXIT_NUMERIC = 4


def _print_json(doc):
    print(json.dumps(doc, indent=2, sort_keys=True))


def run_check(sdoc, path=""):
    """Passivity + equilibrium + regulation condition; returns (passed, report, P)."""
    report = {"scenario": str(path), "failures": []}
    plant = sdoc.plant
    phi = scenario_mod.build_potential(sdoc.potential_cfg)
    reference = scenario_mod.build_reference(sdoc.reference_cfg)

    if sdoc.P is not None:
        cert = plant_mod.verify_passivity(plant, sdoc.P, tol=sdoc.lmi_tol)
        report["passivity"] = {"source": "provided", "valid": cert.valid,
                               "lmi_max_eig": cert.lmi_max_eig, "p_min_eig": cert.p_min_eig}
        if not cert.valid:
            report["failures"].append("provided storage matrix fails the passivity LMI")
        P = sdoc.P
    else:
        search = plant_mod.find_storage_matrix(plant, gamma=sdoc.gamma)
        if search.status == "feasible":
            cert = search.certificate
            report["passivity"] = {"source": "searched", "valid": True,
                                   "lmi_max_eig": cert.lmi_max_eig,
                                   "p_min_eig": cert.p_min_eig}
            P = cert.P
        else:
            report["passivity"] = {"source": "searched", "valid": False,
                                   "search_status": search.status, "detail": search.detail}
            report["failures"].append(f"storage search returned {search.status}")
            P = None

    points = []
    for y_d in reference.sample_values():
        entry = {"y_d": [float(v) for v in y_d]}
        try:
            design = plant_mod.design_regulator(plant, sdoc.disturbance.constant, y_d)
            margin = analysis.regulation_condition(plant, design.x_star, y_d, phi)
            rhs = phi.directional_derivative(np.asarray(y_d), -np.asarray(y_d))
            entry.update({
                "x_star": [float(v) for v in design.x_star],
                "u_bar": [float(v) for v in design.u_bar],
                "condition_lhs": margin + rhs,
                "condition_rhs": rhs,
                "condition_margin": margin,
                "satisfied": bool(margin < 0),
            })
            if margin >= 0:
                report["failures"].append(
                    f"regulation condition fails at y_d={entry['y_d']} (margin {margin:.4g})")
        except (EquilibriumError, MonoregError) as exc:
            entry.update({"error": str(exc), "satisfied": False})
            report["failures"].append(f"equilibrium failed at y_d={entry['y_d']}: {exc}")
        points.append(entry)
    report["set_points"] = points
    report["passed"] = not report["failures"]
    return report["passed"], report, P


def _emit_check(report, as_json):
    if as_json:
        _print_json(report)
        return
    pas = report["passivity"]
    if pas.get("valid"):
        print(f"passivity: {pas['source']} P valid "
              f"(lmi_max_eig={pas['lmi_max_eig']:.6g}, p_min_eig={pas['p_min_eig']:.6g})")
    else:
        print(f"passivity: FAILED ({pas})")
    for pt in report["set_points"]:
        if "error" in pt:
            print(f"set-point {pt['y_d']}: ERROR {pt['error']}")
        else:
            word = "satisfied" if pt["satisfied"] else "VIOLATED"
            print(f"set-point {pt['y_d']}: lhs={pt['condition_lhs']:.6g} "
                  f"rhs={pt['condition_rhs']:.6g} margin={pt['condition_margin']:.6g} {word}")
    print("check: {}".format("PASS" if report["passed"] else "FAIL"))


def cmd_check(args):
    sdoc = scenario_mod.load_scenario_file(args.scenario)
    passed, report, _ = run_check(sdoc, args.scenario)
    _emit_check(report, args.json)
    return EXIT_OK if passed else EXIT_CONDITION


def cmd_analyze(args):
    sdoc = scenario_mod.load_scenario_file(args.scenario)
    passed, report, P = run_check(sdoc, args.scenario)
    if not passed or P is None:
        _emit_check(report, args.json)
        return EXIT_CONDITION
    phi = scenario_mod.build_potential(sdoc.potential_cfg)
    reference = scenario_mod.build_reference(sdoc.reference_cfg)
    entries = []
    all_valid = True
    for y_d in reference.sample_values(3) if reference.time_varying else reference.sample_values():
        x_star, _ = plant_mod.ida_equilibrium(sdoc.plant, sdoc.disturbance.constant, y_d)
        rep = analysis.disturbance_bound(sdoc.plant, P, x_star, y_d, phi)
        entries.append({
            "y_d": [float(v) for v in y_d],
            "omega_margin": rep.omega_margin,
            "slack": rep.slack,
            "alpha": rep.alpha,
            "delta_max": rep.delta_max,
            "disturbance_bound": rep.disturbance_bound,
            "lambda_min_R": rep.lambda_min_R,
            "lambda_min_R_lambda": rep.lambda_min_R_lambda,
            "lambda_max_P": rep.lambda_max_P,
            "lambda_max_gain": rep.lambda_max_gain,
            "valid": rep.valid,
        })
        all_valid = all_valid and rep.valid
    doc = {"scenario": str(args.scenario), "robustness": entries, "valid": all_valid}
    if args.json:
        _print_json(doc)
    else:
        for e in entries:
            print(f"set-point {e['y_d']}: delta_max={e['delta_max']:.6g} "
                  f"alpha={e['alpha']:.6g} B={e['disturbance_bound']:.6g} "
                  f"lam_min(R)={e['lambda_min_R']:.6g} "
                  f"lam_min(R_Lambda)={e['lambda_min_R_lambda']:.6g} "
                  f"lam_max(P)={e['lambda_max_P']:.6g} "
                  f"{'valid' if e['valid'] else 'INVALID'}")
        print("analyze: {}".format("PASS" if all_valid else "FAIL"))
    return EXIT_OK if all_valid else EXIT_CONDITION


def _default_out(scenario_path):
    stem = os.path.splitext(os.path.basename(scenario_path))[0]
    return stem + "_trajectory.csv"


def cmd_simulate(args):
    sdoc = scenario_mod.load_scenario_file(args.scenario)
    P = sdoc.P
    if args.force:
        if P is None:
            search = plant_mod.find_storage_matrix(sdoc.plant, gamma=sdoc.gamma)
            P = search.certificate.P if search.status == "feasible" else None
    else:
        passed, report, P = run_check(sdoc, args.scenario)
        if not passed:
            _emit_check(report, args.json)
            print("simulate: refusing to run (use --force to override)", file=sys.stderr)
            return EXIT_CONDITION

    scen = scenario_mod.build_scenario(sdoc, P=P)
    try:
        traj = simulator.integrate(scen)
    except ConvergenceError as exc:
        print(f"simulate: numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    out = args.out or _default_out(args.scenario)
    if out == "-":
        if args.plot:
            print("simulate: --plot requires --out PATH (not stdout)", file=sys.stderr)
            return EXIT_INPUT
        buf = io.StringIO()
        traj.write_csv(buf)
        sys.stdout.write(buf.getvalue())
        return EXIT_OK
    try:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            traj.write_csv(fh)
    except OSError as exc:
        print(f"simulate: cannot write {out}: {exc}", file=sys.stderr)
        return EXIT_IO
    messages = [f"trajectory: {out}"]
    if traj.reach_time is not None:
        messages.append(f"reach_time: {traj.reach_time:.6g} s")
    else:
        messages.append("reach_time: not reached")
    if args.plot:
        stem = os.path.splitext(out)[0]
        try:
            script = plots.write_gnuplot_script(stem + ".gp", os.path.basename(out),
                                                scen.plant.n, scen.plant.m,
                                                scen.plant.n_dist,
                                                title=os.path.basename(args.scenario))
            figures = plots.render_figures(traj, stem,
                                           title=os.path.basename(args.scenario))
        except OSError as exc:
            print(f"simulate: cannot write plot outputs: {exc}", file=sys.stderr)
            return EXIT_IO
        messages.append(f"plot script: {script}")
        messages.extend(f"figure: {fig}" for fig in figures)
    print("\n".join(messages))
    return EXIT_OK


def cmd_sweep(args):
    try:
        eps_list = [float(tok) for tok in (args.epsilon or "").split(",") if tok.strip()]
    except ValueError:
        print("sweep: --epsilon must be a comma-separated list of numbers", file=sys.stderr)
        return EXIT_INPUT
    if not eps_list:
        print("sweep: --epsilon list is empty", file=sys.stderr)
        return EXIT_INPUT
    if any(e <= 0 for e in eps_list):
        print("sweep: all epsilon values must be positive", file=sys.stderr)
        return EXIT_INPUT

    sdoc = scenario_mod.load_scenario_file(args.scenario)
    P = sdoc.P
    if not args.force:
        passed, report, P = run_check(sdoc, args.scenario)
        if not passed:
            _emit_check(report, False)
            return EXIT_CONDITION

    from .controller import contraction_factor

    reference = scenario_mod.build_reference(sdoc.reference_cfg)
    phi = scenario_mod.build_potential(sdoc.potential_cfg)
    rows = []
    aborted = False
    for eps in eps_list:
        rep = contraction_factor(sdoc.plant.D, phi.lipschitz_grad, eps)
        row = {"epsilon": eps, "factor": rep.factor,
               "factor_effective": rep.factor_effective,
               "epsilon_max": rep.epsilon_max,
               "contraction_ok": int(rep.factor < 1.0),
               "status": "ok", "reach_time": math.nan,
               "max_err_after_reach": math.nan, "max_control_norm": math.nan}
        try:
            scen = scenario_mod.build_scenario(sdoc, P=P, epsilon=eps)
            traj = simulator.integrate(scen)
        except RegularizationError:
            row["status"] = "contraction-invalid"
            rows.append(row)
            continue
        except MonoregError:
            row["status"] = "aborted"
            aborted = True
            rows.append(row)
            continue
        row["max_control_norm"] = float(np.linalg.norm(traj.u, axis=1).max())
        if traj.reach_time is not None:
            row["reach_time"] = traj.reach_time
            after = traj.t >= traj.reach_time
            err = np.linalg.norm(traj.y - traj.y_ref, axis=1)
            row["max_err_after_reach"] = float(err[after].max())
        rows.append(row)

    header = ["epsilon", "factor", "factor_effective", "epsilon_max", "contraction_ok",
              "status", "reach_time", "max_err_after_reach", "max_control_norm"]
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for key in header:
            val = row[key]
            cells.append(val if isinstance(val, str) else f"{val:.17g}"
                         if isinstance(val, float) else str(val))
        lines.append(",".join(cells))
    text = "\n".join(lines) + "\n"
    if args.out and args.out != "-":
        try:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"sweep: cannot write {args.out}: {exc}", file=sys.stderr)
            return EXIT_IO
    else:
        sys.stdout.write(text)
    return EXIT_NUMERIC if aborted else EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="monoreg",
        description="Multivalued passivity-based output regulation toolbox",
        epilog="MONOREG_SEED is reserved for stochastic sampling in property tests; "
               "all commands here are deterministic.")
    sub = parser.add_subparsers(dest="command", required=True)

    pc = sub.add_parser("check", help="passivity certificate + regulation condition")
    pc.add_argument("scenario")
    pc.add_argument("--json", action="store_true", help="machine-readable output")
    pc.set_defaults(func=cmd_check)

    pa = sub.add_parser("analyze", help="robustness bounds (ellipsoid, disturbance bound)")
    pa.add_argument("scenario")
    pa.add_argument("--json", action="store_true", help="machine-readable output")
    pa.set_defaults(func=cmd_analyze)

    ps = sub.add_parser("simulate", help="closed-loop run, CSV output")
    ps.add_argument("scenario")
    ps.add_argument("--out", default=None, help="CSV path ('-' for stdout)")
    ps.add_argument("--plot", action="store_true",
                    help="also write a gnuplot script and PNG figures")
    ps.add_argument("--force", action="store_true", help="skip the check gate")
    ps.add_argument("--json", action="store_true", help="machine-readable check output")
    ps.set_defaults(func=cmd_simulate)

    pw = sub.add_parser("sweep", help="epsilon sweep, summary CSV")
    pw.add_argument("scenario")
    pw.add_argument("--epsilon", required=True, help="comma-separated epsilon list")
    pw.add_argument("--out", default=None, help="CSV path ('-' for stdout)")
    pw.add_argument("--force", action="store_true", help="skip the check gate")
    pw.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"{args.command}: scenario error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConvergenceError as exc:
        print(f"{args.command}: numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except MonoregError as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return EXIT_CONDITION


def entry_point():
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
