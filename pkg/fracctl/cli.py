"""
Command line driver.

    fracctl linear PROBLEM        minimum-energy control of -A g(t) y + B u
    fracctl nonlinear PROBLEM     fixed-point control of -A f(y) y + B u
    fracctl verify RUN_DIR        independent re-simulation of a stored run
    fracctl tabulate-ml           CSV table of E_{alpha,beta}

Exit codes: 0 ok, 2 not controllable, 3 input error, 4 non-convergence,
truncation failure or failed verification, 5 artifact I/O error.
"""
import argparse
import logging
import pathlib
import sys

import numpy as np

from .calculus import SampledFunction, TimeGrid
from .control import (
    apply_control,
    control_bounds_report,
    fixed_point_solve,
    observability_constant,
    resimulate,
    synthesize_linear,
)
from .exceptions import (
    ArtifactIOError,
    ConvergenceError,
    InputError,
    NotControllableError,
    TruncationError,
)
from .io import export, load_problem, read_json, read_timeseries, write_json, write_timeseries
from .kernels import build_kernels
from .models import make_profile
from .ode import LinearSystem, solve_caputo_linear
from .special import mittag_leffler_array
from .utils import get_logger, prep_out_dir

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_NOT_CONTROLLABLE = 2
EXIT_INPUT = 3
EXIT_FAILURE = 4
EXIT_IO = 5


def _add_common(parser):
    parser.add_argument("problem", help="JSON problem file")
    parser.add_argument("--n-steps", type=int, default=None, help="grid intervals on [0, T]")
    parser.add_argument("--seed", type=int, default=None, help="seed recorded with the run")
    parser.add_argument("--out-dir", default=None, help="run directory")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fracctl", description="Controllability of fractional-order Caputo systems.")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v for INFO, -vv for DEBUG")
    sub = parser.add_subparsers(dest="command", required=True)

    linear = sub.add_parser("linear", help="minimum-energy control of the linear system")
    _add_common(linear)

    nonlinear = sub.add_parser("nonlinear", help="fixed-point control of the nonlinear system")
    _add_common(nonlinear)
    nonlinear.add_argument("--fp-tol", type=float, default=None)
    nonlinear.add_argument("--max-iter", type=int, default=None)
    nonlinear.add_argument("--damping", type=float, default=None)
    nonlinear.add_argument("--progress", action="store_true")
    nonlinear.add_argument("--no-resimulate", action="store_true",
                           help="skip the closing predictor-corrector re-simulation")

    verify = sub.add_parser("verify", help="re-simulate a stored control")
    verify.add_argument("run_dir", help="directory written by linear or nonlinear")
    verify.add_argument("--problem", default=None,
                        help="problem file (default RUN_DIR/problem.json)")

    table = sub.add_parser("tabulate-ml", help="tabulate the Mittag-Leffler function")
    table.add_argument("--alpha", type=float, required=True)
    table.add_argument("--beta", type=float, default=1.0)
    table.add_argument("--x-min", type=float, default=-5.0)
    table.add_argument("--x-max", type=float, default=5.0)
    table.add_argument("--num", type=int, default=101)
    table.add_argument("--out-dir", default=".")
    return parser


def _load(args):
    spec = load_problem(args.problem)
    overrides = {"n_steps": args.n_steps, "seed": args.seed, "out_dir": args.out_dir}
    for name in ("fp_tol", "max_iter", "damping"):
        overrides[name] = getattr(args, name, None)
    return spec.with_overrides(**overrides)


def _out_dir(spec, args):
    out_dir = spec.out_dir
    if out_dir is None:
        out_dir = str(pathlib.Path("runs") / pathlib.Path(args.problem).stem)
    return pathlib.Path(prep_out_dir(out_dir, problem_path=args.problem))


def _grid(spec):
    return TimeGrid(0.0, spec.T, spec.numerics.n_steps)


def _linear_resimulation(spec, grid, g, u):
    forcing = SampledFunction(grid, u.vectors() @ spec.B.T)
    system = LinearSystem.from_factored(-spec.A, g, spec.y0, forcing=forcing)
    return solve_caputo_linear(system, spec.alpha, n_corrector=spec.numerics.n_corrector,
                               start_exponent=spec.alpha, end_exponent=spec.alpha)


def run_linear(args):
    spec = _load(args)
    out = _out_dir(spec, args)
    grid = _grid(spec)
    g = make_profile(spec.g).sample(grid)
    num = spec.numerics
    kernel = build_kernels(-spec.A, g, spec.alpha, tol=num.pb_tol, depth_cap=num.depth_cap)
    law = synthesize_linear(kernel, spec.B, spec.y0, spec.yT)
    traj = apply_control(kernel, spec.B, law.u, spec.y0)
    observability = observability_constant(kernel, spec.B)
    bounds = control_bounds_report(law, kernel, spec.B, observability)
    terminal_error = float(np.linalg.norm(traj.final_state - spec.yT))
    resim = _linear_resimulation(spec, grid, g, law.u)
    resim_error = float(np.linalg.norm(resim.final_state - spec.yT))

    write_timeseries(out / "trajectory.csv", traj, law.u)
    write_json(out / "control.json", {
        "kind": "linear",
        "law": law.to_dict(),
        "bounds": bounds.to_dict(),
        "observability": observability.to_dict(),
        "kernel": {"depth": kernel.depth, "tail_bound": kernel.tail_bound},
        "terminal_error": terminal_error,
        "resimulation_error": resim_error,
        "settings": num.to_dict(),
        "seed": spec.seed,
    })
    logger.info("linear control written to %s (|y(T) - yT| = %.3e, re-simulated %.3e)",
                out, terminal_error, resim_error)
    return EXIT_OK


def run_nonlinear(args):
    spec = _load(args)
    out = _out_dir(spec, args)
    try:
        report = fixed_point_solve(spec, resimulate=not args.no_resimulate,
                                   progress=args.progress, raise_on_failure=True)
    except ConvergenceError as err:
        report = err.report
        _write_nonlinear(out, report)
        raise
    _write_nonlinear(out, report)
    logger.info("nonlinear control written to %s after %d iterations",
                out, report.n_iterations)
    return EXIT_OK


def _write_nonlinear(out, report):
    export(report.y, out / "trajectory.csv", u=report.u)
    write_json(out / "report.json", {"kind": "nonlinear", **report.to_dict()})


def run_verify(args):
    run_dir = pathlib.Path(args.run_dir)
    problem = args.problem if args.problem is not None else run_dir / "problem.json"
    spec = load_problem(problem)
    y, u = read_timeseries(run_dir / "trajectory.csv")
    if u is None:
        raise InputError(f"{run_dir / 'trajectory.csv'} holds no control columns", field="u")
    grid = y.grid
    if (run_dir / "report.json").exists():
        stored = read_json(run_dir / "report.json")
        resim = resimulate(spec, u)
    else:
        stored = read_json(run_dir / "control.json")
        g = make_profile(spec.g).sample(grid)
        resim = _linear_resimulation(spec, grid, g, u)
    report_error = stored.get("terminal_error") or 0.0
    verify_error = float(np.linalg.norm(resim.final_state - spec.yT))
    allowed = 2 * max(report_error, spec.numerics.terminal_tol * (1 + np.linalg.norm(spec.yT)))
    passed = verify_error <= allowed
    write_json(run_dir / "verify.json", {
        "kind": stored.get("kind"), "verify_error": verify_error,
        "report_error": report_error, "allowed": allowed, "passed": passed,
        "n_steps": grid.n})
    if not passed:
        logger.error("re-simulated terminal error %.3e exceeds %.3e", verify_error, allowed)
        return EXIT_FAILURE
    logger.info("verified: re-simulated terminal error %.3e", verify_error)
    return EXIT_OK


def run_tabulate(args):
    if args.num < 1:
        raise InputError("--num must be positive", field="num")
    out = pathlib.Path(prep_out_dir(args.out_dir))
    x = np.linspace(args.x_min, args.x_max, args.num)
    values = mittag_leffler_array(x, args.alpha, args.beta)
    table = np.column_stack([np.full_like(x, args.alpha), np.full_like(x, args.beta), x, values])
    path = out / "mittag_leffler.csv"
    try:
        np.savetxt(path, table, fmt="%.17g", delimiter=",", header="alpha,beta,x,value",
                   comments="")
    except OSError as err:
        raise ArtifactIOError(f"cannot write {path}: {err}", path=str(path)) from err
    return EXIT_OK


COMMANDS = {
    "linear": run_linear,
    "nonlinear": run_nonlinear,
    "verify": run_verify,
    "tabulate-ml": run_tabulate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.getLogger("fracctl").setLevel(level)
    try:
        return COMMANDS[args.command](args)
    except NotControllableError as err:
        logger.error("not controllable: %s", err)
        return EXIT_NOT_CONTROLLABLE
    except (ConvergenceError, TruncationError) as err:
        logger.error("%s", err)
        return EXIT_FAILURE
    except InputError as err:
        where = f" [{err.field}]" if err.field else ""
        logger.error("invalid input%s: %s", where, err)
        return EXIT_INPUT
    except (ArtifactIOError, OSError) as err:
        logger.error("I/O error: %s", err)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
