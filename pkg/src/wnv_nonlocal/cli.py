# Command line entry point: one configuration file per run, CSV/JSON results in an output directory

import argparse
import sys
import traceback

from dataclasses import replace

import numpy as np
import pandas as pd

from .classify import classify, classify_dynamic, classify_static, mu_threshold, smallness_threshold, sweep
from .config import COMMANDS, format_float, load_config
from .errors import ConfigError, WNVError
from .fb_sim import simulate
from .io import output_path, write_csv, write_json
from .nonlocal_eigen import lambda1_O_limit_check, lambda1_P
from .ode_eigen import contour_zero, contour_zero_closed_form, lambda1_O
from .periodic_solver import ode_periodic, periodic_from_above, periodic_from_below
from .utils.quadrature import fitted_spacing


def _eigen(config, out):
    p = config.model
    res = lambda1_O(p, n_samples=config.sections["eigen"]["n_samples"])
    row = {
        "lambda": res.value if res.is_principal else np.nan,
        "upper": res.upper,
        "lower": res.lower,
        "kind": type(res.kind).__name__,
        "case_tag": res.case_tag.value,
        "m": res.m,
        "Lambda": res.Lambda,
        "r0": p.r0,
    }
    files = [write_csv(pd.DataFrame([row]), output_path(out, "eigen.csv"), config, "eigen")]

    if res.is_principal:
        frame = pd.DataFrame({"t": res.t, "phi": res.phi, "psi": res.psi})
        files.append(write_csv(frame, output_path(out, "eigenfunctions.csv"), config, "eigen"))

    return files


def _lamP(config, out):
    p = config.model
    section = config.sections["lamP"]
    kernel, _ = config.kernels()
    method = config.numerics["eigen_method"]
    left, right = section["left"], section["right"]

    dx = fitted_spacing(right - left, config.numerics["dx"])
    res = lambda1_P(p, kernel, (left, right), dx=dx, method=method, n_samples=2)
    row = {
        "left": left,
        "right": right,
        "dx": dx,
        "lambda_star": res.star.lambda_star,
        "lambda_P": res.value if res.ode.is_principal else np.nan,
        "upper": res.upper,
        "lower": res.lower,
        "lambda_O": lambda1_O(p, n_samples=2).upper,
    }
    files = [write_csv(pd.DataFrame([row]), output_path(out, "lamP.csv"), config, "lamP")]

    if section["L_sequence"]:
        table = lambda1_O_limit_check(p, kernel, section["L_sequence"], dx=config.numerics["dx"], method=method)
        files.append(write_csv(table, output_path(out, "lamP_limit.csv"), config, "lamP"))

    return files


def _summary(sol):
    return {"origin": sol.origin.value, "residual": sol.residual, "periods": sol.periods,
            "trivial": bool(sol.is_trivial)}


def _periodic(config, out):
    p = config.model
    section = config.sections["periodic"]
    mode = section["mode"]

    if mode == "ode":
        sol = ode_periodic(p, config.solver_settings())
        return [write_csv(sol.frame(), output_path(out, "periodic.csv"), config, "periodic"),
                write_json(_summary(sol), output_path(out, "periodic.json"), config, "periodic")]

    interval = (section["left"], section["right"])
    settings = replace(config.solver_settings(), dx=fitted_spacing(interval[1] - interval[0], config.numerics["dx"]))
    kernels = config.kernels()
    solutions = {}

    if mode in ("above", "both"):
        solutions["above"] = periodic_from_above(p, kernels, interval, settings)
    if mode in ("below", "both"):
        if not config.shared_kernel:
            raise ConfigError("`kernel2` differs from `kernel`; `periodic.mode` \"below\" needs one kernel.")
        solutions["below"] = periodic_from_below(p, kernels[0], interval, section["eps"], settings)

    files = []
    summary = {}
    for name, sol in solutions.items():
        files.append(write_csv(sol.frame(), output_path(out, f"periodic_{name}.csv"), config, "periodic"))
        summary[name] = _summary(sol)

    if len(solutions) == 2:
        above, below = solutions["above"], solutions["below"]
        summary["sup_gap"] = float(max(np.max(np.abs(above.U1[0] - below.U1[0])),
                                       np.max(np.abs(above.U2[0] - below.U2[0]))))

    files.append(write_json(summary, output_path(out, "periodic.json"), config, "periodic"))
    return files


def _simulate(config, out):
    traj = simulate(config.model, config.kernels(), n_periods=config.numerics["periods"],
                    settings=config.sim_settings())

    files = [
        write_csv(traj.boundaries, output_path(out, "boundaries.csv"), config, "simulate"),
        write_csv(traj.norms, output_path(out, "norms.csv"), config, "simulate"),
        write_csv(traj.lambda_f, output_path(out, "lambdaF.csv"), config, "simulate"),
    ]
    for t in traj.snapshot_times:
        files.append(write_csv(traj.snapshots[t], output_path(out, f"field_{format_float(t)}.csv"),
                               config, "simulate"))

    return files


def _classify(config, out):
    p = config.model
    section = config.sections["classify"]
    kernels = config.kernels()
    settings = config.sim_settings()
    max_periods = section["max_periods"]

    if section["mode"] == "static":
        outcome = classify_static(p, kernels[0], dx=settings.dx, kernel2=kernels[1], method=settings.eigen_method)
    elif section["mode"] == "dynamic":
        outcome = classify_dynamic(p, kernels, max_periods=max_periods, settings=settings)
    else:
        outcome = classify(p, kernels, max_periods=max_periods, settings=settings)

    files = [write_json(outcome.as_dict(), output_path(out, "classify.json"), config, "classify")]

    if "trajectory" in outcome.evidence:
        traj = outcome.evidence["trajectory"]
        files.append(write_csv(traj.boundaries, output_path(out, "boundaries.csv"), config, "classify"))
        files.append(write_csv(traj.lambda_f, output_path(out, "lambdaF.csv"), config, "classify"))

    threshold = section["threshold"]
    if threshold != "none":
        if threshold == "mu":
            res = mu_threshold(p, kernels, mu_range=(section["mu_low"], section["mu_high"]), settings=settings,
                               max_periods=max_periods, rel_width=section["rel_width"])
        else:
            res = smallness_threshold(p, kernels, sigma_range=(section["sigma_low"], section["sigma_high"]),
                                      settings=settings, max_periods=max_periods, rel_width=section["rel_width"])

        summary = {"parameter": res.parameter, "low": res.low, "high": res.high,
                   "verdict_low": res.verdict_low.value, "verdict_high": res.verdict_high.value,
                   "iterations": res.iterations}
        files.append(write_json(summary, output_path(out, "threshold.json"), config, "classify"))
        files.append(write_csv(res.history, output_path(out, "threshold_history.csv"), config, "classify"))

    return files


def _sweep(config, out):
    section = config.sections["sweep"]
    axes = {name: section[name] for name in ("delta", "b1", "mu", "h0") if section[name]}

    if not axes:
        raise ConfigError("`sweep` needs at least one of `sweep.delta`, `sweep.b1`, `sweep.mu`, `sweep.h0`.")

    phase = sweep(config.model, config.kernels(), axes, settings=config.sim_settings(),
                  max_periods=section["max_periods"], dynamic=section["dynamic"],
                  parallel=section["parallel"], max_concurrent=section["max_concurrent"])

    return [write_csv(phase, output_path(out, "phase.csv"), config, "sweep")]


def _contour(config, out):
    p = config.model
    section = config.sections["contour"]
    delta_grid = np.linspace(section["delta_min"], section["delta_max"], section["n_delta"])

    curve = contour_zero(p, delta_grid, (section["b1_min"], section["b1_max"]), tie_k=section["tie_k"])
    files = [write_csv(curve, output_path(out, "contour.csv"), config, "contour")]

    if section["tie_k"]:
        exact = contour_zero_closed_form(p, delta_grid)
        files.append(write_csv(exact, output_path(out, "contour_closed_form.csv"), config, "contour"))

    return files


_HANDLERS = {
    "eigen": _eigen,
    "lamP": _lamP,
    "periodic": _periodic,
    "simulate": _simulate,
    "classify": _classify,
    "sweep": _sweep,
    "contour": _contour,
}


def run(command, config, out=".", verbose=False):
    """
    Run one command on a resolved configuration.

    Parameters
    ----------
    command: One of COMMANDS.
    config: RunConfig.
    out: Output directory (created if needed).
    verbose: Print the command and every written file.

    Returns
    -------
    list of written file paths
    """
    config.check_command(command)
    if verbose:
        print(f"running {command}, output in {out}")

    files = _HANDLERS[command](config, out)

    if verbose:
        for path in files:
            print(f"wrote {path}")

    return files


def build_parser():
    parser = argparse.ArgumentParser(
        prog="wnv-nonlocal",
        description="Seasonal West Nile virus model with nonlocal dispersal and free boundaries.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("config", help="TOML run configuration")
    parser.add_argument("--periods", type=int, help="override numerics.periods")
    parser.add_argument("--dx", type=float, help="override numerics.dx")
    parser.add_argument("--snapshot-every", type=int, help="override numerics.snapshot_every")
    parser.add_argument("--out", default=".", help="output directory (default: current directory)")
    parser.add_argument("--verbose", "-v", action="store_true", help="print the written files")
    return parser


def main(argv=None):
    """
    Parse arguments, run the command and return the exit status (0 on success, otherwise the
    exit code of the error class raised).
    """
    args = build_parser().parse_args(argv)

    try:
        try:
            config = load_config(args.config, args.command)
        except OSError as e:
            raise ConfigError(f"Cannot read {args.config}: {e}") from e

        config = config.with_overrides(periods=args.periods, dx=args.dx, snapshot_every=args.snapshot_every)
        run(args.command, config, args.out, verbose=args.verbose)
    except WNVError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except Exception:
        traceback.print_exc()
        return 1

    return 0


if __name__ == "__main__":
    sys.exit(main())
