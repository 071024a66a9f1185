"""Command-line interface.

Subcommands: ``simulate``, ``estimate``, ``mc``, ``table``, ``fisher``,
``check``.  Exit codes: 0 on success, 1 on user error (bad flags, unreadable
input, unknown model), 2 on numerical failure (non-convergence, degenerate
data, diverged simulation).

Levy drivers are given on the command line with a compact grammar::

    cp:<intensity>:exp:<rate>        compound Poisson, Exp(rate) sizes
    cp:<intensity>:const:<value>     compound Poisson, constant sizes
    cp:<intensity>:norm:<mu>:<sd>    compound Poisson, Gaussian sizes
    stable:<alpha>[:<scale>]         symmetric alpha-stable
    tstable:<alpha>:<lambda>:<C>     tempered stable
    none                             no jump component

Appending ``:ts`` to a ``cp:`` spec draws a symmetric (two-sided) size law.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import List, Optional

import numpy as np

from .estimators import DegenerateDataError, estimate
from .harness import ExperimentConfig, ExperimentFailedError, reproduce_table, run_experiment
from .inference import confidence_intervals, fisher_ergodic, rate_condition_check
from .jumpfilter import FilterConfig
from .model import (
    AlphaStable,
    CompoundPoisson,
    ConstantJumps,
    ExponentialJumps,
    GaussianJumps,
    TemperedStable,
    check_model,
    get_model,
)
from .simulate import (
    SimulationDivergedError,
    read_observations_csv,
    simulate_path,
    subsample,
)

EXIT_OK = 0
EXIT_USER = 1
EXIT_NUMERICAL = 2


class CliUserError(Exception):
    """Invalid invocation or unreadable input (exit code 1)."""


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that reports usage problems with exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliUserError(message)


def parse_levy(text: Optional[str]):
    """Parse the Levy mini-grammar described in the module docstring."""
    if text is None or text.strip().lower() in ("", "none"):
        return None
    parts = text.strip().split(":")
    kind = parts[0].lower()
    try:
        if kind == "cp":
            two_sided = False
            if parts and parts[-1].lower() == "ts":
                two_sided = True
                parts = parts[:-1]
            if len(parts) < 3:
                raise ValueError("cp spec needs cp:<intensity>:<law>:...")
            intensity = float(parts[1])
            law_kind = parts[2].lower()
            if law_kind == "exp":
                if len(parts) != 4:
                    raise ValueError("exp law needs cp:<intensity>:exp:<rate>")
                law = ExponentialJumps(float(parts[3]))
            elif law_kind == "const":
                if len(parts) != 4:
                    raise ValueError("const law needs cp:<intensity>:const:<value>")
                law = ConstantJumps(float(parts[3]))
            elif law_kind == "norm":
                if len(parts) != 5:
                    raise ValueError("norm law needs cp:<intensity>:norm:<mu>:<sd>")
                law = GaussianJumps(float(parts[3]), float(parts[4]))
            else:
                raise ValueError(f"unknown jump size law '{law_kind}'")
            return CompoundPoisson(intensity, law, two_sided=two_sided)
        if kind == "stable":
            if len(parts) == 2:
                return AlphaStable(float(parts[1]))
            if len(parts) == 3:
                return AlphaStable(float(parts[1]), scale=float(parts[2]))
            raise ValueError("stable spec is stable:<alpha>[:<scale>]")
        if kind == "tstable":
            if len(parts) != 4:
                raise ValueError("tstable spec is tstable:<alpha>:<lambda>:<C>")
            return TemperedStable(float(parts[1]), float(parts[2]), float(parts[3]))
    except ValueError as exc:
        raise CliUserError(f"bad --levy spec '{text}': {exc}") from None
    raise CliUserError(f"bad --levy spec '{text}': unknown driver '{kind}'")


def parse_theta(text: str) -> tuple:
    try:
        values = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise CliUserError(f"bad --theta '{text}': expected comma-separated numbers")
    if not values:
        raise CliUserError("--theta must contain at least one number")
    return values


def _filter_from_args(args) -> FilterConfig:
    given = [v is not None for v in (args.eps, args.vn_power, args.vn)]
    if sum(given) > 1:
        raise CliUserError("--eps, --vn-power and --vn are mutually exclusive")
    try:
        if args.eps is not None:
            return FilterConfig(epsilon=args.eps)
        if args.vn_power is not None:
            return FilterConfig(power=args.vn_power)
        if args.vn is not None:
            return FilterConfig(cutoff=args.vn)
        return FilterConfig()
    except ValueError as exc:
        raise CliUserError(str(exc)) from None


def _build_model(args, theta=None):
    levy = parse_levy(getattr(args, "levy", None))
    try:
        return get_model(args.model, sigma=args.sigma, levy=levy)
    except ValueError as exc:
        raise CliUserError(str(exc)) from None


def _default_x0(model_name: str, theta) -> float:
    if model_name == "ou":
        return 1.0
    if model_name == "cir":
        if len(theta) >= 2 and theta[1] != 0:
            return float(theta[0]) / float(theta[1])
        return 1.0
    return 0.0


def _out_handle(path: Optional[str]):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _add_filter_flags(p):
    p.add_argument("--eps", type=float, default=None, help="cutoff exponent via v_n = delta^(1/2 - eps)")
    p.add_argument("--vn-power", type=float, default=None, help="cutoff exponent via v_n = delta^power")
    p.add_argument("--vn", type=float, default=None, help="explicit cutoff value (inf disables filtering)")


def build_parser() -> _Parser:
    parser = _Parser(
        prog="levy-drift",
        description="Simulate jump diffusions and estimate drift parameters "
        "by jump-filtered maximum likelihood.",
        epilog="Levy driver grammar: cp:<i>:exp:<rate> | cp:<i>:const:<v> | "
        "cp:<i>:norm:<mu>:<sd> (append :ts for symmetric signs) | "
        "stable:<alpha>[:<scale>] | tstable:<alpha>:<lambda>:<C> | none",
    )
    sub = parser.add_subparsers(dest="cmd", metavar="COMMAND")

    p = sub.add_parser("simulate", help="simulate a path and write observations as CSV")
    p.add_argument("--model", required=True, help="ou | cir | hyperbolic")
    p.add_argument("--theta", required=True, help="comma-separated drift parameter")
    p.add_argument("--sigma", type=float, default=1.0, help="diffusion coefficient parameter")
    p.add_argument("--levy", default=None, help="Levy driver spec (see below); default: none")
    p.add_argument("--t-end", type=float, required=True, help="time horizon")
    p.add_argument("--n", type=int, required=True, help="number of observation intervals")
    p.add_argument("--seed", type=int, required=True, help="simulation seed")
    p.add_argument("--x0", type=float, default=None, help="starting value (default per model)")
    p.add_argument("--fine-steps", type=int, default=None, help="fine Euler steps (default 50*n)")
    p.add_argument("--decompose", action="store_true", help="add xc,xj columns (continuous/jump parts)")
    p.add_argument("--out", default=None, help="output CSV path (default stdout)")

    p = sub.add_parser("estimate", help="estimate the drift parameter from a CSV of observations")
    p.add_argument("--in", dest="infile", required=True, help="input CSV with columns t,x")
    p.add_argument("--model", required=True)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--method", choices=["auto", "closed", "generic"], default="auto")
    p.add_argument("--endpoint", choices=["left", "right"], default=None,
                   help="coefficient evaluation endpoint (default: right for closed forms, left for generic)")
    p.add_argument("--level", type=float, default=0.95, help="confidence level for intervals")
    p.add_argument("--out", default=None, help="write the full report as JSON to this path")
    _add_filter_flags(p)

    p = sub.add_parser("mc", help="run a Monte Carlo experiment from a JSON config")
    p.add_argument("--config", required=True, help="ExperimentConfig JSON file")
    p.add_argument("--out", default=None, help="output CSV path (default stdout)")
    p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("table", help="reproduce a benchmark table")
    p.add_argument("--id", type=int, required=True, choices=[1, 2, 3])
    p.add_argument("--reps", type=int, default=None, help="override the replication count")
    p.add_argument("--rows", default=None,
                   help="comma-separated subset of rows as t_n:n:block (e.g. 10:2000:1,5:4000:1)")
    p.add_argument("--out", default=None, help="output CSV path (default stdout)")
    p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("fisher", help="estimate the Fisher information from a CSV of observations")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--theta", required=True)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--level", type=float, default=None, help="also print confidence intervals at this level")

    p = sub.add_parser("check", help="validate a model's coefficients and rate conditions")
    p.add_argument("--model", required=True)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--levy", default=None, help="Levy driver for the rate-condition check")
    p.add_argument("--n", type=int, default=None, help="observation count for the rate-condition check")
    p.add_argument("--delta", type=float, default=None, help="observation step for the rate-condition check")
    p.add_argument("--eps", type=float, default=1.0 / 6.0, help="filter exponent for the rate-condition check")

    return parser


# -- subcommand implementations ----------------------------------------------


def cmd_simulate(args) -> int:
    theta = parse_theta(args.theta)
    model = _build_model(args)
    if len(theta) != model.param_dim:
        raise CliUserError(
            f"--theta has {len(theta)} components, model '{args.model}' needs {model.param_dim}"
        )
    if args.n < 1:
        raise CliUserError("--n must be >= 1")
    fine_steps = args.fine_steps if args.fine_steps else 50 * args.n
    if fine_steps % args.n:
        raise CliUserError("--fine-steps must be divisible by --n")
    x0 = args.x0 if args.x0 is not None else _default_x0(args.model, theta)
    path = simulate_path(model, theta, x0, args.t_end, fine_steps, seed=args.seed)
    obs = subsample(path, args.n)
    stride = fine_steps // args.n
    handle, owned = _out_handle(args.out)
    try:
        if args.decompose:
            arr = np.column_stack(
                (
                    obs.times,
                    obs.values,
                    path.cont_part[::stride],
                    path.jump_part[::stride],
                )
            )
            np.savetxt(handle, arr, delimiter=",", header="t,x,xc,xj", comments="", fmt="%.17g")
        else:
            arr = np.column_stack((obs.times, obs.values))
            np.savetxt(handle, arr, delimiter=",", header="t,x", comments="", fmt="%.17g")
    finally:
        if owned:
            handle.close()
    return EXIT_OK


def _read_obs(path: str):
    try:
        return read_observations_csv(path)
    except OSError as exc:
        raise CliUserError(f"cannot read '{path}': {exc}") from None
    except ValueError as exc:
        raise CliUserError(f"bad CSV '{path}': {exc}") from None


def cmd_estimate(args) -> int:
    obs = _read_obs(args.infile)
    model = _build_model(args)
    filt = _filter_from_args(args)
    report = estimate(model, obs, filt, method=args.method, endpoint=args.endpoint)
    payload = report.to_dict()
    warnings_list: List[str] = []
    try:
        fish = fisher_ergodic(model, report.theta, obs)
        payload["fisher"] = [[float(v) for v in row] for row in fish.matrix]
        if fish.inverse is not None:
            ci = confidence_intervals(report.theta, fish, obs.t_end, level=args.level)
            payload["ci"] = [[float(lo), float(hi)] for lo, hi in ci]
            payload["ci_level"] = args.level
        else:
            warnings_list.append("Fisher matrix ill-conditioned; no confidence intervals")
    except ValueError as exc:
        warnings_list.append(f"Fisher/CI unavailable: {exc}")
    payload["warnings"] = warnings_list

    print(f"model:     {model.name}")
    print(f"method:    {report.method} (endpoint: {report.endpoint})")
    print(f"converged: {report.converged}")
    for j, v in enumerate(np.atleast_1d(report.theta)):
        line = f"theta[{j}]:  {v:.6g}"
        if "ci" in payload:
            lo, hi = payload["ci"][j]
            line += f"   {args.level:.0%} CI [{lo:.6g}, {hi:.6g}]"
        print(line)
    print(f"loglik:    {report.loglik:.6g}")
    print(f"cutoff:    {report.cutoff:.6g}")
    print(f"kept/rejected: {report.kept_count}/{report.rejected_count}")
    for w in warnings_list:
        print(f"warning:   {w}")
    if args.out:
        with open(args.out, "w") as handle:
            json.dump(payload, handle, indent=2)
            handle.write("\n")
    if not report.converged:
        print("error: estimator did not converge", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_mc(args) -> int:
    try:
        cfg = ExperimentConfig.from_json(args.config)
    except OSError as exc:
        raise CliUserError(f"cannot read '{args.config}': {exc}") from None
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise CliUserError(f"bad config '{args.config}': {exc}") from None
    result = run_experiment(cfg, threads=args.threads)
    handle, owned = _out_handle(args.out)
    try:
        handle.write(
            "component,mean,std,mc_se,mean_rejected,failures,replications,wall_time\n"
        )
        d = len(result.means)
        for j in range(d):
            std = f"{result.stds[j]:.10g}" if result.stds is not None else ""
            se = (
                f"{result.mc_standard_errors[j]:.10g}"
                if result.mc_standard_errors is not None
                else ""
            )
            handle.write(
                f"theta{j + 1},{result.means[j]:.10g},{std},{se},"
                f"{result.mean_rejected:.10g},{result.failures},"
                f"{result.replications},{result.wall_time:.3f}\n"
            )
    finally:
        if owned:
            handle.close()
    return EXIT_OK


def _parse_rows(text: Optional[str]):
    if not text:
        return None
    rows = []
    for chunk in text.split(","):
        parts = chunk.split(":")
        if len(parts) != 3:
            raise CliUserError(f"bad --rows entry '{chunk}': expected t_n:n:block")
        try:
            rows.append((float(parts[0]), int(parts[1]), float(parts[2])))
        except ValueError:
            raise CliUserError(f"bad --rows entry '{chunk}': non-numeric field") from None
    return rows


def cmd_table(args) -> int:
    rows = _parse_rows(args.rows)
    try:
        report = reproduce_table(args.id, replications=args.reps, rows=rows, threads=args.threads)
    except ValueError as exc:
        raise CliUserError(str(exc)) from None
    handle, owned = _out_handle(args.out)
    try:
        report.to_csv(handle)
    finally:
        if owned:
            handle.close()
    return EXIT_OK


def cmd_fisher(args) -> int:
    obs = _read_obs(args.infile)
    theta = parse_theta(args.theta)
    model = _build_model(args)
    if len(theta) != model.param_dim:
        raise CliUserError(
            f"--theta has {len(theta)} components, model '{args.model}' needs {model.param_dim}"
        )
    fish = fisher_ergodic(model, theta, obs)
    print(f"sample span: {fish.sample_span:.6g}")
    print(f"condition number: {fish.condition_number:.6g}")
    for row in fish.matrix:
        print("  " + "  ".join(f"{v: .10g}" for v in row))
    if args.level is not None:
        try:
            ci = confidence_intervals(theta, fish, fish.sample_span, level=args.level)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
        for j, (lo, hi) in enumerate(ci):
            print(f"theta[{j}] {args.level:.0%} CI: [{lo:.6g}, {hi:.6g}]")
    return EXIT_OK


def cmd_check(args) -> int:
    model = _build_model(args)
    report = check_model(model)
    print(report)
    rate_args = [args.n is not None, args.delta is not None]
    if any(rate_args):
        if not all(rate_args):
            raise CliUserError("--n and --delta must be given together")
        levy = model.levy if model.levy is not None else parse_levy(args.levy)
        if levy is None:
            raise CliUserError("rate-condition check needs --levy")
        rate = rate_condition_check(args.n, args.delta, args.eps, levy)
        print(rate)
    return EXIT_OK if report.ok else EXIT_NUMERICAL


_COMMANDS = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "mc": cmd_mc,
    "table": cmd_table,
    "fisher": cmd_fisher,
    "check": cmd_check,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.cmd is None:
            parser.print_help()
            return EXIT_USER
        return _COMMANDS[args.cmd](args)
    except CliUserError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER
    except (DegenerateDataError, SimulationDivergedError, ExperimentFailedError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
