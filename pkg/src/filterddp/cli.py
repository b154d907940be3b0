"""Command line front end.

Two subcommands: `solve` runs a registered benchmark and writes iteration
and trajectory CSV files (plus figures) into the output directory;
`check` verifies the analytic derivatives of a benchmark against finite
differences, and for the LQ family cross-checks the solver against the
direct stacked solver.

Exit codes: 0 success, 1 a run failed to converge or a check failed,
2 invalid usage (unknown problem, unknown or malformed setting).
Floats are serialized with repr so rerunning a fixed seed reproduces the
CSV files byte for byte.  The default output directory comes from the
FILTERDDP_OUT environment variable when set.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
from typing import Mapping, Sequence

import numpy as np

from .benchmarks import PROBLEMS, build_instance, problem_names, stacked_kkt_oracle
from .ocp import Iterate, OcpModel, derivative_check
from .solver import IterationRecord, SolverConfig, SolverReport, solve

ITERATION_COLUMNS = [
    "k", "mode", "mu", "cost", "theta", "lagrangian", "error",
    "gamma", "delta_w", "m", "l_type", "filter_size", "trials",
]

_CONFIG_TYPES = {f.name: f.type for f in dataclasses.fields(SolverConfig)}

DERIVATIVE_TOL = 1e-5


class BadSetting(Exception):
    def __init__(self, key: str, reason: str):
        super().__init__(f"invalid setting {key!r}: {reason}")
        self.key = key


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _coerce_config_value(name: str, raw: str):
    kind = _CONFIG_TYPES[name]
    if kind == "bool":
        return _parse_bool(raw)
    if kind == "int":
        value = float(raw)
        if not value.is_integer():
            raise ValueError(f"expected an integer, got {raw!r}")
        return int(value)
    return float(raw)


def split_settings(
    settings: Mapping[str, str],
) -> tuple[dict[str, object], dict[str, str]]:
    """Partition raw key=value settings into solver config and spec overrides.

    Raises:
        BadSetting: malformed value for a known solver field.
    """
    config_kwargs: dict[str, object] = {}
    spec_overrides: dict[str, str] = {}
    for key, raw in settings.items():
        if key in _CONFIG_TYPES:
            try:
                config_kwargs[key] = _coerce_config_value(key, raw)
            except ValueError as exc:
                raise BadSetting(key, str(exc)) from None
        else:
            spec_overrides[key] = raw
    return config_kwargs, spec_overrides


def _gather_settings(config_path: str | None, pairs: Sequence[str]) -> dict[str, str]:
    settings: dict[str, str] = {}
    if config_path:
        with open(config_path) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise BadSetting("config", "config file must hold a JSON object")
        for key, value in data.items():
            settings[str(key)] = str(value)
    for pair in pairs:
        if "=" not in pair:
            raise BadSetting(pair, "expected KEY=VALUE")
        key, _, raw = pair.partition("=")
        settings[key.strip()] = raw.strip()
    return settings


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return repr(float(value))


def write_iterations_csv(path: str, records: Sequence[IterationRecord]) -> str:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ITERATION_COLUMNS)
        for rec in records:
            writer.writerow([_fmt(getattr(rec, col)) for col in ITERATION_COLUMNS])
    return path


def write_trajectory_csv(path: str, model: OcpModel, it: Iterate) -> str:
    d = model.dims
    header = (
        ["t"]
        + [f"x{i}" for i in range(d.n_x)]
        + [f"u{i}" for i in range(d.n_u)]
        + [f"phi{i}" for i in range(d.n_c)]
        + [f"lam{i}" for i in range(d.n_x)]
        + [f"z{i}" for i in range(d.n_u)]
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for t in range(d.horizon):
            row = [str(t)]
            for block in (it.x[t], it.u[t], it.phi[t], it.lam[t], it.z[t]):
                row.extend(_fmt(v) for v in block)
            writer.writerow(row)
    return path


def write_summary_csv(path: str, rows: Sequence[dict]) -> str:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["run", "seed", "status", "iterations", "error"])
        for row in rows:
            writer.writerow([
                row["run"], _fmt(row["seed"]), row["status"],
                _fmt(row["iterations"]), _fmt(row["error"]),
            ])
    return path


def _out_dir(arg: str | None) -> str:
    out = arg or os.environ.get("FILTERDDP_OUT") or "."
    os.makedirs(out, exist_ok=True)
    return out


def cmd_solve(args: argparse.Namespace) -> int:
    if args.problem not in PROBLEMS:
        print(
            f"unknown problem {args.problem!r}; known: {', '.join(problem_names())}",
            file=sys.stderr,
        )
        return 2
    try:
        settings = _gather_settings(args.config, args.sets)
        config_kwargs, spec_overrides = split_settings(settings)
    except BadSetting as exc:
        print(str(exc), file=sys.stderr)
        return 2
    # Problem-recommended solver settings apply unless the user set the same key.
    for key, value in PROBLEMS[args.problem].solver_settings.items():
        config_kwargs.setdefault(key, value)
    try:
        config = SolverConfig(**config_kwargs)
    except AssertionError:
        print(f"invalid solver configuration: {config_kwargs}", file=sys.stderr)
        return 2
    out = _out_dir(args.out)

    rows: list[dict] = []
    all_converged = True
    for i in range(args.batch):
        seed = args.seed + i
        try:
            model, u_init, _spec = build_instance(args.problem, seed, spec_overrides)
        except KeyError as exc:
            print(f"unknown setting {exc.args[0]!r} for problem {args.problem}", file=sys.stderr)
            return 2
        report: SolverReport = solve(model, u_init, config)
        base = f"{args.problem}_seed{seed}"
        write_iterations_csv(os.path.join(out, f"{base}_iterations.csv"), report.records)
        write_trajectory_csv(
            os.path.join(out, f"{base}_trajectory.csv"), model, report.iterate
        )
        if not args.no_figures:
            from . import plots

            plots.convergence_figure(
                report.records, os.path.join(out, f"{base}_convergence.png"), title=base
            )
            plots.trajectory_figure(
                model, report.iterate, os.path.join(out, f"{base}_trajectory.png"), title=base
            )
        err = report.records[-1].error if report.records else float("nan")
        rows.append({
            "run": base, "seed": seed, "status": report.status,
            "iterations": report.iterations, "error": err,
        })
        all_converged = all_converged and report.converged
        print(
            f"{base}: {report.status} iterations={report.iterations} "
            f"error={err:.3e} time={report.wall_time:.2f}s"
        )
    write_summary_csv(os.path.join(out, f"{args.problem}_summary.csv"), rows)
    if not args.no_figures and args.batch > 1:
        from . import plots

        plots.batch_figure(
            rows, os.path.join(out, f"{args.problem}_batch.png"), title=args.problem
        )
    return 0 if all_converged else 1


def cmd_check(args: argparse.Namespace) -> int:
    if args.problem not in PROBLEMS:
        print(
            f"unknown problem {args.problem!r}; known: {', '.join(problem_names())}",
            file=sys.stderr,
        )
        return 2
    try:
        settings = _gather_settings(None, args.sets)
        config_kwargs, spec_overrides = split_settings(settings)
    except BadSetting as exc:
        print(str(exc), file=sys.stderr)
        return 2
    try:
        model, u_init, _spec = build_instance(args.problem, args.seed, spec_overrides)
    except KeyError as exc:
        print(f"unknown setting {exc.args[0]!r} for problem {args.problem}", file=sys.stderr)
        return 2

    rng = np.random.default_rng(args.seed)
    worst: dict[str, float] = {}
    for _ in range(5):
        x = 0.3 * rng.standard_normal(model.dims.n_x)
        u = 0.3 * rng.standard_normal(model.dims.n_u)
        for key, err in derivative_check(model, x, u).items():
            worst[key] = max(worst.get(key, 0.0), err)
    for key in sorted(worst):
        print(f"{key}: {worst[key]:.3e}")
    peak = max(worst.values())
    ok = peak <= DERIVATIVE_TOL
    print(f"worst derivative mismatch: {peak:.3e} ({'ok' if ok else 'FAIL'})")

    if args.problem == "eqlq":
        config = SolverConfig(**config_kwargs) if config_kwargs else SolverConfig()
        report = solve(model, u_init, config)
        reference = stacked_kkt_oracle(model)
        gap = max(
            float(np.max(np.abs(report.iterate.x - reference.x))),
            float(np.max(np.abs(report.iterate.u - reference.u))),
            float(np.max(np.abs(report.iterate.phi - reference.phi))),
        )
        solver_ok = report.converged and gap <= 1e-7
        print(
            f"direct-solver gap: {gap:.3e} status={report.status} "
            f"({'ok' if solver_ok else 'FAIL'})"
        )
        ok = ok and solver_ok
    return 0 if ok else 1


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="filterddp",
        description="constrained trajectory optimizer benchmarks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="solve a benchmark and write CSV logs and figures")
    ps.add_argument("--problem", required=True, help="benchmark name")
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--batch", type=int, default=1, help="number of consecutive seeds")
    ps.add_argument("--out", default=None, help="output directory (default FILTERDDP_OUT or .)")
    ps.add_argument("--set", dest="sets", action="append", default=[], metavar="KEY=VALUE",
                    help="override a solver or problem setting")
    ps.add_argument("--config", default=None, help="JSON file of settings")
    ps.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    ps.set_defaults(fn=cmd_solve)

    pc = sub.add_parser("check", help="finite-difference derivative audit of a benchmark")
    pc.add_argument("--problem", required=True, help="benchmark name")
    pc.add_argument("--seed", type=int, default=0)
    pc.add_argument("--set", dest="sets", action="append", default=[], metavar="KEY=VALUE")
    pc.set_defaults(fn=cmd_check)

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
