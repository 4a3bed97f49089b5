"""Command-line interface: optimize, convergence, count-dof, verify, print-code.

Exit codes: 0 success, 1 usage/config error, 2 non-convergence,
3 verification failure.  Angles are radians.

Output schema (version 1).  ``--out PREFIX`` writes ``PREFIX.csv`` and
``PREFIX.json``.  Every CSV starts with ``#`` header lines (tool version,
command, config echo, seed) followed by a column row:

* optimize: ``step,iteration,coordinate,target,angle,objective``, one row
  per scanned angle of every coordinate step;
* convergence: ``run,iterations``; with ``--sweep``
  ``threshold,metric,mean_n,std_n,max_n``.

Every JSON file holds a ``header`` object (same fields as the CSV header,
plus ``schema``) next to the command's payload: the convergence report
without per-step scans for optimize, ``summary`` or ``sweep`` for
convergence.  Outputs contain no timestamps, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .analysis import (
    count_quasi_local_dof,
    count_until_sufficient,
    monte_carlo_convergence,
    threshold_sweep,
    verify_extrema,
)
from .codes import CodeSpec, PhaseVector, build_code
from .errors import CapacityError, DomainError
from .expectations import D3_TABLE, SUB2_TABLE, closed_form_expectations, gradient_f, statevector_expectations
from .measurement import NoiseParams, make_rng
from .optimizer import ScanPolicy, optimize

SEED_ENV = "PHASEOPT_SEED"
SCHEMA_VERSION = 1
EXIT_OK, EXIT_USAGE, EXIT_NOCONV, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_angle(text: str) -> float:
    t = str(text).strip().lower()
    if "deg" in t or "°" in t:
        raise UsageError(f"angles must be given in radians, got {text!r}")
    try:
        return float(t)
    except ValueError as exc:
        raise UsageError(f"not a number: {text!r}") from exc


def parse_angles(text: str) -> list[float]:
    return [parse_angle(x) for x in str(text).split(",") if x.strip()]


def parse_sweep(text: str) -> list[float]:
    """``lo:hi:count`` -> log-spaced thresholds."""
    try:
        lo, hi, count = text.split(":")
        return np.logspace(np.log10(float(lo)), np.log10(float(hi)), int(count)).tolist()
    except ValueError as exc:
        raise UsageError(f"sweep must look like 1e-6:1e-1:13, got {text!r}") from exc


def load_code(name: str | None, code_file: str | None) -> CodeSpec:
    if code_file:
        return CodeSpec.from_json(Path(code_file).read_text())
    return build_code(name or "d3")


def resolve_seed(value) -> int:
    if value is not None:
        return int(value)
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise UsageError(f"{SEED_ENV} must be an integer") from exc
    return 0


def header(command: str, config: dict) -> dict:
    return {"tool": "phaseopt", "version": __version__, "schema": SCHEMA_VERSION, "command": command,
            "config": config, "seed": config.get("seed")}


def write_csv(path: Path, head: dict, columns: Sequence[str], rows: Sequence[Sequence]) -> None:
    buf = io.StringIO()
    buf.write(f"# tool: phaseopt {__version__}\n")
    buf.write(f"# command: {head['command']}\n")
    buf.write(f"# config: {json.dumps(head['config'], sort_keys=True)}\n")
    buf.write(f"# seed: {head['seed']}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    path.write_text(buf.getvalue())


def write_json(path: Path, head: dict, body: dict) -> None:
    path.write_text(json.dumps({"header": head, **body}, indent=2, sort_keys=True) + "\n")


def _out_prefix(args, default: str) -> Path | None:
    if args.out is None:
        return None
    p = Path(args.out)
    if p.suffix:
        p = p.with_suffix("")
    p.parent.mkdir(parents=True, exist_ok=True)
    return p if p.name else p / default


# ---------------------------------------------------------------- commands

def cmd_optimize(args) -> int:
    code = load_code(args.code, args.code_file)
    seed = resolve_seed(args.seed)
    if args.phases is not None:
        phases = PhaseVector(parse_angles(args.phases))
        if len(phases) != code.n_phases:
            raise UsageError(f"code {code.name} needs {code.n_phases} phases, got {len(phases)}")
    else:
        phases = PhaseVector(make_rng(seed).uniform(0, 2 * np.pi, code.n_phases))
    mode = args.mode or ("shots" if args.shots else "analytic")
    shots = "analytic" if mode == "analytic" else int(args.shots or 200)
    scan = args.scan or ("grid" if args.grid_step is not None else "continuous")
    noise = NoiseParams(p=float(args.p), shots=shots, seed=seed)
    policy = ScanPolicy(
        mode=scan,
        grid_step=parse_angle(args.grid_step) if args.grid_step is not None else 2 * np.pi / 10,
        objective=args.variant,
        max_iterations=int(args.max_iterations),
        threshold=float(args.threshold) if args.threshold is not None else (1e-3 if mode == "analytic" else 0.1),
        threshold_metric=args.metric or ("delta1" if mode == "analytic" else "delta2"),
    )
    report = optimize(code, phases, noise, policy, record_scans=True)
    config = {"command": "optimize", "code": code.name, "phases": phases.values.tolist(), "mode": mode,
              "shots": shots, "p": noise.p, "seed": seed, "policy": report.policy}
    head = header("optimize", config)
    body = report.to_dict()
    steps = body.pop("steps")
    prefix = _out_prefix(args, "optimize")
    if prefix is not None:
        write_json(prefix.with_suffix(".json"), head, body)
        rows = []
        for i, s in enumerate(steps):
            for a, v in zip(s["scan_angles"], s["scan_values"]):
                rows.append([i, s["iteration"], s["coordinate"], s["target"], a, v])
        write_csv(prefix.with_suffix(".csv"), head,
                  ["step", "iteration", "coordinate", "target", "angle", "objective"], rows)
    summary = {"iterations": report.iterations, "converged": report.converged,
               "final_theta": body["final_theta"], "final_expectations": report.final_expectations}
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK if report.converged else EXIT_NOCONV


def cmd_convergence(args) -> int:
    code = load_code(args.code, args.code_file)
    seed = resolve_seed(args.seed)
    runs = int(args.runs)
    if runs < 1:
        raise UsageError("runs must be positive")
    metric = args.metric or "delta1"
    threshold = float(args.threshold) if args.threshold is not None else 1e-3
    config = {"command": "convergence", "code": code.name, "variant": args.variant, "runs": runs, "seed": seed,
              "metric": metric, "threshold": threshold, "sweep": args.sweep, "max_iterations": args.max_iterations}
    head = header("convergence", config)
    prefix = _out_prefix(args, "convergence")
    if args.sweep:
        rows = threshold_sweep(code, args.variant, parse_sweep(args.sweep), runs, seed,
                               max_iterations=int(args.max_iterations))
        if prefix is not None:
            write_csv(prefix.with_suffix(".csv"), head, ["threshold", "metric", "mean_n", "std_n", "max_n"],
                      [[r["threshold"], r["metric"], r["mean_n"], r["std_n"], r["max_n"]] for r in rows])
            write_json(prefix.with_suffix(".json"), head, {"sweep": rows})
        print(json.dumps(rows, indent=2))
        return EXIT_OK if all(r["n_unconverged"] == 0 for r in rows) else EXIT_NOCONV
    policy = ScanPolicy(threshold=threshold, threshold_metric=metric, max_iterations=int(args.max_iterations))
    stats = monte_carlo_convergence(code, args.variant, runs, policy, seed)
    if prefix is not None:
        write_csv(prefix.with_suffix(".csv"), head, ["run", "iterations"], list(enumerate(stats.per_run_n)))
        write_json(prefix.with_suffix(".json"), head, {"summary": stats.summary()})
    print(json.dumps(stats.summary(), indent=2))
    return EXIT_OK if stats.n_unconverged == 0 else EXIT_NOCONV


def cmd_count_dof(args) -> int:
    code = load_code(args.code, args.code_file)
    if args.max_locality is None:
        dof = count_until_sufficient(code)
    else:
        if int(args.max_locality) < 1:
            raise UsageError("max-locality must be positive")
        dof = count_quasi_local_dof(code, int(args.max_locality))
    print(f"code {code.name}: {code.n_qubits} qubits, {code.n_plaquettes} plaquettes")
    print("locality  count")
    for k, v in dof.per_locality.items():
        print(f"{k:>8}  {v}")
    print(f"cumulative {dof.cumulative} / phases {dof.phases_required} / {dof.verdict}")
    return EXIT_OK


def _mutated_tables():
    """Coefficient tables with one sign flipped in the first sub-code term."""
    sub = dict(SUB2_TABLE)
    (phis, thetas), rest = sub[(0,)][0], sub[(0,)][1:]
    sub[(0,)] = ((phis, (-thetas[0],) + thetas[1:]),) + rest
    return sub


def cmd_verify(args) -> int:
    seed = resolve_seed(args.seed)
    samples = int(args.samples)
    sub_table = _mutated_tables() if args.inject_fault else None
    rng = make_rng(seed + 1)
    failures: list[dict] = []
    # oracle equivalence of the closed forms
    for name, table in (("d3", D3_TABLE), ("sub2", sub_table)):
        code = build_code(name)
        for _ in range(samples):
            phi = rng.uniform(0, 2 * np.pi, code.n_phases)
            th = dict(zip(code.control_qubits, rng.uniform(0, 2 * np.pi, len(code.control_qubits))))
            a = closed_form_expectations(code, phi, th, table if name == "sub2" else None)
            b = statevector_expectations(code, phi, th)
            err = float(np.max(np.abs(a - b)))
            if err > 1e-10:
                failures.append({"check": "oracle", "code": name, "phi": phi.tolist(), "error": err})
                break
    # gradient against central differences of the closed form
    sub = build_code("sub2")
    for _ in range(samples):
        phi = rng.uniform(0, 2 * np.pi, 3)
        th = rng.uniform(0, 2 * np.pi, 3)
        h = 1e-6
        num = []
        for i in range(3):
            e = np.zeros(3)
            e[i] = h
            fp = closed_form_expectations(sub, phi, dict(zip((0, 1, 4), th + e)), sub_table).sum()
            fm = closed_form_expectations(sub, phi, dict(zip((0, 1, 4), th - e)), sub_table).sum()
            num.append((fp - fm) / (2 * h))
        err = float(np.max(np.abs(np.array(num) - gradient_f(phi, th))))
        if err > 1e-6:
            failures.append({"check": "gradient", "phi": phi.tolist(), "theta": th.tolist(), "error": err})
            break
    rep = verify_extrema(samples, seed, table=sub_table)
    failures.extend(rep.violations[:5])
    result = {"samples": samples, "seed": seed, "extrema": {
        "max_section_residual": rep.max_section_residual, "max_gradient_norm": rep.max_gradient_norm,
        "max_critical_value_error": rep.max_critical_value_error, "max_grid_value": rep.max_grid_value,
        "critical_value_counts": {str(k): v for k, v in rep.critical_value_counts.items()}},
        "violations": failures}
    print(json.dumps(result, indent=2, sort_keys=True))
    return EXIT_OK if not failures else EXIT_VERIFY


def cmd_print_code(args) -> int:
    code = load_code(args.code, args.code_file)
    print(code.to_json(indent=2))
    return EXIT_OK


# ---------------------------------------------------------------- parsing

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="phaseopt", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"phaseopt {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p, code_default="d3"):
        p.add_argument("--code", default=None, help=f"d3, d5, d7 or sub2 (default {code_default})")
        p.add_argument("--code-file", default=None, help="JSON code description")
        p.add_argument("--config", default=None, help="JSON file with default flag values")
        p.add_argument("--out", default=None, help="output prefix for .json/.csv files")

    p = sub.add_parser("optimize", help="run the phase-compensation protocol once")
    common(p)
    p.add_argument("--phases", default=None, help="comma-separated phases in radians")
    p.add_argument("--seed", default=None, type=int)
    p.add_argument("--mode", choices=["analytic", "shots"], default=None)
    p.add_argument("--shots", default=None, type=int)
    p.add_argument("--p", default=0.0, type=float, help="white-noise weight")
    p.add_argument("--scan", choices=["continuous", "grid"], default=None)
    p.add_argument("--grid-step", default=None)
    p.add_argument("--variant", choices=["individual", "sum"], default="individual")
    p.add_argument("--threshold", default=None, type=float)
    p.add_argument("--metric", choices=["delta1", "delta2"], default=None)
    p.add_argument("--max-iterations", default=50, type=int)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("convergence", help="Monte-Carlo convergence statistics")
    common(p)
    p.add_argument("--variant", choices=["individual", "sum"], default="individual")
    p.add_argument("--runs", default=10000, type=int)
    p.add_argument("--seed", default=None, type=int)
    p.add_argument("--threshold", default=None, type=float)
    p.add_argument("--metric", choices=["delta1", "delta2"], default=None)
    p.add_argument("--sweep", default=None, help="lo:hi:count log-spaced thresholds")
    p.add_argument("--max-iterations", default=50, type=int)
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("count-dof", help="count quasi-local rotation generators")
    common(p)
    p.add_argument("--max-locality", default=None, type=int)
    p.set_defaults(func=cmd_count_dof)

    p = sub.add_parser("verify", help="run the analytic property checks")
    p.add_argument("--config", default=None)
    p.add_argument("--samples", default=100, type=int)
    p.add_argument("--seed", default=None, type=int)
    p.add_argument("--inject-fault", action="store_true", help="flip a sign in a closed form (mutation test)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("print-code", help="dump a code description as JSON")
    common(p)
    p.set_defaults(func=cmd_print_code)
    return parser


def _apply_config(parser: argparse.ArgumentParser, args: argparse.Namespace, argv: Sequence[str]) -> None:
    """Fill flags not given on the command line from the --config JSON file."""
    if not getattr(args, "config", None):
        return
    try:
        cfg = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from exc
    given = {a.split("=")[0] for a in argv if a.startswith("--")}
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if not hasattr(args, dest):
            raise UsageError(f"unknown config key {key!r}")
        if f"--{dest.replace('_', '-')}" not in given:
            setattr(args, dest, value)


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help, --version and usage errors
        return int(exc.code or 0)
    if not getattr(args, "command", None):
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        _apply_config(parser, args, argv)
        return args.func(args)
    except (UsageError, DomainError, CapacityError, ValueError) as exc:
        print(f"phaseopt: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
