"""Command-line entry point: ``vascutherm {solve,hss,verify,sweep} ...``."""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import replace

from . import export
from .analysis import compute_metrics, problem_hss
from .assembly import segment_peclet
from .config import BUNDLED, build_problem, bundled_config_text, parse_config
from .errors import ConfigError, SolverError, VascuthermError
from .solver import solve
from .verify import (check_comparison, check_radiative_uniqueness, check_stability, field_checks)

EXIT_OK, EXIT_PARSE, EXIT_VALIDATION, EXIT_SOLVER, EXIT_VERIFY = 0, 2, 3, 4, 5
PECLET_WARNING = 2.0
SWEEP_PARAMS = ("mass_flow_rate", "inlet_temperature", "f0")
SWEEP_COLUMNS = ("theta_mean", "theta_outlet", "theta_hss", "coefficient_of_performance", "regime",
                 "cooling_efficiency", "max_cooling_efficiency", "heating_efficiency",
                 "energy_balance_residual", "iterations")


def exit_code(exc):
    if isinstance(exc, ConfigError):
        return EXIT_PARSE
    if isinstance(exc, SolverError):
        return EXIT_SOLVER
    return EXIT_VALIDATION


def error_document(exc):
    doc = {"error": exc.code, "message": str(exc), "exit_code": exit_code(exc)}
    if getattr(exc, "line", None) is not None:
        doc["line"] = exc.line
    if getattr(exc, "issues", None):
        doc["issues"] = [{"code": i.code, "message": i.message, "index": i.index} for i in exc.issues]
    if getattr(exc, "history", None):
        doc["history"] = exc.history
    return doc


def read_config(source):
    """Parse a config file, or a bundled config given by name."""
    if not os.path.exists(source) and source in BUNDLED:
        return parse_config(bundled_config_text(source))
    try:
        with open(source, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read {source}: {exc.strerror}") from None


class Runner:
    def __init__(self, output_dir=".", quiet=False):
        self.output_dir = output_dir
        self.quiet = quiet

    def info(self, msg):
        if not self.quiet:
            print(msg)

    def warn(self, msg):
        print(f"warning: {msg}", file=sys.stderr)

    def out(self, name):
        os.makedirs(self.output_dir, exist_ok=True)
        return os.path.join(self.output_dir, name)

    def problem(self, config):
        problem = build_problem(config)
        pe = segment_peclet(problem)
        if pe > PECLET_WARNING:
            self.warn(f"segment Peclet number {pe:.3g} exceeds {PECLET_WARNING:g}; the unstabilised "
                      "channel term may oscillate and discrete bounds can be violated slightly")
        return problem

    def solve(self, config):
        problem = self.problem(config)
        field_ = solve(problem, config.settings)
        metrics = compute_metrics(field_, problem)
        metrics.verification = {k: r.to_dict() for k, r in field_checks(field_, problem).items()}
        export.write_field_csv(self.out(config.field_csv), field_)
        export.write_field_vtk(self.out(config.field_vtk), field_)
        export.write_json(self.out(config.metrics_json), metrics.to_dict())
        self.info(f"theta_mean = {metrics.theta_mean:.6g} K")
        if metrics.theta_outlet is not None:
            self.info(f"theta_outlet = {metrics.theta_outlet:.6g} K (inlet {metrics.theta_inlet:.6g} K)")
        if metrics.coefficient_of_performance is not None:
            self.info(f"coefficient_of_performance = {metrics.coefficient_of_performance:.6g}")
        self.info(f"wrote {config.field_csv}, {config.field_vtk}, {config.metrics_json} to {self.output_dir}")
        return EXIT_OK

    def hss(self, config):
        problem = self.problem(config)
        doc = {"theta_hss": problem_hss(problem), "mean_heat_source": problem.mean_heat_source(),
               "ambient_temperature": config.ambient_temperature,
               "emissivity": problem.effective_emissivity,
               "convection_coefficient": config.convection_coefficient}
        export.write_json(self.out("hss.json"), doc)
        self.info(f"theta_hss = {doc['theta_hss']:.10g} K")
        return EXIT_OK

    def verify(self, config_a, config_b=None):
        pa = self.problem(config_a)
        fa = solve(pa, config_a.settings)
        if config_b is None:
            reports = dict(field_checks(fa, pa))
            reports["stability"] = check_stability(pa, 1.0, settings=config_a.settings)
            amb = config_a.ambient_temperature
            reports["radiative-uniqueness"] = check_radiative_uniqueness(
                pa, [amb, amb + 100.0], settings=config_a.settings)
        else:
            pb = self.problem(config_b)
            fb = solve(pb, config_b.settings)
            reports = {"comparison-principle": check_comparison(fa, fb, pa, pb)}
        failed = [k for k, r in reports.items() if r.status == "fail"]
        doc = {"reports": {k: r.to_dict() for k, r in reports.items()}, "failed": failed,
               "passed": not failed}
        export.write_json(self.out("verification.json"), doc)
        for k, r in reports.items():
            extra = f" (violation {r.violation:.3g} K at node {r.worst_node})" if r.status == "fail" else ""
            self.info(f"{k}: {r.status}{extra}")
        return EXIT_VERIFY if failed else EXIT_OK

    def sweep(self, config, param, values):
        rows = []
        for v in values:
            if param == "mass_flow_rate":
                cfg = replace(config, mass_flow_rate=v)
            elif param == "inlet_temperature":
                cfg = replace(config, inlet_temperature=v)
            else:
                cfg = replace(config, value=v)
            row = {"value": repr(float(v)), "status": "ok", "error": ""}
            try:
                problem = build_problem(cfg)
                m = compute_metrics(solve(problem, cfg.settings), problem).to_dict()
                for c in SWEEP_COLUMNS:
                    x = m[c]
                    row[c] = "" if x is None else (repr(x) if isinstance(x, float) else str(x))
            except VascuthermError as exc:
                row.update(status="failed", error=exc.code)
                self.warn(f"{param} = {v}: {exc}")
            rows.append(row)
        with open(self.out("sweep.csv"), "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, ["value", "status", "error", *SWEEP_COLUMNS], restval="",
                               lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
        self.info(f"wrote {len(rows)} rows to {self.out('sweep.csv')}")
        return EXIT_OK


def _value_list(text):
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")


def build_parser():
    parser = argparse.ArgumentParser(prog="vascutherm", description="Thin-plate thermal solver with "
                                     "embedded coolant channels.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output-dir", default=".", help="directory for output files (default: .)")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common], help="solve and write field CSV, VTK and metrics JSON")
    p.add_argument("config", help=f"config file or bundled name ({', '.join(BUNDLED)})")
    p = sub.add_parser("hss", parents=[common], help="hot steady-state temperature of a config")
    p.add_argument("config")
    p = sub.add_parser("verify", parents=[common], help="run the principle checks")
    p.add_argument("config")
    p.add_argument("config_b", nargs="?", help="second config for the comparison check")
    p = sub.add_parser("sweep", parents=[common], help="solve over a list of parameter values")
    p.add_argument("config")
    p.add_argument("--param", required=True, help=f"one of {', '.join(SWEEP_PARAMS)}")
    p.add_argument("--values", required=True, type=_value_list, help="comma-separated SI values")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    runner = Runner(args.output_dir, args.quiet)
    try:
        config = read_config(args.config)
        if args.command == "solve":
            return runner.solve(config)
        if args.command == "hss":
            return runner.hss(config)
        if args.command == "verify":
            return runner.verify(config, read_config(args.config_b) if args.config_b else None)
        if args.param not in SWEEP_PARAMS:
            raise ConfigError(f"unknown sweep parameter {args.param!r}; choose from {', '.join(SWEEP_PARAMS)}")
        return runner.sweep(config, args.param, args.values)
    except VascuthermError as exc:
        doc = error_document(exc)
        sys.stderr.write(export.dumps(doc))
        try:
            export.write_json(runner.out("error.json"), doc)
        except OSError:
            pass
        return doc["exit_code"]


if __name__ == "__main__":
    sys.exit(main())
