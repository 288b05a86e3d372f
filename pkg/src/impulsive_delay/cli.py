"""Command line entry point: ``solve``, ``verify`` and ``optimize``.

Exit codes: 0 success, 1 configuration error, 2 nonconvergence or empty
family, 3 property or certification failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from importlib import resources
from pathlib import Path

from . import io
from .certify import build, certify, property_suite
from .config import RunConfig, load_config, shipped_config_path
from .exceptions import (
    ConfigurationError,
    DomainError,
    EmptyFamilyError,
    HypothesisViolation,
    IntegrabilityError,
    MembershipError,
    NonconvergenceError,
)
from .optimizer import optimize, sample_solution_set

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGENCE, EXIT_PROPERTY = 0, 1, 2, 3

log = logging.getLogger("impulsive_delay")


def _load(args) -> RunConfig:
    if args.config is None:
        with resources.as_file(shipped_config_path("default")) as p:
            cfg = load_config(p)
    else:
        cfg = load_config(args.config)
    if args.grid_override is not None:
        if not args.grid_override > 0:
            raise ConfigurationError("grid override must be positive", "solver.h")
        cfg = cfg.with_h(args.grid_override)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_solve(args) -> int:
    cfg = _load(args)
    out = _out_dir(args)
    cert = certify(cfg)
    traj = cert.trajectory
    io.write_trajectory(out / "trajectory.csv", traj)
    io.write_history(out / "initial_history.csv", traj.initial_history)
    io.write_reports(out / "residual.txt", [cert.summary()])
    io.write_reports(out / "checks.txt", [r for r in cert.reports if r.name in ("B3", "F3")])
    if "apriori" in traj.meta:
        io.write_reports(out / "apriori.txt", [traj.meta["apriori"]])
    else:
        io.write_reports(out / "apriori.txt", [("apriori", {"status": "not claimed: no growth bound"})])
    status = "passed" if cert.passed else "FAILED"
    print(f"certification {status}: residual {cert.residual:.3e} <= {cert.threshold:.3e}; "
          f"files in {out}")
    for r in cert.reports:
        if not r.passed:
            print(f"property failed: {r.name}", file=sys.stderr)
    return EXIT_OK if cert.passed else EXIT_PROPERTY


def cmd_verify(args) -> int:
    cfg = _load(args)
    reports = property_suite(cfg)
    rows = [{"property": r.name, "passed": r.passed} for r in reports]
    print(io.format_table(rows, ("property", "passed")), end="")
    failed = [r for r in reports if not r.passed]
    for r in failed:
        names = [row.get("hypothesis") for row in r.failures if row.get("hypothesis")]
        detail = f" ({', '.join(names)})" if names else ""
        print(f"property failed: {r.name}{detail}", file=sys.stderr)
    if args.out:
        io.write_reports(_out_dir(args) / "verify.txt", reports)
    return EXIT_PROPERTY if failed else EXIT_OK


def cmd_optimize(args) -> int:
    cfg = _load(args)
    if cfg.optimize is None:
        raise ConfigurationError("required section is missing", "optimize")
    out = _out_dir(args)
    problem, _ = build(cfg)
    opt = cfg.optimize
    family = sample_solution_set(problem, opt.budget, cfg.solver, opt.cost, opt.workers)
    report = optimize(family, opt.cost)
    rows = report.rows()
    cols = ("id", "selection", "cost", "residual", "converged")
    best = {"id": report.best.id, "selection": report.best.label, "cost": report.best_cost,
            "direction": report.direction, "provenance": report.provenance,
            "validated": report.validated, "note": report.note}
    text = io.format_table(rows, cols) + "\n" + "\n".join(f"{k} = {io._fmt(v)}" for k, v in best.items())
    (out / "optimize.txt").write_text("[optimization]\n" + text + "\n")
    io.write_table(out / "optimize.csv", rows, cols)
    io.write_trajectory(out / "best_trajectory.csv", report.best.trajectory)
    print(text)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="impulsive-delay", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, needs_out in (("solve", True), ("verify", False), ("optimize", True)):
        s = sub.add_parser(name)
        s.add_argument("--config", type=Path, default=None, help="YAML run configuration (default: shipped)")
        s.add_argument("--out", type=Path, default=Path("out") if needs_out else None)
        s.add_argument("--grid-override", type=float, default=None, metavar="H")
        s.add_argument("--seed", type=int, default=None)
        s.add_argument("-v", "--verbose", action="store_true")
    return p


COMMANDS = {"solve": cmd_solve, "verify": cmd_verify, "optimize": cmd_optimize}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except HypothesisViolation as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_PROPERTY if args.command == "verify" else EXIT_CONFIG
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MembershipError as exc:
        print(f"configuration error: selection: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonconvergenceError, EmptyFamilyError) as exc:
        print(f"nonconvergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (DomainError, IntegrabilityError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
