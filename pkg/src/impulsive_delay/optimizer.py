"""Finite samples of the solution set and cost optimization over them.

The minimum over a certified sample is an upper bound for the infimum over
all mild solutions, never a claim of global optimality.
"""
from __future__ import annotations

import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exceptions import ConfigurationError, EmptyFamilyError, MembershipError, NonconvergenceError
from .inclusion import enumerate_selections
from .solver import ProblemInstance, SolverConfig, Trajectory, residual, solve

logger = logging.getLogger(__name__)

COST_KINDS = ("terminal_norm", "energy", "terminal_mass", "custom", "callable")


@dataclass(frozen=True)
class CostFunctional:
    """``terminal_norm`` |y(T)|^2, ``energy`` int |y|^2 dt, ``terminal_mass`` int u(T, x) dx,
    ``custom`` sum_i w_i |y(t_i)|^2 over a time-weight table, ``callable`` any ``fn(traj)``."""

    kind: str = "terminal_norm"
    direction: str = "minimize"
    times: tuple = ()
    weights: tuple = ()
    fn: Callable | None = None

    def __post_init__(self):
        if self.kind not in COST_KINDS:
            raise ConfigurationError(f"unknown cost kind {self.kind!r}", "optimize.cost")
        if self.direction not in ("minimize", "maximize"):
            raise ConfigurationError(f"unknown direction {self.direction!r}", "optimize.direction")
        if self.kind == "custom" and (len(self.times) == 0 or len(self.times) != len(self.weights)):
            raise ConfigurationError("custom cost needs matching times and weights", "optimize.times")
        if self.kind == "callable" and self.fn is None:
            raise ConfigurationError("callable cost needs fn", "optimize.cost")

    @property
    def validated(self):
        """Shipped kinds are continuous; user callables are evaluated but not vouched for."""
        return self.kind != "callable"


def evaluate_cost(J: CostFunctional, traj: Trajectory) -> float:
    times, values = traj.knots()
    space = traj.space
    if J.kind == "terminal_norm":
        return float(space.norm(values[-1]) ** 2)
    if J.kind == "energy":
        return float(np.trapezoid(space.norms(values) ** 2, times))
    if J.kind == "terminal_mass":
        return float(np.dot(space.weights, values[-1]))
    if J.kind == "custom":
        ys = traj(np.asarray(J.times, dtype=float))
        return float(np.dot(np.asarray(J.weights, dtype=float), space.norms(ys) ** 2))
    value = float(J.fn(traj))
    if not np.isfinite(value):
        raise ConfigurationError("cost is not finite", "optimize.cost")
    return value


@dataclass(frozen=True)
class FamilyEntry:
    id: int
    label: str
    trajectory: Trajectory
    residual: float
    cost: float | None = None


@dataclass(frozen=True)
class SolutionFamily:
    entries: tuple
    provenance: str
    threshold: float
    discarded: tuple = ()

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def ids(self):
        return tuple(e.id for e in self.entries)


def certification_threshold(cfg: SolverConfig) -> float:
    """Largest residual accepted into a family."""
    return cfg.picard_tol + cfg.h ** 2


def _provenance(problem, cfg, budget, labels):
    blob = f"{problem.fingerprint}|{cfg!r}|{budget}|{'|'.join(labels)}"
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _run(problem, selection, cfg):
    try:
        traj = solve(problem, selection, cfg, diagnostics=False)
    except (NonconvergenceError, MembershipError) as exc:
        return None, str(exc)
    return traj, None


def sample_solution_set(problem: ProblemInstance, budget, cfg: SolverConfig | None = None,
                        cost: CostFunctional | None = None, workers=1) -> SolutionFamily:
    """Solve once per enumerated selection; keep the certified runs in enumeration order."""
    cfg = cfg or SolverConfig()
    selections = enumerate_selections(problem.control, int(budget))
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=int(workers)) as pool:
            results = list(pool.map(lambda s: _run(problem, s, cfg), selections))
    else:
        results = [_run(problem, s, cfg) for s in selections]
    threshold = certification_threshold(cfg)
    entries, discarded = [], []
    for i, (sel, (traj, err)) in enumerate(zip(selections, results)):
        if traj is None:
            logger.info("selection %d (%s) discarded: %s", i, sel.label, err)
            discarded.append((i, sel.label, err))
            continue
        res = residual(traj, sel, problem)
        if res > threshold:
            msg = f"residual {res!r} above threshold {threshold!r}"
            logger.info("selection %d (%s) discarded: %s", i, sel.label, msg)
            discarded.append((i, sel.label, msg))
            continue
        traj = traj.with_meta(residual=res)
        value = evaluate_cost(cost, traj) if cost is not None else None
        entries.append(FamilyEntry(i, sel.label, traj, res, value))
    if not entries:
        raise EmptyFamilyError(f"all {len(selections)} runs failed certification")
    return SolutionFamily(tuple(entries), _provenance(problem, cfg, budget, [s.label for s in selections]),
                          threshold, tuple(discarded))


@dataclass(frozen=True)
class OptimizationReport:
    best: FamilyEntry
    best_cost: float
    direction: str
    table: tuple
    provenance: str
    validated: bool = True
    note: str = field(default="optimum over a finite certified sample; a bound, not the exact optimum")

    def rows(self):
        return [{"id": r[0], "selection": r[1], "cost": r[2], "residual": r[3], "converged": True}
                for r in self.table]


def optimize(family: SolutionFamily, J: CostFunctional) -> OptimizationReport:
    """Exact argmin/argmax over the family; ties go to the lowest selection id."""
    if family is None or len(family) == 0:
        raise EmptyFamilyError("cannot optimize over an empty family")
    table = []
    for e in family.entries:
        c = e.cost if e.cost is not None and J.kind != "callable" else evaluate_cost(J, e.trajectory)
        table.append((e.id, e.label, c, e.residual))
    sign = 1.0 if J.direction == "minimize" else -1.0
    best_row = min(table, key=lambda r: (sign * r[2], r[0]))
    best = next(e for e in family.entries if e.id == best_row[0])
    return OptimizationReport(best, best_row[2], J.direction, tuple(table), family.provenance, J.validated)
