"""Certification of solver runs and the property suite behind ``verify``."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .evolution import check_composition, check_identity
from .exceptions import ConfigurationError
from .inclusion import selection_from_spec
from .phase_space import (
    History,
    check_fading,
    seminorm,
    seminorm_with_bound,
)
from .population import analytic_decay_oracle, build_instance, oracle_eligible, verify_hypotheses
from .reports import CheckReport
from .solver import ProblemInstance, Trajectory, solve

SEMINORM_TOL = 1e-10


def build(config: RunConfig, h=None):
    """Problem instance and selection for a run, optionally at another step."""
    h = config.solver.h if h is None else h
    problem = build_instance(config.population, h)
    selection = selection_from_spec(config.selection, problem.control, problem.dim)
    return problem, selection


def compare_on_coarse(coarse: Trajectory, fine: Trajectory) -> float:
    """Max state-norm gap at the coarse knots, left/right sides respected."""
    times, values = coarse.knots()
    sides = coarse.sides()
    right = sides == "R"
    other = np.empty_like(values)
    if np.any(~right):
        other[~right] = fine(times[~right], "L")
    if np.any(right):
        other[right] = fine(times[right], "R")
    return float(np.max(coarse.space.norms(values - other)))


@dataclass(frozen=True)
class Certification:
    problem: ProblemInstance
    trajectory: Trajectory
    fine: Trajectory
    residual: float
    richardson_C: float
    threshold: float
    reports: tuple

    @property
    def passed(self):
        return self.residual <= self.threshold and all(r.passed for r in self.reports)

    def summary(self):
        return CheckReport("certification", self.passed, details={
            "residual": self.residual, "richardson_C": self.richardson_C, "threshold": self.threshold,
            "h": self.trajectory.meta["h"], "picard_tol": self.trajectory.meta["picard_tol"]})


def certify(config: RunConfig) -> Certification:
    """Solve at ``h`` and ``h/2``; accept if residual <= picard_tol + C h^2.

    ``C = (4/3) max |y_h - y_{h/2}| / h^2`` is the Richardson estimate of the
    leading error coefficient of a second-order scheme.
    """
    h = config.solver.h
    problem, selection = build(config)
    traj = solve(problem, selection, config.solver)
    fine_problem, fine_sel = build(config, h / 2)
    fine = solve(fine_problem, fine_sel, dataclasses.replace(config.solver, h=h / 2), diagnostics=False)
    C = (4.0 / 3.0) * compare_on_coarse(traj, fine) / h ** 2
    threshold = config.solver.picard_tol + C * h ** 2
    reports = tuple(traj.meta[k] for k in ("B3", "F3", "apriori") if k in traj.meta)
    return Certification(problem, traj, fine, float(traj.meta["residual"]), C, threshold, reports)


def _sample_histories(config: RunConfig, rng):
    pc = config.population
    space = pc.space
    tau = pc.tau
    h = max(config.solver.h, tau / 200)
    out = []
    for _ in range(4):
        amp = rng.normal(0.0, 2.0, space.dim)
        rate = float(rng.uniform(0.0, 3.0))
        out.append(History.exponential(amp, rate, tau, h, space))
    return out


def seminorm_laws(config: RunConfig, rng) -> CheckReport:
    weight = config.population.weight
    hs = _sample_histories(config, rng)
    rows = []
    for i, a in enumerate(hs):
        na = seminorm(a, weight)
        lam = float(rng.uniform(-3.0, 3.0))
        rows.append({"law": "nonnegative", "i": i, "excess": -na, "ok": na >= 0})
        dev = abs(seminorm(a * lam, weight) - abs(lam) * na)
        rows.append({"law": "homogeneity", "i": i, "excess": dev, "ok": dev <= SEMINORM_TOL * max(1, na)})
        b = hs[(i + 1) % len(hs)]
        excess = seminorm(a + b, weight) - na - seminorm(b, weight)
        rows.append({"law": "triangle", "i": i, "excess": excess, "ok": excess <= SEMINORM_TOL})
    return CheckReport("seminorm_laws", all(r["ok"] for r in rows), tuple(rows))


def tail_truncation(config: RunConfig) -> CheckReport:
    """Grid-truncated tails at ``Theta in {2, 4, 8} tau`` stay within their reported bound."""
    pc = config.population
    weight = pc.weight
    h = pc.tau / 1000
    hist = History.exponential(np.ones(pc.space.dim), 0.5, pc.tau, h, pc.space)
    exact = seminorm(hist, weight)
    rows = []
    for mult in (2, 4, 8):
        approx, bound = seminorm_with_bound(hist.discretize_tail(mult * pc.tau, h), weight)
        err = abs(approx - exact)
        rows.append({"cutoff": mult * pc.tau, "error": err, "bound": bound, "ok": err <= bound + 1e-12})
    return CheckReport("tail_truncation", all(r["ok"] for r in rows), tuple(rows))


def fading(config: RunConfig) -> CheckReport:
    weight = config.population.weight
    xi = np.linspace(-3.0, 0.0, 7)
    theta = -weight.tau - np.linspace(0.5, 5.0, 6)
    return check_fading(weight, [(a, b) for a in xi for b in theta])


def evolution_laws(problem: ProblemInstance, rng, n_triples=100):
    ev = problem.evolution
    dim = problem.dim
    ts = np.sort(rng.uniform(problem.t0, problem.T, (n_triples, 3)), axis=1)[:, ::-1]
    vs = [rng.normal(0.0, 1.0, dim) for _ in range(3)]
    ident = check_identity(ev, np.linspace(problem.t0, problem.T, 5), vs)
    comp = check_composition(ev, [tuple(t) for t in ts], vs, rtol=1e-12)
    return ident, comp


def oracle_comparison(config: RunConfig, traj: Trajectory) -> CheckReport:
    oracle = analytic_decay_oracle(config.population, config.solver.h)
    err = compare_on_coarse(traj, oracle)
    tol = config.solver.picard_tol + config.solver.h ** 2
    return CheckReport("decay_oracle", err <= tol, details={"max_error": err, "tolerance": tol})


def property_suite(config: RunConfig, seed=None) -> list:
    """Every check behind ``verify``, in a fixed order."""
    rng = np.random.default_rng(config.seed if seed is None else seed)
    reports = [seminorm_laws(config, rng), tail_truncation(config), fading(config),
               verify_hypotheses(config.population, seed=config.seed if seed is None else seed)]
    try:
        problem, _ = build(config)
    except ConfigurationError as exc:
        reports.append(CheckReport("build", False, details={"error": str(exc)}))
        return reports
    reports.extend(evolution_laws(problem, rng))
    cert = certify(config)
    reports.append(cert.summary())
    reports.extend(cert.reports)
    if oracle_eligible(config.population):
        reports.append(oracle_comparison(config, cert.trajectory))
    return reports
