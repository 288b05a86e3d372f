"""Mild solutions by interval splitting and Picard iteration.

Between consecutive impulse times the mild equation

    y(t) = U(t, a) [y(a) + I(y_a)] + int_a^t U(t, s) f(s) ds,
    f(s) = g(s, y(s), int y_s) + w(s),   w(s) in Omega(y(s)),

is solved by fixed-point iteration on a uniform grid. Each interval's
solution is glued onto the past before the next interval starts, and the
jump ``y(t_k+) = y(t_k) + I_k(y_{t_k})`` is recorded exactly.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .evolution import EvolutionSystem, MultiplicationEvolution, estimate_D
from .exceptions import ConfigurationError, DomainError, IntegrabilityError, NonconvergenceError
from .inclusion import (
    ControlMultimap,
    GrowthData,
    Nonlinearity,
    SelectionStrategy,
    check_F3,
    check_membership,
)
from .phase_space import (
    FadingWeight,
    History,
    PhaseSpaceConstants,
    _interp,
    check_B3,
    history_at,
    seminorm,
    weighted_history_integral,
)
from .reports import CheckReport

logger = logging.getLogger(__name__)

_TOL = 1e-12


@dataclass(frozen=True)
class ImpulseMap:
    """``I(phi)(x) = J(int phi(theta)(x) d theta)`` for a scalar law ``J``.

    kinds: ``constant`` (``J = value``, no memory needed), ``linear``
    (``J(z) = gain * z``, unbounded), ``saturating`` (``J(z) = level *
    tanh(z / scale)``, bounded and continuous).
    """

    kind: str = "constant"
    value: float = 0.0
    gain: float = 0.0
    level: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant", "linear", "saturating"):
            raise ConfigurationError(f"unknown impulse kind {self.kind!r}", "schedule.impulses")
        if self.kind == "saturating" and not self.scale > 0:
            raise ConfigurationError("saturating impulse needs scale > 0", "schedule.impulses")

    @property
    def uses_memory(self):
        return self.kind != "constant"

    @property
    def bounded(self):
        return self.kind != "linear"

    def scalar(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind == "constant":
            return np.full_like(z, self.value)
        if self.kind == "linear":
            return self.gain * z
        return self.level * np.tanh(z / self.scale)

    def __call__(self, history: History):
        if not self.uses_memory:
            return np.full(history.dim, float(self.value))
        return self.scalar(weighted_history_integral(history))


@dataclass(frozen=True)
class ImpulseSchedule:
    times: tuple = ()
    impulses: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "impulses", tuple(self.impulses))
        if len(self.times) != len(self.impulses):
            raise ConfigurationError("one impulse map per impulse time is required", "schedule.impulses")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ConfigurationError("impulse times must be strictly increasing", "schedule.times")

    @property
    def m(self):
        return len(self.times)


@dataclass(frozen=True)
class JumpRecord:
    t: float
    left: np.ndarray
    right: np.ndarray
    impulse: np.ndarray


class Trajectory:
    """Piecewise-continuous path on ``[t0, T]`` together with its initial history.

    ``segments[k]`` holds the grid and values on the closed interval
    ``[t_k, t_{k+1}]``; its first value is the right limit after the jump at
    ``t_k``. Concatenating segments therefore duplicates every impulse time,
    left value first.
    """

    def __init__(self, initial_history: History, t0, segments=(), jump_records=(), meta=None):
        self.initial_history = initial_history
        self.t0 = float(t0)
        self.segments = tuple((np.asarray(ts, float), np.asarray(vs, float)) for ts, vs in segments)
        self.jump_records = tuple(jump_records)
        self.meta = dict(meta or {})
        self._knots = None

    @property
    def T(self):
        return float(self.segments[-1][0][-1]) if self.segments else self.t0

    @property
    def tau(self):
        return self.initial_history.tau

    @property
    def dim(self):
        return self.initial_history.dim

    @property
    def space(self):
        return self.initial_history.space

    def knots(self):
        if self._knots is None:
            if not self.segments:
                times = np.array([self.t0])
                values = self.initial_history.values[-1:].copy()
            else:
                times = np.concatenate([ts for ts, _ in self.segments])
                values = np.concatenate([vs for _, vs in self.segments])
            times.setflags(write=False)
            values.setflags(write=False)
            self._knots = (times, values)
        return self._knots

    def sides(self):
        """'L'/'R' at impulse rows, '' elsewhere (aligned with :meth:`knots`)."""
        times, _ = self.knots()
        out = np.full(times.size, "", dtype=object)
        dup = np.flatnonzero(np.diff(times) == 0)
        out[dup] = "L"
        out[dup + 1] = "R"
        return out

    def __call__(self, t, side="L"):
        times, values = self.knots()
        q = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(q < self.t0 - _TOL) or np.any(q > self.T + _TOL):
            raise DomainError("evaluation time outside [t0, T]")
        out = _interp(times, values, q, side)
        return out[0] if np.ndim(t) == 0 else out

    @property
    def max_spacing(self):
        if not self.segments:
            return 0.0
        return max(float(np.max(np.diff(ts))) for ts, _ in self.segments)

    def with_meta(self, **kw):
        out = Trajectory(self.initial_history, self.t0, self.segments, self.jump_records, self.meta)
        out.meta.update(kw)
        return out

    def __repr__(self):
        return (f"Trajectory(t0={self.t0}, T={self.T}, dim={self.dim}, "
                f"segments={len(self.segments)}, jumps={len(self.jump_records)})")


@dataclass(frozen=True)
class SolverConfig:
    h: float = 1e-3
    picard_tol: float = 1e-10
    max_iters: int = 200
    quadrature: str = "trapezoid"
    tail_cutoff: float | None = None
    eps_tail: float = 1e-8
    check_samples: int = 11

    def __post_init__(self):
        if not self.h > 0:
            raise ConfigurationError("h must be positive", "solver.h")
        if not self.picard_tol > 0:
            raise ConfigurationError("picard_tol must be positive", "solver.picard_tol")
        if int(self.max_iters) < 1:
            raise ConfigurationError("max_iters must be >= 1", "solver.max_iters")
        if self.quadrature != "trapezoid":
            raise ConfigurationError("only the trapezoid rule is available", "solver.quadrature")


@dataclass(frozen=True)
class ProblemInstance:
    """Everything needed to define one impulsive inclusion with infinite delay."""

    t0: float
    T: float
    schedule: ImpulseSchedule
    initial_history: History
    evolution: EvolutionSystem
    nonlinearity: Nonlinearity
    control: ControlMultimap
    weight: FadingWeight
    constants: PhaseSpaceConstants
    growth: GrowthData | None = None
    name: str = ""
    fingerprint: str = ""

    def __post_init__(self):
        if not self.T > self.t0:
            raise ConfigurationError("T must exceed t0", "schedule.T")
        for t in self.schedule.times:
            if not self.t0 < t < self.T:
                raise ConfigurationError(f"impulse time {t!r} is not inside ({self.t0!r}, {self.T!r})",
                                         "schedule.times")
        if abs(self.initial_history.tau - self.weight.tau) > _TOL:
            raise ConfigurationError("initial history and weight disagree on tau", "phase_space.tau")
        ev = self.evolution
        if ev.t0 > self.t0 + _TOL or ev.T < self.T - _TOL:
            raise ConfigurationError("evolution system does not cover [t0, T]", "evolution")
        if isinstance(ev, MultiplicationEvolution) and ev.dim != self.initial_history.dim:
            raise ConfigurationError("evolution and history dimensions differ", "evolution")

    @property
    def space(self):
        return self.initial_history.space

    @property
    def dim(self):
        return self.initial_history.dim

    @property
    def bounds(self):
        return (self.t0, *self.schedule.times, self.T)

    @property
    def f3_compliant(self):
        return self.growth is not None


def interval_grid(a, b, h):
    n = max(1, math.ceil((b - a) / h - 1e-9))
    grid = np.linspace(a, b, n + 1)
    grid[0], grid[-1] = a, b
    return grid


def initial_trajectory(problem: ProblemInstance) -> Trajectory:
    """The trajectory known before any interval is solved: just the initial history."""
    return Trajectory(problem.initial_history, problem.t0)


class _IntervalOperator:
    """Solution operator of one interval with everything independent of ``q`` precomputed."""

    def __init__(self, k, xi: Trajectory, selection: SelectionStrategy, problem: ProblemInstance,
                 cfg: SolverConfig):
        bounds = problem.bounds
        if not 1 <= k <= len(bounds) - 1:
            raise ConfigurationError(f"interval index {k} out of range")
        a, b = bounds[k - 1], bounds[k]
        if abs(xi.T - a) > _TOL:
            raise ConfigurationError(f"prior solution ends at {xi.T!r}, interval {k} starts at {a!r}")
        self.k, self.a, self.b = k, a, b
        self.problem = problem
        self.selection = selection
        self.space = problem.space
        self.grid = interval_grid(a, b, cfg.h)
        self.half = 0.5 * np.diff(self.grid)[:, None]

        hist_a = history_at(xi, a) if (k > 1 or problem.nonlinearity.uses_memory) else None
        left = xi(a) if k > 1 else problem.initial_history.values[-1].copy()
        if k > 1:
            imp = np.asarray(problem.schedule.impulses[k - 2](hist_a), dtype=float)
            start = left + imp
        else:
            imp = None
            start = left
        self.left, self.impulse, self.start = left, imp, start
        self.Q_a = weighted_history_integral(hist_a) if problem.nonlinearity.uses_memory else None

        B = problem.evolution.cumulative(self.grid) if isinstance(problem.evolution, MultiplicationEvolution) \
            else None
        if B is None:
            raise ConfigurationError("only multiplication evolutions are supported by the solver")
        self.B = B - B[0]
        self.decay = np.exp(-(self.B[1:] - self.B[:-1]))
        self.base = np.exp(-self.B) * start[None, :]
        self.base[0] = start
        span = float(np.max(self.B[-1] - self.B[0])) if self.B.size else 0.0
        self._vectorized = span < 300.0 and bool(np.all(np.diff(self.B, axis=0) >= 0))

    def history_integrals(self, q):
        if self.Q_a is None:
            return np.zeros_like(q)
        inc = self.half * (q[1:] + q[:-1])
        return self.Q_a[None, :] + np.vstack([np.zeros((1, q.shape[1])), np.cumsum(inc, axis=0)])

    def integrand(self, q):
        nl = self.problem.nonlinearity
        Q = self.history_integrals(q)
        f = np.asarray(nl.g(self.grid[:, None], q, Q), dtype=float) * np.ones_like(q)
        return f + self.selection.controls(self.grid, q, self.space)

    def convolve(self, f):
        """Trapezoid values of ``int_a^t U(t, s) f(s) ds`` at every node."""
        n = self.grid.size
        out = np.zeros_like(f)
        if self._vectorized:
            w = np.zeros((n, 1))
            w[:-1] += self.half
            w[1:] += self.half
            grow = np.exp(self.B)
            acc = np.cumsum(w * grow * f, axis=0)
            # node j carries weight half[j-1], not the full interior weight
            out[1:] = np.exp(-self.B[1:]) * (acc[:-1] + self.half * grow[1:] * f[1:])
            return out
        for j in range(n - 1):
            out[j + 1] = self.decay[j] * (out[j] + self.half[j] * f[j]) + self.half[j] * f[j + 1]
        return out

    def __call__(self, q):
        q = np.asarray(q, dtype=float)
        if q.shape != (self.grid.size, self.space.dim):
            raise ConfigurationError(f"iterate has shape {q.shape}, grid needs "
                                     f"{(self.grid.size, self.space.dim)}")
        out = self.base + self.convolve(self.integrand(q))
        out[0] = self.start
        return out


def gamma_apply(k, q, xi, selection, problem, cfg):
    """One application of the interval-``k`` solution operator to ``q``."""
    return _IntervalOperator(k, xi, selection, problem, cfg)(q)


@dataclass(frozen=True)
class IntervalSolution:
    k: int
    times: np.ndarray
    values: np.ndarray
    iterations: int
    last_diff: float
    left: np.ndarray
    impulse: np.ndarray | None


def solve_interval(k, xi, selection, problem, cfg) -> IntervalSolution:
    op = _IntervalOperator(k, xi, selection, problem, cfg)
    q = op.base.copy()
    diff = math.inf
    for it in range(1, int(cfg.max_iters) + 1):
        q_new = op(q)
        diff = float(np.max(op.space.norms(q_new - q)))
        q = q_new
        if diff <= cfg.picard_tol:
            check_membership(problem.control, selection, op.grid, q, op.space)
            return IntervalSolution(k, op.grid, q, it, diff, op.left, op.impulse)
    raise NonconvergenceError(k, diff, int(cfg.max_iters))


def glue(q: IntervalSolution | tuple, xi: Trajectory, impulse=None) -> Trajectory:
    """Extend ``xi`` by the interval function ``q``; record the jump at the seam.

    ``q`` is an :class:`IntervalSolution` or a ``(times, values)`` pair. When an
    impulse is given, the right value at the seam is set to ``left + impulse``.
    """
    if isinstance(q, IntervalSolution):
        times, values = q.times, q.values
        if impulse is None:
            impulse = q.impulse
    else:
        times, values = q
    times = np.asarray(times, dtype=float)
    values = np.array(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    a = float(times[0])
    if abs(a - xi.T) > _TOL:
        raise ConfigurationError("interval does not abut the prior solution")
    records = list(xi.jump_records)
    left = xi(a)
    if impulse is not None and xi.segments:
        impulse = np.asarray(impulse, dtype=float)
        right = left + impulse
        values[0] = right
        records.append(JumpRecord(a, left.copy(), right.copy(), impulse.copy()))
    elif not xi.segments:
        values[0] = xi.initial_history.values[-1]
    return Trajectory(xi.initial_history, xi.t0, xi.segments + ((times, values),), records, xi.meta)


def solve(problem: ProblemInstance, selection: SelectionStrategy | None = None,
          cfg: SolverConfig | None = None, diagnostics=True) -> Trajectory:
    """Solve interval by interval and glue; attach residual and axiom reports."""
    cfg = cfg or SolverConfig()
    selection = selection or SelectionStrategy("zero")
    traj = initial_trajectory(problem)
    iterations = []
    for k in range(1, len(problem.bounds)):
        sol = solve_interval(k, traj, selection, problem, cfg)
        traj = glue(sol, traj)
        iterations.append(sol.iterations)
        logger.debug("interval %d: %d iterations, last diff %.3e", k, sol.iterations, sol.last_diff)
    traj = traj.with_meta(selection=selection.label, iterations=tuple(iterations), h=cfg.h,
                          picard_tol=cfg.picard_tol)
    if diagnostics:
        traj = traj.with_meta(**diagnose(traj, selection, problem, cfg))
    return traj


def diagnose(traj, selection, problem, cfg):
    samples = np.linspace(problem.t0, problem.T, max(2, cfg.check_samples))
    out = {
        "residual": residual(traj, selection, problem),
        "B3": check_B3(traj, problem.constants, problem.weight, samples),
    }
    if problem.growth is not None:
        f3_samples = [(t, traj(t), history_at(traj, t)) for t in samples]
        out["F3"] = check_F3(problem.nonlinearity, problem.control, problem.growth, f3_samples,
                             problem.weight, strategies=[selection])
        bounds = apriori_radius(problem, 1, cfg)
        wn = weighted_sup_norm(traj, bounds.N1, problem.t0, problem.bounds[1])
        out["apriori"] = CheckReport(
            "apriori", wn <= bounds.r + cfg.picard_tol,
            details={"N1": bounds.N1, "ell1": bounds.ell1, "C1": bounds.C1, "r": bounds.r,
                     "K1": bounds.K1, "M1": bounds.M1, "D": bounds.D, "weighted_norm": wn})
    else:
        out["F3"] = CheckReport("F3", True, details={"status": "not claimed: no growth bound"})
    return out


def _integrand_at_knots(traj, selection, problem):
    times, values = traj.knots()
    dt = np.diff(times)
    nl = problem.nonlinearity
    if nl.uses_memory:
        q0 = weighted_history_integral(traj.initial_history)
        inc = 0.5 * dt[:, None] * (values[1:] + values[:-1])
        Q = q0[None, :] + np.vstack([np.zeros((1, traj.dim)), np.cumsum(inc, axis=0)])
    else:
        Q = np.zeros_like(values)
    f = np.asarray(nl.g(times[:, None], values, Q), dtype=float) * np.ones_like(values)
    return f + selection.controls(times, values, traj.space)


def residual(traj: Trajectory, selection: SelectionStrategy, problem: ProblemInstance) -> float:
    """Sup over knots of the defect in the mild equation, recomputed from scratch.

    At the right copy of an impulse time the impulse itself is included,
    matching the limit ``t -> t_k+``.
    """
    ev = problem.evolution
    times, values = traj.knots()
    sides = traj.sides()
    f = _integrand_at_knots(traj, selection, problem)
    B = ev.cumulative(times)
    n, dim = values.shape
    dt = np.diff(times)
    wfull = np.zeros(n)
    wfull[:-1] += 0.5 * dt
    wfull[1:] += 0.5 * dt
    impulses = []
    for tk, imap in zip(problem.schedule.times, problem.schedule.impulses):
        impulses.append((tk, np.asarray(imap(history_at(traj, tk)), dtype=float)))
    y0 = values[0]
    worst = 0.0
    chunk = max(1, 2_000_000 // max(1, n * dim))
    for lo in range(0, n, chunk):
        rows = np.arange(lo, min(n, lo + chunk))
        expo = B[rows][:, None, :] - B[None, :, :]
        mask = np.arange(n)[None, :] <= rows[:, None]
        kern = np.where(mask[:, :, None], np.exp(-np.where(mask[:, :, None], expo, 0.0)), 0.0)
        w = np.where(mask, wfull[None, :], 0.0)
        # last node of each prefix only carries the left half-panel
        w[np.arange(rows.size), rows] = np.where(rows > 0, 0.5 * dt[np.maximum(rows - 1, 0)], 0.0)
        integral = np.einsum("rp,rpd,pd->rd", w, kern, f)
        pred = np.exp(-(B[rows] - B[0])) * y0 + integral
        for tk, imp in impulses:
            after = (times[rows] > tk) | ((times[rows] == tk) & (sides[rows] == "R"))
            if np.any(after):
                fac = np.exp(-(B[rows] - ev.cumulative([tk])[0]))
                pred[after] += fac[after] * imp
        worst = max(worst, float(np.max(traj.space.norms(values[rows] - pred))))
    return worst


@dataclass(frozen=True)
class AprioriBounds:
    N1: float
    ell1: float
    C1: float
    r: float
    K1: float
    M1: float
    D: float
    alpha_l1: float

    def __post_init__(self):
        if not self.ell1 < 1:
            raise ConfigurationError("contraction factor must be < 1")


def contraction_factor(N1, times, alpha_values, D, K1):
    """``max_t D (1 + K1) int_{t0}^t exp(-N1 (t - s)) alpha(s) ds`` for piecewise-linear alpha.

    Each panel is integrated in closed form, so constant alpha gives the
    exact value ``D (1 + K1) alpha (1 - exp(-N1 L)) / N1``.
    """
    times = np.asarray(times, dtype=float)
    al = np.asarray(alpha_values, dtype=float)
    J = 0.0
    best = 0.0
    for j in range(times.size - 1):
        d = times[j + 1] - times[j]
        E = math.exp(-N1 * d)
        one_minus = -math.expm1(-N1 * d)
        lin = d / N1 - one_minus / N1 ** 2
        panel = al[j] * one_minus / N1 + (al[j + 1] - al[j]) / d * lin
        J = E * J + panel
        best = max(best, J)
    return float(D * (1.0 + K1) * best)


def apriori_radius(problem: ProblemInstance, k=1, cfg: SolverConfig | None = None) -> AprioriBounds:
    """Radius of the weighted-norm ball mapped into itself on the first interval."""
    if k != 1:
        raise ConfigurationError("the a priori radius is computed for the first interval only")
    if problem.growth is None:
        raise ConfigurationError("no sublinear growth bound available for this problem")
    cfg = cfg or SolverConfig()
    t0, t1 = problem.bounds[0], problem.bounds[1]
    grid = interval_grid(t0, t1, cfg.h)
    alpha = np.array([problem.growth.alpha(t) for t in grid], dtype=float)
    if not np.all(np.isfinite(alpha)) or np.any(alpha < 0):
        raise IntegrabilityError("alpha must be finite and nonnegative on the interval")
    D = estimate_D(problem.evolution, grid)
    K1 = max(float(problem.constants.K(s - t0)) for s in grid)
    M1 = max(float(problem.constants.M(s - t0)) for s in grid)
    return apriori_from_constants(alpha, grid, D, K1, M1,
                                  problem.space.norm(problem.initial_history.values[-1]),
                                  seminorm(problem.initial_history, problem.weight))


def apriori_from_constants(alpha, grid, D, K1, M1, phi0_norm, phi_seminorm) -> AprioriBounds:
    alpha_l1 = float(np.trapezoid(alpha, grid))
    N1 = 1.0
    ell = contraction_factor(N1, grid, alpha, D, K1)
    while ell >= 0.5:
        N1 *= 2.0
        if N1 > 2.0 ** 60:
            raise IntegrabilityError("no weight rate makes the contraction factor < 1/2")
        ell = contraction_factor(N1, grid, alpha, D, K1)
    C1 = D * phi0_norm + D * alpha_l1 + D * M1 * alpha_l1 * phi_seminorm
    return AprioriBounds(N1, ell, float(C1), float(C1 / (1.0 - ell)), K1, M1, D, alpha_l1)


def weighted_sup_norm(traj: Trajectory, N1, t0, t1) -> float:
    """``max_{t0 <= t <= t1} exp(-N1 (t - t0)) |y(t)|`` over the first segment."""
    ts, vs = traj.segments[0]
    keep = ts <= t1 + _TOL
    return float(np.max(np.exp(-N1 * (ts[keep] - t0)) * traj.space.norms(vs[keep])))


def q_slot_lipschitz(nl: Nonlinearity) -> float:
    """Lipschitz constant of ``g`` in its history-integral argument."""
    if not nl.uses_memory:
        return 0.0
    if "kappa" in nl.params:
        return abs(float(nl.params["kappa"]))
    raise ConfigurationError(f"no q-slot Lipschitz constant known for {nl.name!r}")


def tail_mass(history: History, cut) -> float:
    """State norm of ``int_{-inf}^{-cut} |phi(theta)| d theta`` for an exact exponential tail."""
    beyond = history.beyond
    if not getattr(beyond, "exact", False):
        raise IntegrabilityError("tail mass needs an exact tail descriptor")
    if cut < history.beyond_start:
        raise ConfigurationError("cut must lie beyond the stored grid")
    absolute = type(beyond)(np.abs(beyond.amplitude), beyond.rate, beyond.cutoff)
    return float(history.space.norm(absolute.integral(cut)))


def fading_sensitivity_bound(problem: ProblemInstance, cut, D=None) -> float:
    """Bound on ``sup |y - y~|`` when the initial history is zeroed beyond ``-cut``.

    Gronwall on ``|e(t)| <= D L int (m + int |e|)`` gives
    ``D L m (T - t0) exp(D L (T - t0)^2)`` with ``m`` the removed tail mass.
    """
    if problem.schedule.m:
        raise ConfigurationError("the sensitivity bound is stated for impulse-free problems")
    L = q_slot_lipschitz(problem.nonlinearity)
    if D is None:
        D = estimate_D(problem.evolution, problem.evolution.times)
    span = problem.T - problem.t0
    m = tail_mass(problem.initial_history, cut)
    return float(D * L * m * span * math.exp(D * L * span ** 2))


def with_initial_history(problem: ProblemInstance, history: History) -> ProblemInstance:
    return dataclasses.replace(problem, initial_history=history)
