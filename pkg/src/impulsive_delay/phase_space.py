"""Histories in the fading-memory phase space and their seminorms.

A history is a function on ``(-inf, 0]``. It is stored as a piecewise-linear
path on a finite knot set ``[-S, 0]`` (``S >= tau``) plus a description of
what happens beyond ``-S``: either an exact exponential descriptor or a
certified sup-bound.

Jumps are stored as duplicated knots: the first copy holds the left limit,
the second the right limit. Evaluation at a jump point returns the left
limit, so every history is left-continuous.

The seminorm is the sum of

* the window part ``(1/tau) * int_{-tau}^0 |phi|``, and
* the weighted tail ``int_{-inf}^{-tau} rho |phi|`` with ``rho = exp(mu theta)``.

Both are evaluated by the composite trapezoid rule on the stored knots, so
panels never straddle a jump.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .exceptions import ConfigurationError, DomainError, IntegrabilityError
from .reports import CheckReport

_TOL = 1e-12


@dataclass(frozen=True)
class StateSpace:
    """Discretized state space ``E`` with norm ``sqrt(sum w v^2)``."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.size == 0 or np.any(w <= 0):
            raise ConfigurationError("quadrature weights must be positive")
        object.__setattr__(self, "weights", w)

    @classmethod
    def euclidean(cls, dim):
        return cls(np.ones(dim))

    @classmethod
    def l2_unit_interval(cls, n):
        """Trapezoid weights for ``L^2([0, 1])`` sampled at ``n`` uniform nodes."""
        if n == 1:
            return cls(np.ones(1))
        dx = 1.0 / (n - 1)
        w = np.full(n, dx)
        w[0] = w[-1] = dx / 2
        return cls(w)

    @property
    def dim(self):
        return self.weights.size

    def norm(self, v):
        v = np.asarray(v, dtype=float)
        return float(np.sqrt(np.dot(self.weights, v * v)))

    def norms(self, V):
        V = np.asarray(V, dtype=float)
        return np.sqrt((V * V) @ self.weights)

    def ones_norm(self):
        return float(np.sqrt(self.weights.sum()))

    def __eq__(self, other):
        return isinstance(other, StateSpace) and np.array_equal(self.weights, other.weights)

    def __hash__(self):
        return hash(self.weights.tobytes())


@dataclass(frozen=True)
class FadingWeight:
    """Exponential weight ``rho(theta) = exp(mu theta)`` on ``(-inf, -tau)``.

    ``p_rate`` parametrizes the shift bound ``P(xi) = exp(p_rate xi)``; it
    defaults to ``mu``, for which the fading inequality holds with equality.
    """

    tau: float
    mu: float = 1.0
    p_rate: float | None = None

    def __post_init__(self):
        if not self.tau > 0:
            raise ConfigurationError("tau must be positive", "phase_space.tau")
        if not self.mu > 0:
            raise ConfigurationError("mu must be positive for a finite tail mass", "phase_space.mu")
        if self.p_rate is None:
            object.__setattr__(self, "p_rate", float(self.mu))

    def rho(self, theta):
        return np.exp(self.mu * np.asarray(theta, dtype=float))

    def p_bound(self, xi):
        return np.exp(self.p_rate * np.asarray(xi, dtype=float))

    def tail_mass(self, cutoff):
        """``int_{-inf}^{-cutoff} rho``."""
        return math.exp(-self.mu * cutoff) / self.mu

    def default_cutoff(self, eps_tail=1e-8):
        # tail_mass(cutoff) = eps_tail * tail_mass(tau)
        return self.tau + math.log(1.0 / eps_tail) / self.mu


@dataclass(frozen=True)
class ExponentialTail:
    """``phi(theta) = amplitude * exp(rate * theta)`` for ``theta > -cutoff``, zero below."""

    amplitude: np.ndarray
    rate: float = 0.0
    cutoff: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "amplitude", np.atleast_1d(np.asarray(self.amplitude, dtype=float)))

    exact = True

    def value(self, theta):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        out = np.exp(self.rate * theta)[:, None] * self.amplitude[None, :]
        out[theta < -self.cutoff] = 0.0
        return out

    def shifted(self, s):
        return ExponentialTail(self.amplitude * math.exp(self.rate * s), self.rate, self.cutoff + s)

    def scaled(self, alpha):
        return ExponentialTail(self.amplitude * alpha, self.rate, self.cutoff)

    def truncated(self, cut):
        return ExponentialTail(self.amplitude, self.rate, min(self.cutoff, cut))

    def _exp_integral(self, kappa, start):
        # int_{-cutoff}^{-start} exp(kappa theta) d theta
        if self.cutoff <= start:
            return 0.0
        if math.isinf(self.cutoff):
            if kappa <= 0:
                raise IntegrabilityError(
                    f"tail exp({kappa:g} theta) is not integrable on (-inf, {-start:g}]"
                )
            return math.exp(-kappa * start) / kappa
        if kappa == 0:
            return self.cutoff - start
        return math.exp(-kappa * start) * -math.expm1(-kappa * (self.cutoff - start)) / kappa

    def weighted_norm_integral(self, start, weight, space):
        a = space.norm(self.amplitude)
        if a == 0.0:
            return 0.0
        return a * self._exp_integral(weight.mu + self.rate, start)

    def integral(self, start):
        if not np.any(self.amplitude):
            return np.zeros_like(self.amplitude)
        return self.amplitude * self._exp_integral(self.rate, start)

    def sup_beyond(self, cutoff, space):
        if cutoff >= self.cutoff:
            return 0.0
        a = space.norm(self.amplitude)
        if a == 0.0:
            return 0.0
        if self.rate < 0:
            return math.inf
        return a * math.exp(-self.rate * cutoff)


@dataclass(frozen=True)
class BoundedTail:
    """Unknown values beyond the grid with ``|phi(theta)| <= sup_bound * exp(decay (theta + start))``."""

    sup_bound: float
    decay: float = 0.0

    def __post_init__(self):
        if not self.sup_bound >= 0:
            raise ConfigurationError("tail sup-bound must be nonnegative")
        if self.decay < 0:
            raise ConfigurationError("tail decay must be nonnegative")

    exact = False

    def shifted(self, s):
        return self

    def scaled(self, alpha):
        return BoundedTail(self.sup_bound * abs(alpha), self.decay)

    def truncated(self, cut):
        return BoundedTail(0.0, self.decay)

    def weighted_norm_bound(self, start, weight):
        if self.sup_bound == 0.0:
            return 0.0
        return self.sup_bound * math.exp(-weight.mu * start) / (weight.mu + self.decay)

    def integral_bound(self):
        if self.sup_bound == 0.0:
            return 0.0
        if self.decay == 0.0:
            return math.inf
        return self.sup_bound / self.decay


Beyond = Union[ExponentialTail, BoundedTail]


@dataclass(frozen=True)
class Jump:
    theta: float
    left: np.ndarray
    right: np.ndarray

    @property
    def height(self):
        return self.right - self.left


def _jumps(theta, values):
    dup = np.flatnonzero(np.diff(theta) == 0)
    return [Jump(float(theta[i]), values[i].copy(), values[i + 1].copy()) for i in dup]


@dataclass(frozen=True)
class RecentSegment:
    """The window ``[-tau, 0]`` in duplicated-knot form."""

    theta: np.ndarray
    values: np.ndarray
    space: StateSpace

    @property
    def tau(self):
        return -float(self.theta[0]) if self.theta.size else 0.0

    @property
    def grid(self):
        return np.unique(self.theta)

    @property
    def jumps(self):
        return _jumps(self.theta, self.values)

    @property
    def max_spacing(self):
        g = self.grid
        return float(np.max(np.diff(g))) if g.size > 1 else 0.0


@dataclass(frozen=True)
class TailRepresentation:
    """Knots on ``[-start, -tau]`` plus the part beyond ``-start``."""

    theta: np.ndarray
    values: np.ndarray
    beyond: Beyond
    tau: float
    space: StateSpace

    @property
    def start(self):
        return -float(self.theta[0])

    @property
    def mode(self):
        return "analytic" if self.beyond.exact else "grid-truncated"


@dataclass(frozen=True)
class PhaseSpaceConstants:
    """The functions ``K``, ``M`` and the scalar ``H`` of the phase-space axioms."""

    K: Callable[[float], float]
    M: Callable[[float], float]
    H: float = 2.0

    def __post_init__(self):
        if not self.H > 0:
            raise ConfigurationError("H must be positive", "phase_space.H")

    @classmethod
    def calibrated(cls, weight: FadingWeight, H=2.0):
        """Default calibration for the exponential weight.

        The computed part of ``y_t`` costs at most ``(1 + tail_mass(tau))`` times
        its sup; one extra unit absorbs quadrature effects. The shifted initial
        history costs at most ``max(P(0), 1 + tau * rho(-tau))`` times its seminorm.
        """
        k = 2.0 + weight.tail_mass(weight.tau)
        m = max(float(weight.p_bound(0.0)), 1.0 + weight.tau * float(weight.rho(-weight.tau)))
        return cls(K=lambda s, k=k: k, M=lambda s, m=m: m, H=H)


class History:
    """An element of the fading-memory phase space.

    Parameters
    ----------
    theta : array of shape (n,)
        Nondecreasing knots with ``theta[0] <= -tau`` and ``theta[-1] == 0``.
        A value may appear twice to mark a jump.
    values : array of shape (n, dim)
    tau : float
    beyond : ExponentialTail or BoundedTail
        Values for ``theta < theta[0]``.
    space : StateSpace, optional
        Defaults to the Euclidean norm.
    """

    def __init__(self, theta, values, tau, beyond, space=None):
        theta = np.array(theta, dtype=float).reshape(-1)
        values = np.array(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if theta.size == 0:
            raise ConfigurationError("history grid is empty")
        if values.shape[0] != theta.size:
            raise ConfigurationError("history values do not match the grid")
        if np.any(np.diff(theta) < 0):
            raise ConfigurationError("history grid must be sorted")
        if abs(theta[-1]) > _TOL:
            raise ConfigurationError("history grid must end at theta = 0")
        if theta[0] > -tau + _TOL:
            raise ConfigurationError("history grid must cover [-tau, 0]")
        theta[-1] = 0.0
        if space is None:
            space = StateSpace.euclidean(values.shape[1])
        if space.dim != values.shape[1]:
            raise ConfigurationError("state dimension mismatch")
        if isinstance(beyond, ExponentialTail) and beyond.amplitude.size != values.shape[1]:
            raise ConfigurationError("tail descriptor dimension mismatch")
        if not np.any(np.abs(theta + tau) <= _TOL):
            theta, values = _insert_knot(theta, values, -tau)
        self.theta = theta
        self.values = values
        self.tau = float(tau)
        self.beyond = beyond
        self.space = space
        self.theta.setflags(write=False)
        self.values.setflags(write=False)

    # construction helpers

    @classmethod
    def exponential(cls, amplitude, rate, tau, h, space=None):
        """``phi(theta) = amplitude * exp(rate theta)``, window sampled at spacing <= h."""
        amplitude = np.atleast_1d(np.asarray(amplitude, dtype=float))
        n = max(1, math.ceil(tau / h - 1e-9))
        theta = np.linspace(-tau, 0.0, n + 1)
        values = np.exp(rate * theta)[:, None] * amplitude[None, :]
        return cls(theta, values, tau, ExponentialTail(amplitude, rate), space)

    @classmethod
    def constant(cls, value, tau, h, space=None):
        return cls.exponential(value, 0.0, tau, h, space)

    @classmethod
    def zeros(cls, dim, tau, h=None, space=None):
        theta = np.array([-tau, 0.0])
        return cls(theta, np.zeros((2, dim)), tau, ExponentialTail(np.zeros(dim)), space)

    @classmethod
    def from_samples(cls, theta, values, tau, sup_bound=0.0, decay=0.0, space=None):
        """Grid-truncated history; ``sup_bound`` certifies the unseen part."""
        return cls(theta, values, tau, BoundedTail(sup_bound, decay), space)

    # views

    @property
    def dim(self):
        return self.values.shape[1]

    @property
    def beyond_start(self):
        return -float(self.theta[0])

    @property
    def _split(self):
        lo = int(np.searchsorted(self.theta, -self.tau - _TOL, side="left"))
        hi = int(np.searchsorted(self.theta, -self.tau + _TOL, side="right"))
        return lo, hi

    @property
    def recent(self):
        lo, _ = self._split
        return RecentSegment(self.theta[lo:], self.values[lo:], self.space)

    @property
    def tail(self):
        _, hi = self._split
        return TailRepresentation(self.theta[:hi], self.values[:hi], self.beyond, self.tau, self.space)

    @property
    def jumps(self):
        return _jumps(self.theta, self.values)

    def __call__(self, theta, side="L"):
        return self.evaluate(theta, side)

    def evaluate(self, theta, side="L"):
        """Value at ``theta``; ``side='R'`` returns right limits at jumps."""
        scalar = np.ndim(theta) == 0
        q = np.atleast_1d(np.asarray(theta, dtype=float))
        if np.any(q > _TOL):
            raise DomainError("histories live on theta <= 0")
        out = np.empty((q.size, self.dim))
        inside = q >= self.theta[0] - _TOL
        if np.any(inside):
            out[inside] = _interp(self.theta, self.values, q[inside], side)
        if np.any(~inside):
            if not self.beyond.exact:
                raise DomainError("history values beyond the grid are only bounded, not known")
            out[~inside] = self.beyond.value(q[~inside])
        return out[0] if scalar else out

    # algebra on histories sharing a grid

    def _check_compatible(self, other):
        if not isinstance(other, History):
            return NotImplemented
        if (
            self.tau != other.tau
            or self.theta.shape != other.theta.shape
            or not np.array_equal(self.theta, other.theta)
            or self.space != other.space
        ):
            raise ConfigurationError("histories must share grid, tau and state space")
        return True

    def _combine_beyond(self, other, sign):
        a, b = self.beyond, other.beyond
        if (
            isinstance(a, ExponentialTail)
            and isinstance(b, ExponentialTail)
            and a.rate == b.rate
            and a.cutoff == b.cutoff
        ):
            return ExponentialTail(a.amplitude + sign * b.amplitude, a.rate, a.cutoff)
        start = self.beyond_start
        sup = _sup_of(a, start, self.space) + _sup_of(b, start, self.space)
        decay = min(_decay_of(a), _decay_of(b))
        return BoundedTail(sup, decay)

    def __add__(self, other):
        if self._check_compatible(other) is NotImplemented:
            return NotImplemented
        return History(self.theta.copy(), self.values + other.values, self.tau,
                       self._combine_beyond(other, 1.0), self.space)

    def __sub__(self, other):
        if self._check_compatible(other) is NotImplemented:
            return NotImplemented
        return History(self.theta.copy(), self.values - other.values, self.tau,
                       self._combine_beyond(other, -1.0), self.space)

    def __mul__(self, alpha):
        alpha = float(alpha)
        return History(self.theta.copy(), self.values * alpha, self.tau,
                       self.beyond.scaled(alpha), self.space)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def truncated(self, cut):
        """Copy with ``phi(theta) = 0`` for ``theta < -cut`` (``cut >= tau``)."""
        if cut < self.tau:
            raise ConfigurationError("truncation point must lie beyond the window")
        if cut >= self.beyond_start:
            return History(self.theta.copy(), self.values.copy(), self.tau,
                           self.beyond.truncated(cut), self.space)
        theta, values = _insert_knot(self.theta, self.values, -cut)
        i = int(np.searchsorted(theta, -cut, side="left"))
        theta = np.concatenate([[-cut], theta[i:]])
        values = np.concatenate([np.zeros((1, self.dim)), values[i:]])
        return History(theta, values, self.tau, ExponentialTail(np.zeros(self.dim)), self.space)

    def discretize_tail(self, cutoff, h):
        """Sample an exact tail on ``[-cutoff, -start]`` and replace the rest by a sup-bound."""
        if not self.beyond.exact:
            raise ConfigurationError("tail is already grid-truncated")
        start = self.beyond_start
        if cutoff <= start:
            raise ConfigurationError("cutoff must lie beyond the stored grid")
        n = max(1, math.ceil((cutoff - start) / h - 1e-9))
        grid = np.linspace(-cutoff, -start, n + 1)[:-1]
        vals = self.beyond.value(grid)
        theta = np.concatenate([grid, self.theta])
        values = np.concatenate([vals, self.values])
        sup = self.beyond.sup_beyond(cutoff, self.space)
        return History(theta, values, self.tau, BoundedTail(sup), self.space)

    def __repr__(self):
        return (f"History(dim={self.dim}, tau={self.tau}, knots={self.theta.size}, "
                f"beyond={type(self.beyond).__name__})")


def _sup_of(beyond, start, space):
    if isinstance(beyond, BoundedTail):
        return beyond.sup_bound
    return beyond.sup_beyond(start, space)


def _decay_of(beyond):
    if isinstance(beyond, BoundedTail):
        return beyond.decay
    return max(beyond.rate, 0.0)


def _insert_knot(theta, values, at):
    i = int(np.searchsorted(theta, at))
    v = _interp(theta, values, np.array([at]), "L")
    return np.insert(theta, i, at), np.insert(values, i, v[0], axis=0)


def _interp(theta, values, q, side):
    """Piecewise-linear evaluation on duplicated-knot data."""
    n = theta.size
    if n == 1:
        return np.repeat(values[:1], q.size, axis=0)
    if side == "L":
        idx = np.searchsorted(theta, q, side="left")
        idx = np.clip(idx, 1, n - 1)
        exact = theta[idx - 1] == q
        hit = np.where(exact, idx - 1, np.where(theta[idx] == q, idx, -1))
    else:
        idx = np.searchsorted(theta, q, side="right")
        idx = np.clip(idx, 1, n - 1)
        exact = theta[idx] == q
        hit = np.where(exact, idx, np.where(theta[idx - 1] == q, idx - 1, -1))
    t0, t1 = theta[idx - 1], theta[idx]
    width = t1 - t0
    frac = np.divide(q - t0, width, out=np.zeros_like(q), where=width > 0)
    out = values[idx - 1] + frac[:, None] * (values[idx] - values[idx - 1])
    sel = hit >= 0
    out[sel] = values[hit[sel]]
    return out


# seminorms


def seminorm_recent(recent: RecentSegment) -> float:
    """``(1/tau) int_{-tau}^0 |psi|`` by the trapezoid rule."""
    if recent.theta.size < 2:
        raise ConfigurationError("recent segment needs at least two knots")
    tau = recent.tau
    if tau <= 0:
        raise ConfigurationError("recent segment has zero length")
    return float(np.trapezoid(recent.space.norms(recent.values), recent.theta)) / tau


def seminorm_tail(tail: TailRepresentation, weight: FadingWeight):
    """Return ``(value, error_bound)`` for ``int_{-inf}^{-tau} rho |phi|``."""
    if abs(weight.tau - tail.tau) > _TOL:
        raise ConfigurationError("weight.tau does not match the history window")
    norms = tail.space.norms(tail.values)
    value = float(np.trapezoid(weight.rho(tail.theta) * norms, tail.theta)) if tail.theta.size > 1 else 0.0
    if tail.beyond.exact:
        value += tail.beyond.weighted_norm_integral(tail.start, weight, tail.space)
        return value, 0.0
    return value, tail.beyond.weighted_norm_bound(tail.start, weight)


def seminorm(history: History, weight: FadingWeight) -> float:
    value, _ = seminorm_tail(history.tail, weight)
    return seminorm_recent(history.recent) + value


def seminorm_with_bound(history: History, weight: FadingWeight):
    value, err = seminorm_tail(history.tail, weight)
    return seminorm_recent(history.recent) + value, err


def weighted_history_integral(history: History) -> np.ndarray:
    """Componentwise ``int_{-inf}^0 phi(theta) d theta``."""
    grid_part = np.trapezoid(history.values, history.theta, axis=0)
    beyond = history.beyond
    if beyond.exact:
        return grid_part + beyond.integral(history.beyond_start)
    if not math.isfinite(beyond.integral_bound()):
        raise IntegrabilityError("history tail bound is not integrable (decay = 0)")
    return grid_part


def history_integral_bound(history: History) -> float:
    """Error bound of :func:`weighted_history_integral` in the state norm."""
    if history.beyond.exact:
        return 0.0
    return history.beyond.integral_bound() * history.space.ones_norm()


def history_at(traj, t) -> History:
    """The history ``y_t(theta) = y(t + theta)`` of a trajectory.

    ``traj`` needs ``t0``, ``T``, ``initial_history`` and ``knots()``.
    At an impulse time the history ends in the left value.
    """
    t0, T = traj.t0, traj.T
    if t < t0 - _TOL or t > T + _TOL:
        raise DomainError(f"t={t!r} outside [{t0!r}, {T!r}]")
    phi = traj.initial_history
    if t <= t0:
        return phi
    s = t - t0
    times, values = traj.knots()
    n = int(np.searchsorted(times, t, side="left"))
    y_t = _interp(times, values, np.array([t]), "L")
    keep = phi.theta < 0
    theta = np.concatenate([phi.theta[keep] - s, times[:n] - t, [0.0]])
    vals = np.concatenate([phi.values[keep], values[:n], y_t])
    return History(theta, vals, phi.tau, phi.beyond.shifted(s), phi.space)


# axiom checks


def check_fading(weight: FadingWeight, samples, rtol=1e-12) -> CheckReport:
    """``rho(xi + theta) <= P(xi) rho(theta)`` at each ``(xi, theta)``."""
    rows = []
    for xi, theta in samples:
        if xi > 0 or theta >= -weight.tau:
            raise DomainError("fading samples need xi <= 0 and theta < -tau")
        lhs = float(weight.rho(xi + theta))
        rhs = float(weight.p_bound(xi) * weight.rho(theta))
        rows.append({"xi": float(xi), "theta": float(theta), "lhs": lhs, "rhs": rhs,
                     "ok": lhs <= rhs * (1 + rtol)})
    return CheckReport("fading", all(r["ok"] for r in rows), tuple(rows))


def check_B3(traj, constants: PhaseSpaceConstants, weight: FadingWeight, sample_times, tol=1e-10):
    phi_norm = seminorm(traj.initial_history, weight)
    times, values = traj.knots()
    norms = traj.initial_history.space.norms(values)
    rows = []
    for t in sample_times:
        lhs = seminorm(history_at(traj, t), weight)
        n = int(np.searchsorted(times, t, side="right"))
        sup = float(np.max(norms[: max(n, 1)]))
        s = t - traj.t0
        rhs = constants.K(s) * sup + constants.M(s) * phi_norm
        rows.append({"t": float(t), "lhs": lhs, "rhs": rhs, "ok": lhs <= rhs + tol})
    return CheckReport("B3", all(r["ok"] for r in rows), tuple(rows))


def check_B4(traj, constants: PhaseSpaceConstants, weight: FadingWeight, sample_times):
    rows = []
    for t in sample_times:
        h = history_at(traj, t)
        lhs = h.space.norm(h.values[-1])
        rhs = constants.H * seminorm(h, weight)
        rows.append({"t": float(t), "lhs": lhs, "rhs": rhs, "ok": lhs <= rhs + 1e-12})
    report = CheckReport("B4", all(r["ok"] for r in rows), tuple(rows))
    if not report.passed:
        bad = ", ".join(repr(r["t"]) for r in report.failures)
        report.details["violating_t"] = bad
    return report


def check_B2_proxy(traj, weight: FadingWeight, sample_times, delta, cutoff=None):
    """Discrete modulus of continuity of ``t -> y_t``.

    Compares ``y_t`` and ``y_{t + delta}`` on a common sampling of
    ``[-cutoff, 0]`` and reports the seminorm of the difference. This is a
    numerical proxy only; it proves nothing about continuity itself.
    """
    if cutoff is None:
        cutoff = weight.default_cutoff()
    rows = []
    for t in sample_times:
        h1 = history_at(traj, t)
        h2 = history_at(traj, min(t + delta, traj.T))
        d = _sampled_distance(h1, h2, weight, cutoff, delta)
        rows.append({"t": float(t), "distance": d, "ok": bool(np.isfinite(d))})
    return CheckReport("B2_proxy", all(r["ok"] for r in rows), tuple(rows), {"delta": float(delta)})


def _sampled_distance(h1, h2, weight, cutoff, h):
    step = max(h / 4, 1e-4)
    theta = np.linspace(-cutoff, 0.0, max(2, math.ceil(cutoff / step)) + 1)

    def sample(hist):
        inside = theta >= hist.theta[0]
        out = np.zeros((theta.size, hist.dim))
        out[inside] = hist.evaluate(theta[inside])
        if hist.beyond.exact:
            out[~inside] = hist.beyond.value(theta[~inside])
        return out

    diff = h1.space.norms(sample(h1) - sample(h2))
    recent = theta >= -weight.tau
    d = np.trapezoid(diff[recent], theta[recent]) / weight.tau
    tail = ~recent | (theta == -weight.tau)
    d += np.trapezoid(weight.rho(theta[tail]) * diff[tail], theta[tail])
    return float(d)
