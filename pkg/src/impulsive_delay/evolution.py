"""Two-parameter evolution systems ``U(t, s)``."""
from __future__ import annotations

import abc

import numpy as np

from .exceptions import ConfigurationError, DomainError, HypothesisViolation
from .reports import CheckReport

_TOL = 1e-12


class EvolutionSystem(abc.ABC):
    """Family of bounded linear maps on the triangle ``t0 <= s <= t <= T``.

    Subclasses implement :meth:`apply`; the laws ``U(s, s) = I`` and
    ``U(t, r) U(r, s) = U(t, s)`` are checked by :func:`check_composition`.
    """

    t0: float
    T: float

    def _check_pair(self, t, s):
        if not (self.t0 - _TOL <= s <= t + _TOL and t <= self.T + _TOL):
            raise DomainError(f"(t, s) = ({t!r}, {s!r}) is outside the triangle "
                              f"{self.t0!r} <= s <= t <= {self.T!r}")

    @abc.abstractmethod
    def apply(self, t, s, v):
        ...

    def operator_norm(self, t, s, space=None):
        raise NotImplementedError


class MultiplicationEvolution(EvolutionSystem):
    """``[U(t, s) v](x) = exp(-int_s^t b(sigma, x) d sigma) v(x)``.

    ``b`` is sampled on ``times`` (one column per state component). The
    cumulative integral ``B`` is built once by the trapezoid rule and
    interpolated linearly, so exponents add exactly under composition.

    Set ``allow_signed=True`` to admit negative ``b`` (useful for testing the
    bound estimate); such systems fail :meth:`validate`. When the antiderivative
    is known in closed form it can be passed as ``cumulative`` (values at
    ``times``, zero at the first node) and replaces the trapezoid sums.
    """

    def __init__(self, times, b, allow_signed=False, cumulative=None):
        times = np.asarray(times, dtype=float).reshape(-1)
        b = np.asarray(b, dtype=float)
        if b.ndim == 1:
            b = b[:, None]
        if times.size < 2 or np.any(np.diff(times) <= 0):
            raise ConfigurationError("evolution time grid must be increasing with >= 2 points",
                                     "evolution.b")
        if b.shape[0] != times.size:
            raise ConfigurationError("b samples do not match the time grid", "evolution.b")
        if not np.all(np.isfinite(b)):
            raise ConfigurationError("b must be finite", "evolution.b")
        if not allow_signed and np.any(b < 0):
            raise HypothesisViolation("(b2)", "removal coefficient must be nonnegative")
        self.times = times
        self.b = b
        self.t0 = float(times[0])
        self.T = float(times[-1])
        if cumulative is None:
            increments = 0.5 * np.diff(times)[:, None] * (b[1:] + b[:-1])
            cumulative = np.vstack([np.zeros((1, b.shape[1])), np.cumsum(increments, axis=0)])
        cumulative = np.array(cumulative, dtype=float).reshape(b.shape)
        if not np.all(np.isfinite(cumulative)):
            raise ConfigurationError("cumulative integral must be finite", "evolution.b")
        self.cum_B = cumulative - cumulative[0]
        self.times.setflags(write=False)
        self.cum_B.setflags(write=False)

    @classmethod
    def from_callable(cls, b_func, t0, T, h, allow_signed=False):
        """Sample ``b_func(t) -> array(dim)`` on a uniform grid of step <= h."""
        n = max(1, int(np.ceil((T - t0) / h - 1e-9)))
        times = np.linspace(t0, T, n + 1)
        return cls(times, np.array([np.atleast_1d(b_func(t)) for t in times]), allow_signed)

    @property
    def dim(self):
        return self.b.shape[1]

    def cumulative(self, t):
        """``B(t, .)`` at the times in ``t``; shape ``(len(t), dim)``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t < self.t0 - _TOL) or np.any(t > self.T + _TOL):
            raise DomainError("time outside the evolution grid")
        i = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, self.times.size - 2)
        lo, hi = self.times[i], self.times[i + 1]
        frac = np.clip((t - lo) / (hi - lo), 0.0, 1.0)[:, None]
        return self.cum_B[i] + frac * (self.cum_B[i + 1] - self.cum_B[i])

    def factor(self, t, s):
        """Diagonal of ``U(t, s)``."""
        self._check_pair(t, s)
        if t == s:
            return np.ones(self.dim)
        B = self.cumulative([t, s])
        return np.exp(-(B[0] - B[1]))

    def apply(self, t, s, v):
        v = np.asarray(v, dtype=float)
        return self.factor(t, s) * v

    def operator_norm(self, t, s, space=None):
        # diagonal multiplication: norm is the largest factor in any weighted L2 norm
        return float(np.max(np.abs(self.factor(t, s))))

    def validate(self, dominating=None):
        """Report on (b2): ``0 < b(t, x) <= s(t)``."""
        rows = [{"check": "positivity", "min_b": float(self.b.min()), "ok": bool(self.b.min() > 0)}]
        if dominating is not None:
            s = np.array([dominating(t) for t in self.times])
            excess = float(np.max(self.b - s[:, None]))
            rows.append({"check": "domination", "max_excess": excess, "ok": excess <= 0})
        return CheckReport("(b2)", all(r["ok"] for r in rows), tuple(rows))


def apply(ev: EvolutionSystem, t, s, v):
    return ev.apply(t, s, v)


def check_identity(ev: EvolutionSystem, times, vs) -> CheckReport:
    rows = []
    for s in times:
        for v in vs:
            dev = float(np.max(np.abs(ev.apply(s, s, v) - v)))
            rows.append({"s": float(s), "deviation": dev, "ok": dev == 0.0})
    return CheckReport("evolution_identity", all(r["ok"] for r in rows), tuple(rows))


def check_composition(ev: EvolutionSystem, triples, vs, rtol=1e-12) -> CheckReport:
    """Max of ``|U(t,r)U(r,s)v - U(t,s)v| / |v|`` over the samples."""
    rows = []
    worst = 0.0
    for (t, r, s) in triples:
        if not s <= r <= t:
            raise DomainError("composition samples need s <= r <= t")
        for v in vs:
            v = np.asarray(v, dtype=float)
            scale = float(np.max(np.abs(v))) or 1.0
            dev = float(np.max(np.abs(ev.apply(t, r, ev.apply(r, s, v)) - ev.apply(t, s, v)))) / scale
            worst = max(worst, dev)
            rows.append({"t": float(t), "r": float(r), "s": float(s), "deviation": dev,
                         "ok": dev <= rtol})
    return CheckReport("evolution_composition", all(r["ok"] for r in rows), tuple(rows),
                       {"max_deviation": worst})


def estimate_D(ev: EvolutionSystem, sample_times) -> float:
    """Sampled sup of ``|U(t, s)|`` over pairs drawn from ``sample_times``.

    The diagonal ``t = s`` always belongs to the triangle, so the estimate is
    at least 1.
    """
    ts = np.unique(np.asarray(sample_times, dtype=float))
    if ts.size == 0:
        raise ConfigurationError("estimate_D needs at least one sample time")
    best = 1.0
    if isinstance(ev, MultiplicationEvolution):
        B = ev.cumulative(ts)
        # exponent -(B(t) - B(s)) is maximized by the largest decrease of B
        for j in range(B.shape[1]):
            run_max = np.maximum.accumulate(B[:, j])
            best = max(best, float(np.exp(np.max(run_max - B[:, j]))))
        return best
    for i, t in enumerate(ts):
        for s in ts[: i + 1]:
            best = max(best, ev.operator_norm(t, s))
    return best
