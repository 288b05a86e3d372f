"""Set-valued right-hand side ``F = f + Omega`` realized through selections.

``f(t, v, phi)(x) = g(t, v(x), int phi(theta)(x) d theta)`` is single valued;
the multivalued part is the control set ``Omega(v)``. A solution picks one
control per solver node through a :class:`SelectionStrategy`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import linprog

from .exceptions import ConfigurationError, MembershipError
from .phase_space import StateSpace, seminorm, weighted_history_integral
from .reports import CheckReport

_MEMBER_TOL = 1e-12


@dataclass(frozen=True)
class Nonlinearity:
    """Pointwise law ``g(t, p, q)``; ``p = u(t, x)``, ``q`` the history integral.

    ``g`` must accept broadcastable arrays. ``growth_h`` bounds ``|g|``
    (None if unbounded). ``linear_growth`` is the coefficient ``a`` of a
    bound ``|g| <= a |p|`` for laws that grow linearly instead. ``lipschitz_q``
    is the (g5) modulus, None when no such bound is claimed.
    """

    name: str
    g: Callable
    growth_h: Callable[[float], float] | None = None
    lipschitz_q: Callable[[float], float] | None = None
    uses_memory: bool = False
    linear_growth: float | None = None
    params: dict = field(default_factory=dict)

    def __call__(self, t, p, q):
        return self.g(t, p, q)

    def alpha(self, t):
        """Contribution of ``f`` to the sublinear growth bound, or None."""
        if self.growth_h is not None:
            return float(self.growth_h(t))
        if self.linear_growth is not None:
            return float(self.linear_growth)
        return None


def make_nonlinearity(kind, **params) -> Nonlinearity:
    """Shipped laws, selected by name.

    ``zero``; ``memory`` (``kappa * q``); ``linear`` (``a * p``);
    ``cubic`` (``-p**3``, bounds valid on ``|p| <= radius``);
    ``logistic`` (``r * p~ (1 - p~)`` with ``p~ = clip(p, 0, 1)``);
    ``quadratic`` (``p**2``, with a user-supplied and generally false bound ``h``).
    """
    if kind == "zero":
        return Nonlinearity("zero", lambda t, p, q: np.zeros(np.broadcast(p, q).shape),
                            growth_h=lambda t: 0.0, lipschitz_q=lambda t: 0.0)
    if kind == "memory":
        kappa = float(params.get("kappa", 1.0))
        return Nonlinearity("memory", lambda t, p, q: kappa * q + 0.0 * p,
                            uses_memory=True, params={"kappa": kappa})
    if kind == "linear":
        a = float(params.get("a", 1.0))
        return Nonlinearity("linear", lambda t, p, q: a * p + 0.0 * q, linear_growth=abs(a),
                            lipschitz_q=lambda t: abs(a), params={"a": a})
    if kind == "cubic":
        radius = float(params.get("radius", 1.0))
        return Nonlinearity("cubic", lambda t, p, q: -(p ** 3) + 0.0 * q,
                            growth_h=lambda t: radius ** 3,
                            lipschitz_q=lambda t: 3 * radius ** 2, params={"radius": radius})
    if kind == "logistic":
        r = float(params.get("rate", 1.0))

        def g(t, p, q):
            pc = np.clip(p, 0.0, 1.0)
            return r * pc * (1.0 - pc) + 0.0 * q

        return Nonlinearity("logistic", g, growth_h=lambda t: abs(r) / 4,
                            lipschitz_q=lambda t: abs(r), params={"rate": r})
    if kind == "quadratic":
        h = float(params.get("h", 1.0))
        return Nonlinearity("quadratic", lambda t, p, q: p ** 2 + 0.0 * q,
                            growth_h=lambda t: h, params={"h": h})
    raise ConfigurationError(f"unknown nonlinearity {kind!r}", "inclusion.g")


@dataclass(frozen=True)
class ControlMultimap:
    """Admissible controls ``Omega(v)``.

    ``ball``: ``{w : |w| <= R (1 + |v|)}``; ``box``: ``[-c, c]`` in every
    component; ``finite``: convex hull of ``vertices``.
    """

    shape: str
    R: float = 0.0
    c: float = 0.0
    vertices: np.ndarray | None = None

    def __post_init__(self):
        if self.shape not in ("ball", "box", "finite"):
            raise ConfigurationError(f"unknown control shape {self.shape!r}", "inclusion.omega")
        if self.shape == "ball" and not self.R >= 0:
            raise ConfigurationError("ball radius must be nonnegative", "inclusion.omega.R")
        if self.shape == "box" and not self.c >= 0:
            raise ConfigurationError("box half-width must be nonnegative", "inclusion.omega.c")
        if self.shape == "finite":
            if self.vertices is None or len(self.vertices) == 0:
                raise ConfigurationError("finite shape needs vertices", "inclusion.omega.vertices")
            object.__setattr__(self, "vertices", np.atleast_2d(np.asarray(self.vertices, dtype=float)))

    @classmethod
    def zero(cls):
        return cls("box", c=0.0)

    def growth_R(self, space: StateSpace) -> float:
        """Constant ``R`` with ``|Omega(v)| <= R (1 + |v|)``."""
        if self.shape == "ball":
            return self.R
        if self.shape == "box":
            return self.c * space.ones_norm()
        return float(np.max(space.norms(self.vertices)))

    def contains(self, v, w, space: StateSpace) -> bool:
        w = np.asarray(w, dtype=float)
        if self.shape == "ball":
            lim = self.R * (1.0 + space.norm(v))
            return space.norm(w) <= lim * (1 + _MEMBER_TOL) + _MEMBER_TOL
        if self.shape == "box":
            return bool(np.all(np.abs(w) <= self.c * (1 + _MEMBER_TOL) + _MEMBER_TOL))
        V = self.vertices
        if np.any(np.all(np.abs(V - w) <= _MEMBER_TOL * (1 + np.abs(w)), axis=1)):
            return True
        # convex-combination feasibility
        k = V.shape[0]
        res = linprog(np.zeros(k), A_eq=np.vstack([V.T, np.ones((1, k))]),
                      b_eq=np.concatenate([w, [1.0]]), bounds=[(0, None)] * k, method="highs")
        return bool(res.status == 0)


@dataclass(frozen=True)
class SelectionStrategy:
    """Rule producing one control per node.

    kinds: ``zero``; ``constant`` (fixed vector ``value``); ``vertex``
    (ball only: ``R (1 + |v|) * direction / |direction|``); ``bang-bang``
    (componentwise ``+level`` where ``v > threshold``, ``-level`` elsewhere,
    sign flipped by ``high = -1``); ``table`` (piecewise constant in time:
    ``table_values[i]`` on ``[table_times[i], table_times[i+1])``).
    """

    kind: str
    label: str = ""
    value: np.ndarray | None = None
    direction: np.ndarray | None = None
    radius: float = 0.0
    threshold: float = 0.0
    level: float = 0.0
    high: float = 1.0
    table_times: np.ndarray | None = None
    table_values: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("zero", "constant", "vertex", "bang-bang", "table"):
            raise ConfigurationError(f"unknown selection kind {self.kind!r}", "solver.selection")
        if not self.label:
            object.__setattr__(self, "label", self.kind)

    def controls(self, t, V, space: StateSpace):
        """Controls at times ``t`` (shape (n,)) for states ``V`` (shape (n, dim))."""
        V = np.atleast_2d(V)
        n, dim = V.shape
        if self.kind == "zero":
            return np.zeros_like(V)
        if self.kind == "constant":
            return np.broadcast_to(np.asarray(self.value, dtype=float), (n, dim)).copy()
        if self.kind == "vertex":
            d = np.broadcast_to(np.asarray(self.direction, dtype=float), (dim,))
            d = d / space.norm(d)
            return self.radius * (1.0 + space.norms(V))[:, None] * d[None, :]
        if self.kind == "bang-bang":
            on = V > self.threshold
            return self.high * self.level * np.where(on, 1.0, -1.0)
        times = np.asarray(self.table_times, dtype=float)
        vals = np.asarray(self.table_values, dtype=float).reshape(len(times), -1)
        i = np.clip(np.searchsorted(times, np.atleast_1d(t), side="right") - 1, 0, len(times) - 1)
        return np.broadcast_to(vals[i], (n, dim)).copy()

    def __call__(self, t, v, history=None, space=None):
        v = np.atleast_1d(np.asarray(v, dtype=float))
        space = space or StateSpace.euclidean(v.size)
        return self.controls(np.array([t]), v[None, :], space)[0]


def selection_from_spec(spec, omega: ControlMultimap, dim) -> SelectionStrategy:
    """Build a strategy from a config mapping such as ``{kind: constant, value: -0.5}``."""
    kind = spec.get("kind", "zero")
    if kind == "zero":
        return SelectionStrategy("zero")
    if kind == "constant":
        value = np.broadcast_to(np.asarray(spec["value"], dtype=float), (dim,)).copy()
        return SelectionStrategy("constant", label=f"constant({_fmt_vec(value)})", value=value)
    if kind == "vertex":
        direction = np.broadcast_to(np.asarray(spec.get("direction", 1.0), dtype=float), (dim,)).copy()
        return SelectionStrategy("vertex", label=f"vertex({_fmt_vec(direction)})",
                                 direction=direction, radius=omega.R)
    if kind == "bang-bang":
        level = float(spec.get("level", omega.c))
        high = float(spec.get("high", 1.0))
        thr = float(spec.get("threshold", 0.0))
        return SelectionStrategy("bang-bang", label=f"bang-bang({thr:g},{'+' if high > 0 else '-'})",
                                 threshold=thr, level=level, high=high)
    if kind == "table":
        return SelectionStrategy("table", label="table", table_times=np.asarray(spec["times"], float),
                                 table_values=np.asarray(spec["values"], float))
    raise ConfigurationError(f"unknown selection kind {kind!r}", "solver.selection.kind")


def _fmt_vec(v):
    v = np.asarray(v)
    if np.all(v == v[0]):
        return f"{v[0]:g}"
    return ",".join(f"{x:g}" for x in v)


@dataclass(frozen=True)
class GrowthData:
    """``alpha`` for the sublinear growth bound; ``mu`` is stored, never evaluated."""

    alpha: Callable[[float], float]
    mu: Callable[[float], float] | None = None

    @classmethod
    def from_parts(cls, nl: Nonlinearity, omega: ControlMultimap, space: StateSpace):
        a = nl.alpha(0.0)
        if a is None:
            return None
        R = omega.growth_R(space)
        return cls(alpha=lambda t: nl.alpha(t) + R)


def eval_f(nl: Nonlinearity, t, v, history):
    v = np.atleast_1d(np.asarray(v, dtype=float))
    q = weighted_history_integral(history) if nl.uses_memory else np.zeros_like(v)
    return np.asarray(nl.g(t, v, q), dtype=float) * np.ones_like(v)


def select_control(omega: ControlMultimap, strategy: SelectionStrategy, t, v, history=None,
                   space: StateSpace | None = None):
    v = np.atleast_1d(np.asarray(v, dtype=float))
    space = space or (history.space if history is not None else StateSpace.euclidean(v.size))
    w = strategy(t, v, history, space)
    if not omega.contains(v, w, space):
        raise MembershipError(t, f"strategy {strategy.label!r} produced {w!r} outside {omega.shape}")
    return w


def rhs_selection(nl, omega, strategy, t, v, history):
    return eval_f(nl, t, v, history) + select_control(omega, strategy, t, v, history, history.space)


def check_F3(nl, omega, growth: GrowthData, samples, weight, strategies=None) -> CheckReport:
    """``|f + w| <= alpha(t) (1 + |v| + |phi|)`` at each ``(t, v, history)`` sample."""
    if strategies is None:
        strategies = enumerate_selections(omega, 5)
    rows = []
    for t, v, hist in samples:
        space = hist.space
        bound = growth.alpha(t) * (1.0 + space.norm(v) + seminorm(hist, weight))
        worst = 0.0
        for s in strategies:
            try:
                worst = max(worst, space.norm(rhs_selection(nl, omega, s, t, v, hist)))
            except MembershipError:
                continue
        rows.append({"t": float(t), "lhs": worst, "rhs": bound, "ok": worst <= bound * (1 + 1e-12) + 1e-14})
    return CheckReport("F3", all(r["ok"] for r in rows), tuple(rows))


def enumerate_selections(omega: ControlMultimap, budget) -> list:
    """Deterministic finite family of selections: zero first, then extreme controls."""
    if budget < 1:
        raise ConfigurationError("selection budget must be >= 1", "optimize.budget")
    out = [SelectionStrategy("zero")]
    if omega.shape == "box":
        cands = [
            SelectionStrategy("bang-bang", label="bang-bang(0,+)", level=omega.c, high=1.0),
            SelectionStrategy("bang-bang", label="bang-bang(0,-)", level=omega.c, high=-1.0),
            SelectionStrategy("constant", label=f"constant(+{omega.c:g})", value=np.array(omega.c)),
            SelectionStrategy("constant", label=f"constant(-{omega.c:g})", value=np.array(-omega.c)),
        ]
    elif omega.shape == "ball":
        cands = [
            SelectionStrategy("vertex", label="vertex(+1)", direction=np.array(1.0), radius=omega.R),
            SelectionStrategy("vertex", label="vertex(-1)", direction=np.array(-1.0), radius=omega.R),
        ]
    else:
        cands = [SelectionStrategy("constant", label=f"vertex[{i}]", value=vtx)
                 for i, vtx in enumerate(omega.vertices)]
    out.extend(cands[: budget - 1])
    return out


def check_membership(omega, strategy, times, V, space):
    """Raise :class:`MembershipError` at the first node whose control is not admissible."""
    W = strategy.controls(times, V, space)
    if omega.shape == "box":
        bad = np.flatnonzero(np.any(np.abs(W) > omega.c * (1 + _MEMBER_TOL) + _MEMBER_TOL, axis=1))
    elif omega.shape == "ball":
        lim = omega.R * (1.0 + space.norms(V))
        bad = np.flatnonzero(space.norms(W) > lim * (1 + _MEMBER_TOL) + _MEMBER_TOL)
    else:
        uniq, inv = np.unique(W, axis=0, return_inverse=True)
        ok = np.array([omega.contains(None, u, space) for u in uniq])
        bad = np.flatnonzero(~ok[np.ravel(inv)])
    if bad.size:
        i = int(bad[0])
        raise MembershipError(float(times[i]), f"strategy {strategy.label!r} produced {W[i]!r}")
    return W
