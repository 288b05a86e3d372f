"""Age-free population density with removal, memory and feedback control.

The state ``u(t, .)`` lives in ``L^2([0, 1])`` and is sampled on a uniform
spatial grid; every operator acts pointwise in ``x``, so each node is an
independent scalar equation coupled only through the ``L^2`` norm used by
the control set and the diagnostics. ``n_space = 1`` gives a scalar problem
at ``x = 0.5``.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .evolution import MultiplicationEvolution
from .exceptions import ConfigurationError, HypothesisViolation
from .inclusion import ControlMultimap, GrowthData, enumerate_selections, make_nonlinearity
from .phase_space import FadingWeight, History, PhaseSpaceConstants, StateSpace, check_fading
from .reports import CheckReport
from .solver import ImpulseMap, ImpulseSchedule, ProblemInstance, Trajectory, interval_grid

B_KINDS = ("constant", "affine_x", "separable", "table")
PSI_KINDS = ("constant", "exponential", "table")
PROFILES = ("uniform", "sine", "bump", "linear")


@dataclass(frozen=True)
class PopulationConfig:
    """Declarative description of one population problem.

    ``b``, ``g``, ``omega``, ``psi`` and each impulse are mappings with a
    ``kind`` (or ``shape``) key and named parameters.
    """

    n_space: int = 1
    t0: float = 0.0
    T: float = 1.0
    tau: float = 1.0
    mu: float = 1.0
    p_rate: float | None = None
    H: float = 2.0
    b: dict = field(default_factory=lambda: {"kind": "constant", "value": 1.0})
    g: dict = field(default_factory=lambda: {"kind": "zero"})
    omega: dict = field(default_factory=lambda: {"shape": "box", "c": 0.0})
    psi: dict = field(default_factory=lambda: {"kind": "constant", "value": 1.0})
    impulse_times: tuple = ()
    impulses: tuple = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "impulse_times", tuple(float(t) for t in self.impulse_times))
        object.__setattr__(self, "impulses", tuple(dict(i) for i in self.impulses))
        if int(self.n_space) < 1:
            raise ConfigurationError("n_space must be >= 1", "population.n_space")
        if not self.T > self.t0:
            raise ConfigurationError("T must exceed t0", "schedule.T")
        if not self.tau > 0:
            raise ConfigurationError("tau must be positive", "phase_space.tau")
        if self.b.get("kind") not in B_KINDS:
            raise ConfigurationError(f"unknown b kind {self.b.get('kind')!r}", "evolution.b.kind")
        if self.psi.get("kind") not in PSI_KINDS:
            raise ConfigurationError(f"unknown psi kind {self.psi.get('kind')!r}", "population.psi.kind")
        if len(self.impulse_times) != len(self.impulses):
            raise ConfigurationError("one impulse spec per impulse time", "schedule.impulses")
        ts = self.impulse_times
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ConfigurationError("impulse times must be strictly increasing", "schedule.times")
        for t in ts:
            if not self.t0 < t < self.T:
                raise ConfigurationError(f"impulse time {t!r} is not inside ({self.t0!r}, {self.T!r})",
                                         "schedule.times")

    @property
    def x(self):
        return spatial_grid(self.n_space)

    @property
    def space(self):
        return StateSpace.l2_unit_interval(int(self.n_space))

    @property
    def weight(self):
        return FadingWeight(self.tau, self.mu, self.p_rate)

    def fingerprint(self):
        blob = json.dumps(asdict(self), sort_keys=True, default=_jsonable)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return repr(obj)


def spatial_grid(n):
    return np.array([0.5]) if n == 1 else np.linspace(0.0, 1.0, n)


def _profile(name, x):
    if name == "uniform":
        return np.ones_like(x)
    if name == "sine":
        return np.sin(np.pi * x) if x.size > 1 else np.ones_like(x)
    if name == "bump":
        return 4.0 * x * (1.0 - x)
    if name == "linear":
        return 0.5 + x
    raise ConfigurationError(f"unknown spatial profile {name!r}", "population.psi.profile")


# removal coefficient b(t, x)


def b_values(spec, t, x):
    """``b`` on the tensor grid ``t`` x ``x``; shape ``(len(t), len(x))``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))[:, None]
    x = np.asarray(x, dtype=float)[None, :]
    kind = spec["kind"]
    if kind == "constant":
        return np.full((t.shape[0], x.shape[1]), float(spec.get("value", 1.0)))
    if kind == "affine_x":
        return float(spec.get("base", 0.0)) + float(spec.get("slope", 1.0)) * x + 0.0 * t
    if kind == "separable":
        base, amp, freq = (float(spec.get(k, d)) for k, d in (("base", 1.0), ("amp", 0.0), ("freq", 1.0)))
        slope = float(spec.get("slope", 0.0))
        return (base + amp * np.sin(2 * np.pi * freq * t)) * (1.0 + slope * x)
    times = np.asarray(spec["times"], dtype=float)
    vals = np.asarray(spec["values"], dtype=float)
    vals = vals[:, None] if vals.ndim == 1 else vals
    cols = np.broadcast_to(vals, (times.size, x.shape[1]))
    return np.stack([np.interp(t[:, 0], times, cols[:, j]) for j in range(x.shape[1])], axis=1)


def b_cumulative(spec, t0, t, x):
    """``int_{t0}^t b(s, x) ds`` in closed form (exact for the piecewise-linear table)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    s = (t - t0)[:, None]
    x = np.asarray(x, dtype=float)
    kind = spec["kind"]
    if kind in ("constant", "affine_x"):
        return s * b_values(spec, [t0], x)[0][None, :]
    if kind == "separable":
        base, amp, freq = (float(spec.get(k, d)) for k, d in (("base", 1.0), ("amp", 0.0), ("freq", 1.0)))
        slope = float(spec.get("slope", 0.0))
        w = 2 * np.pi * freq
        timepart = base * s[:, 0] + amp * (np.cos(w * t0) - np.cos(w * t)) / w
        return timepart[:, None] * (1.0 + slope * x)[None, :]
    knots = np.unique(np.concatenate([np.asarray(spec["times"], float), [t0], t]))
    knots = knots[(knots >= t0) & (knots <= t.max())]
    vals = b_values(spec, knots, x)
    cum = np.vstack([np.zeros((1, x.size)),
                     np.cumsum(0.5 * np.diff(knots)[:, None] * (vals[1:] + vals[:-1]), axis=0)])
    return np.stack([np.interp(t, knots, cum[:, j]) for j in range(x.size)], axis=1)


def dominating_s(spec, t, x):
    """The majorant ``s(t)``; a declared ``dominating`` constant, else the spatial max."""
    if "dominating" in spec:
        return np.full(np.atleast_1d(t).size, float(spec["dominating"]))
    return np.max(b_values(spec, t, x), axis=1)


# initial datum


def initial_history(config: PopulationConfig, h) -> History:
    spec = config.psi
    x = config.x
    space = config.space
    kind = spec["kind"]
    if kind in ("constant", "exponential"):
        prof = _profile(spec.get("profile", "uniform"), x)
        if kind == "constant":
            amp, rate = float(spec.get("value", 1.0)), 0.0
        else:
            amp, rate = float(spec.get("amplitude", 1.0)), float(spec.get("rate", 1.0))
        return History.exponential(amp * prof, rate, config.tau, h, space)
    theta = np.asarray(spec["theta"], dtype=float)
    vals = np.asarray(spec["values"], dtype=float)
    vals = np.broadcast_to(vals[:, None] if vals.ndim == 1 else vals, (theta.size, x.size))
    return History.from_samples(theta, vals, config.tau, float(spec.get("sup_bound", 0.0)),
                                float(spec.get("decay", 0.0)), space)


def make_control(spec) -> ControlMultimap:
    shape = spec.get("shape", "box")
    if shape == "finite":
        return ControlMultimap("finite", vertices=np.asarray(spec["vertices"], dtype=float))
    return ControlMultimap(shape, R=float(spec.get("R", 0.0)), c=float(spec.get("c", 0.0)))


def make_impulse(spec) -> ImpulseMap:
    kind = spec.get("kind", "constant")
    return ImpulseMap(kind, value=float(spec.get("value", 0.0)), gain=float(spec.get("gain", 0.0)),
                      level=float(spec.get("level", 0.0)), scale=float(spec.get("scale", 1.0)))


def evolution_grid(config: PopulationConfig, h):
    bounds = (config.t0, *config.impulse_times, config.T)
    parts = [interval_grid(a, b, h) for a, b in zip(bounds, bounds[1:])]
    return np.unique(np.concatenate(parts))


def build_evolution(config: PopulationConfig, h) -> MultiplicationEvolution:
    times = evolution_grid(config, h)
    b = b_values(config.b, times, config.x)
    if np.any(b <= 0):
        i, j = np.unravel_index(int(np.argmin(b)), b.shape)
        raise HypothesisViolation("(b2)", f"b(t={float(times[i])!r}, x={float(config.x[j])!r}) = {float(b[i, j])!r} "
                                         "is not positive")
    return MultiplicationEvolution(times, b, cumulative=b_cumulative(config.b, config.t0, times, config.x))


def build_instance(config: PopulationConfig, h=1e-3) -> ProblemInstance:
    """Assemble evolution, right-hand side, impulses and initial history."""
    evolution = build_evolution(config, h)
    nl = make_nonlinearity(config.g.get("kind", "zero"),
                           **{k: v for k, v in config.g.items() if k != "kind"})
    omega = make_control(config.omega)
    weight = config.weight
    space = config.space
    schedule = ImpulseSchedule(config.impulse_times, tuple(make_impulse(i) for i in config.impulses))
    return ProblemInstance(
        t0=config.t0, T=config.T, schedule=schedule,
        initial_history=initial_history(config, h),
        evolution=evolution, nonlinearity=nl, control=omega, weight=weight,
        constants=PhaseSpaceConstants.calibrated(weight, config.H),
        growth=GrowthData.from_parts(nl, omega, space),
        name=config.name, fingerprint=config.fingerprint(),
    )


def _is_zero_control(spec):
    omega = make_control(spec)
    if omega.shape == "box":
        return omega.c == 0
    if omega.shape == "ball":
        return omega.R == 0
    return bool(np.all(omega.vertices == 0))


def analytic_decay_oracle(config: PopulationConfig, h=1e-3) -> Trajectory:
    """Exact ``u(t, x) = exp(-int_{t0}^t b) psi(t0, x)`` for the homogeneous problem."""
    if config.g.get("kind", "zero") != "zero" or not _is_zero_control(config.omega) or config.impulse_times:
        raise ConfigurationError("the decay oracle needs g = 0, Omega = {0} and no impulses")
    hist = initial_history(config, h)
    times = interval_grid(config.t0, config.T, h)
    B = b_cumulative(config.b, config.t0, times, config.x)
    values = np.exp(-B) * hist.values[-1][None, :]
    return Trajectory(hist, config.t0, [(times, values)], meta={"oracle": "analytic_decay"})


def default_samples(config: PopulationConfig, seed=0, n=64):
    rng = np.random.default_rng(seed)
    times = np.linspace(config.t0, config.T, 17)
    dim = int(config.n_space)
    vs = [np.zeros(dim), np.ones(dim)] + [rng.normal(0.0, 3.0, dim) for _ in range(6)]
    return {
        "times": times,
        "p": np.concatenate([np.linspace(-10.0, 10.0, 41), rng.uniform(-10, 10, n)]),
        "q": np.concatenate([np.linspace(-10.0, 10.0, 41), rng.uniform(-10, 10, n)]),
        "states": vs,
        "controls": [],
    }


def verify_hypotheses(config: PopulationConfig, samples=None, seed=0) -> CheckReport:
    """Sampled check of every checkable hypothesis; one row per hypothesis."""
    s = default_samples(config, seed)
    if samples:
        s.update(samples)
    x = config.x
    times = np.asarray(s["times"], dtype=float)
    rows = []

    def row(name, ok, note):
        rows.append({"hypothesis": name, "ok": bool(ok), "note": note})

    row("(b1)", True, "assumed by construction")
    b = b_values(config.b, times, x)
    sdom = dominating_s(config.b, times, x)
    excess = float(np.max(b - sdom[:, None]))
    row("(b2)", b.min() > 0 and excess <= 1e-12,
        f"min b = {b.min()!r}, max b - s = {excess!r}")
    if config.b["kind"] == "table":
        row("(b3)", True, "assumed by construction: piecewise-linear in t")
    else:
        fine = np.linspace(config.t0, config.T, 2001)
        jump = float(np.max(np.abs(np.diff(b_values(config.b, fine, x), axis=0))))
        row("(b3)", jump < 1e-2, f"max consecutive change {jump!r} on 2000 panels")

    nl = make_nonlinearity(config.g.get("kind", "zero"),
                           **{k: v for k, v in config.g.items() if k != "kind"})
    p = np.asarray(s["p"], dtype=float)
    q = np.asarray(s["q"], dtype=float)
    P, Q = np.meshgrid(p, q, indexing="ij")
    row("(g1)", True, "assumed by construction: pointwise law of finite samples")
    row("(g2)", True, "assumed by construction")
    row("(g3)", True, "assumed by construction: shipped laws are continuous")
    if nl.growth_h is None:
        row("(g4)", False, "no bound h(t) is claimed for this law")
    else:
        worst = 0.0
        for t in times:
            worst = max(worst, float(np.max(np.abs(nl.g(t, P, Q)) - nl.growth_h(t))))
        row("(g4)", worst <= 1e-12, f"max |g| - h = {worst!r}")
    if nl.lipschitz_q is None:
        row("(g5)", False, "no Lipschitz modulus is claimed for this law")
    else:
        worst = 0.0
        i = np.arange(p.size - 1)
        for t in times:
            gv = nl.g(t, P, Q)
            dg = np.abs(gv[i + 1][:, i + 1] - gv[i][:, i])
            dist = np.abs(P[i + 1][:, i + 1] - P[i][:, i]) + np.abs(Q[i + 1][:, i + 1] - Q[i][:, i])
            worst = max(worst, float(np.max(dg - nl.lipschitz_q(t) * dist)))
        row("(g5)", worst <= 1e-9, f"sampled on scalar arguments, max excess {worst!r}")
    g0 = np.array([float(np.abs(nl.g(t, np.zeros(1), np.zeros(1)))[0]) for t in times])
    row("(g6)", bool(np.all(np.isfinite(g0))), f"max |g(t, 0, 0)| = {float(g0.max())!r}")

    omega = make_control(config.omega)
    space = config.space
    R = omega.growth_R(space)
    row("(Omega1)", True, "assumed by construction: compact convex shapes")
    row("(Omega2)", True, "assumed by construction")
    row("(Omega3)", True, "assumed by construction: finite dimensional values")
    pairs = list(s["controls"])
    for v in s["states"]:
        for sel in enumerate_selections(omega, 5):
            pairs.append((v, sel(0.0, v, None, space)))
    worst = 0.0
    for v, w in pairs:
        v = np.broadcast_to(np.asarray(v, dtype=float), (space.dim,))
        w = np.broadcast_to(np.asarray(w, dtype=float), (space.dim,))
        worst = max(worst, space.norm(w) - R * (1.0 + space.norm(v)))
    row("(Omega4)", R >= 0 and worst <= 1e-12, f"R = {R!r}, max |w| - R(1 + |v|) = {worst!r}")

    imp_ok = all(make_impulse(i).bounded for i in config.impulses)
    row("(I)", imp_ok, "impulse laws bounded and continuous" if imp_ok
        else "linear impulse law is bounded only on the a priori ball")

    weight = config.weight
    xi = np.linspace(-3.0, 0.0, 7)
    th = -weight.tau - np.linspace(0.5, 5.0, 6)
    fading = check_fading(weight, [(a, b_) for a in xi for b_ in th])
    row("fading", fading.passed, f"P(xi) = exp({weight.p_rate if weight.p_rate is not None else weight.mu!r} xi)")
    return CheckReport("hypotheses", all(r["ok"] for r in rows), tuple(rows))


def oracle_eligible(config: PopulationConfig) -> bool:
    return (config.g.get("kind", "zero") == "zero" and _is_zero_control(config.omega)
            and not config.impulse_times and math.isfinite(config.T))
