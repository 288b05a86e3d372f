"""YAML run configuration: loading, validation, conversion to model objects."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .exceptions import ConfigurationError
from .optimizer import CostFunctional
from .population import PopulationConfig
from .solver import SolverConfig

REQUIRED = ("phase_space", "evolution", "inclusion", "schedule", "solver", "population")
ALLOWED = {
    "phase_space": {"tau", "mu", "p_rate", "cutoff", "eps_tail", "H"},
    "evolution": {"b"},
    "inclusion": {"g", "omega"},
    "schedule": {"t0", "T", "times", "impulses"},
    "solver": {"h", "picard_tol", "max_iters", "quadrature", "selection", "check_samples"},
    "population": {"n_space", "psi"},
    "optimize": {"cost", "direction", "budget", "workers", "times", "weights"},
}


@dataclass(frozen=True)
class OptimizeSettings:
    cost: CostFunctional = field(default_factory=CostFunctional)
    budget: int = 5
    workers: int = 1


@dataclass(frozen=True)
class RunConfig:
    name: str
    seed: int
    population: PopulationConfig
    solver: SolverConfig
    selection: dict
    optimize: OptimizeSettings | None = None
    source: str = ""

    def with_h(self, h):
        return dataclasses.replace(self, solver=dataclasses.replace(self.solver, h=float(h)))

    def with_seed(self, seed):
        return dataclasses.replace(self, seed=int(seed))


_MISSING = object()


def _num(section, data, key, default=_MISSING, cast=float):
    if key not in data or data[key] is None:
        if default is _MISSING:
            raise ConfigurationError("required value is missing", f"{section}.{key}")
        return default
    try:
        value = cast(data[key])
    except (TypeError, ValueError):
        raise ConfigurationError(f"cannot read {data[key]!r} as {cast.__name__}", f"{section}.{key}") from None
    if cast is float and not math.isfinite(value):
        raise ConfigurationError("value must be finite", f"{section}.{key}")
    return value


def parse_config(data: dict, source="") -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigurationError("configuration must be a mapping")
    for sec in REQUIRED:
        if sec not in data:
            raise ConfigurationError("required section is missing", sec)
    for sec, keys in ALLOWED.items():
        part = data.get(sec) or {}
        if not isinstance(part, dict):
            raise ConfigurationError("section must be a mapping", sec)
        unknown = set(part) - keys
        if unknown:
            raise ConfigurationError(f"unknown keys {sorted(unknown)}", sec)
    unknown = set(data) - set(ALLOWED) - {"name", "seed"}
    if unknown:
        raise ConfigurationError(f"unknown sections {sorted(unknown)}")

    ps, ev, inc, sch, sol, pop = (data[s] or {} for s in REQUIRED)
    tau = _num("phase_space", ps, "tau")
    cutoff = _num("phase_space", ps, "cutoff", None)
    if cutoff is not None and cutoff < tau:
        raise ConfigurationError(f"cutoff {cutoff!r} is below tau {tau!r}", "phase_space.cutoff")
    times = sch.get("times") or []
    impulses = sch.get("impulses") or []
    if not isinstance(times, list) or not isinstance(impulses, list):
        raise ConfigurationError("times and impulses must be lists", "schedule.times")
    if "b" not in ev:
        raise ConfigurationError("required value is missing", "evolution.b")
    population = PopulationConfig(
        n_space=_num("population", pop, "n_space", 1, int),
        t0=_num("schedule", sch, "t0", 0.0),
        T=_num("schedule", sch, "T"),
        tau=tau,
        mu=_num("phase_space", ps, "mu", 1.0),
        p_rate=_num("phase_space", ps, "p_rate", None),
        H=_num("phase_space", ps, "H", 2.0),
        b=dict(ev["b"]),
        g=dict(inc.get("g") or {"kind": "zero"}),
        omega=dict(inc.get("omega") or {"shape": "box", "c": 0.0}),
        psi=dict(pop.get("psi") or {"kind": "constant", "value": 1.0}),
        impulse_times=tuple(float(t) for t in times),
        impulses=tuple(dict(i) for i in impulses),
        name=str(data.get("name", "")),
    )
    solver = SolverConfig(
        h=_num("solver", sol, "h"),
        picard_tol=_num("solver", sol, "picard_tol", 1e-10),
        max_iters=_num("solver", sol, "max_iters", 200, int),
        quadrature=str(sol.get("quadrature", "trapezoid")),
        tail_cutoff=cutoff,
        eps_tail=_num("phase_space", ps, "eps_tail", 1e-8),
        check_samples=_num("solver", sol, "check_samples", 11, int),
    )
    opt = None
    if data.get("optimize"):
        o = data["optimize"]
        cost = CostFunctional(kind=str(o.get("cost", "terminal_norm")),
                              direction=str(o.get("direction", "minimize")),
                              times=tuple(o.get("times") or ()), weights=tuple(o.get("weights") or ()))
        budget = _num("optimize", o, "budget", 5, int)
        if budget < 1:
            raise ConfigurationError("budget must be >= 1", "optimize.budget")
        opt = OptimizeSettings(cost, budget, _num("optimize", o, "workers", 1, int))
    return RunConfig(
        name=str(data.get("name", "")),
        seed=_num("seed", data, "seed", 0, int),
        population=population,
        solver=solver,
        selection=dict(sol.get("selection") or {"kind": "zero"}),
        optimize=opt,
        source=str(source),
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc.strerror}", "config") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"invalid YAML: {exc}", "config") from None
    return parse_config(data, path)


def shipped_config_path(name="default"):
    return resources.files("impulsive_delay") / "configs" / f"{name}.yaml"


def load_shipped(name="default") -> RunConfig:
    with resources.as_file(shipped_config_path(name)) as p:
        return load_config(p)


BENCHMARKS = ("linear_decay", "impulse", "memory", "linear_control", "population")
