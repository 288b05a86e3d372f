import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from impulsive_delay.exceptions import EmptyFamilyError
from impulsive_delay.optimizer import (
    CostFunctional,
    FamilyEntry,
    SolutionFamily,
    evaluate_cost,
    optimize,
    sample_solution_set,
)
from impulsive_delay.phase_space import History
from impulsive_delay.population import PopulationConfig, build_instance
from impulsive_delay.solver import SolverConfig, Trajectory
from oracles import CONTROL_MIN_COST, control_cost


def traj_of(f, t0=0.0, T=1.0, n=1001):
    t = np.linspace(t0, T, n)
    return Trajectory(History.constant(1.0, 1.0, 0.1), t0, [(t, f(t)[:, None])])


def test_costs_on_known_trajectories():
    zero = traj_of(lambda t: 0 * t)
    for kind in ("terminal_norm", "energy", "terminal_mass"):
        assert evaluate_cost(CostFunctional(kind), zero) == 0.0
    assert evaluate_cost(CostFunctional("terminal_norm"), traj_of(np.exp)) == pytest.approx(np.e ** 2)
    assert evaluate_cost(CostFunctional("terminal_norm"), traj_of(lambda t: np.exp(-t))) == \
        pytest.approx(0.1353353, abs=1e-7)
    assert evaluate_cost(CostFunctional("energy"), traj_of(lambda t: 1 + 0 * t, T=2.0)) == pytest.approx(2.0)
    custom = CostFunctional("custom", times=(0.0, 1.0), weights=(1.0, 2.0))
    assert evaluate_cost(custom, traj_of(lambda t: 1 + t)) == pytest.approx(1 + 2 * 4)


def fake_family(costs):
    tr = traj_of(lambda t: 0 * t)
    return SolutionFamily(tuple(FamilyEntry(i, f"s{i}", tr, 0.0, c) for i, c in enumerate(costs)), "x", 1.0)


def test_finite_argmin_and_ties():
    assert optimize(fake_family([0.5, 0.2, 0.9]), CostFunctional()).best.id == 1
    assert optimize(fake_family([0.5, 0.2, 0.9]), CostFunctional(direction="maximize")).best.id == 2
    assert optimize(fake_family([0.3, 0.1, 0.1]), CostFunctional()).best.id == 1
    assert optimize(fake_family([4.0]), CostFunctional()).best.id == 0


def test_empty_family_rejected():
    with pytest.raises(EmptyFamilyError):
        optimize(SolutionFamily((), "x", 1.0), CostFunctional())


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=12))
def test_optimize_is_brute_force(costs):
    rep = optimize(fake_family(costs), CostFunctional())
    assert rep.best_cost == min(costs)
    assert rep.best.id == costs.index(min(costs))


def control_problem(c, h=1e-3):
    cfg = PopulationConfig(T=1.0, omega={"shape": "box", "c": c}, psi={"kind": "constant", "value": 2.0})
    return build_instance(cfg, h)


def test_budget_one_is_zero_selection():
    fam = sample_solution_set(control_problem(0.5), 1, SolverConfig(h=1e-2))
    assert len(fam) == 1 and fam.entries[0].label == "zero"


def test_budget_three_ordered_by_sign():
    fam = sample_solution_set(control_problem(0.5), 3, SolverConfig(h=1e-3), CostFunctional())
    costs = {e.label: e.cost for e in fam}
    assert costs["bang-bang(0,-)"] < costs["zero"] < costs["bang-bang(0,+)"]


def test_family_determinism_and_workers():
    a = sample_solution_set(control_problem(0.5), 5, SolverConfig(h=1e-2), CostFunctional())
    b = sample_solution_set(control_problem(0.5), 5, SolverConfig(h=1e-2), CostFunctional(), workers=4)
    assert a.provenance == b.provenance
    assert [(e.id, e.cost) for e in a] == [(e.id, e.cost) for e in b]


def test_all_nonconvergent_runs_give_empty_family():
    cfg = PopulationConfig(T=1.0, g={"kind": "memory"}, psi={"kind": "exponential"})
    with pytest.raises(EmptyFamilyError):
        sample_solution_set(build_instance(cfg, 1e-2), 1, SolverConfig(h=1e-2, picard_tol=1e-30, max_iters=2))


@pytest.mark.parametrize("c", [0.25, 0.5, 1.0])
def test_linear_control_oracle(c):
    fam = sample_solution_set(control_problem(c), 5, SolverConfig(h=1e-3), CostFunctional())
    rep = optimize(fam, CostFunctional())
    assert rep.best.label == "bang-bang(0,-)"
    assert rep.best_cost == pytest.approx(control_cost(c, -1), rel=1e-4)
    assert rep.best_cost == pytest.approx(CONTROL_MIN_COST[c], rel=1e-4)


def test_minimized_cost_monotone_in_radius():
    costs = [optimize(sample_solution_set(control_problem(c), 5, SolverConfig(h=1e-3), CostFunctional()),
                      CostFunctional()).best_cost for c in (0.0, 0.25, 0.5, 1.0)]
    assert all(b <= a for a, b in zip(costs, costs[1:]))
