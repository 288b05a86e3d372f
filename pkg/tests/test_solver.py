import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from impulsive_delay.exceptions import ConfigurationError, IntegrabilityError, NonconvergenceError
from impulsive_delay.inclusion import SelectionStrategy
from impulsive_delay.phase_space import history_at
from impulsive_delay.population import PopulationConfig, build_instance
from impulsive_delay.solver import (
    ImpulseMap,
    SolverConfig,
    Trajectory,
    apriori_from_constants,
    apriori_radius,
    contraction_factor,
    gamma_apply,
    glue,
    initial_trajectory,
    residual,
    solve,
    solve_interval,
    weighted_sup_norm,
)
from oracles import MEMORY_Y_ONE, WORKED_ELL1, impulse_solution, memory_solution

ZERO = SelectionStrategy("zero")


def decay(T=2.0, h=1e-3, **kw):
    return build_instance(PopulationConfig(T=T, **kw), h)


def memory(T=1.0, h=1e-3, b=1.0):
    return build_instance(PopulationConfig(T=T, b={"kind": "constant", "value": b}, g={"kind": "memory"},
                                           psi={"kind": "exponential", "amplitude": 1.0, "rate": 1.0}), h)


def test_config_invariants():
    with pytest.raises(ConfigurationError):
        SolverConfig(h=0.0)
    with pytest.raises(ConfigurationError):
        SolverConfig(max_iters=0)


def test_gamma_on_homogeneous_problem():
    p = decay()
    cfg = SolverConfig(h=1e-3)
    xi = initial_trajectory(p)
    q = np.random.default_rng(0).normal(size=(2001, 1))
    out = gamma_apply(1, q, xi, ZERO, p, cfg)
    t = np.linspace(0, 2, 2001)
    assert np.max(np.abs(out[:, 0] - np.exp(-t))) < 1e-15


def test_gamma_grid_mismatch():
    p = decay()
    with pytest.raises(ConfigurationError):
        gamma_apply(1, np.zeros((10, 1)), initial_trajectory(p), ZERO, p, SolverConfig(h=1e-3))


def test_gamma_fixed_point_of_exact_solution():
    # y' = -y + y has the fixed point y = 1
    p = build_instance(PopulationConfig(T=1.0, g={"kind": "linear", "a": 1.0}), 1e-3)
    q = np.ones((1001, 1))
    out = gamma_apply(1, q, initial_trajectory(p), ZERO, p, SolverConfig(h=1e-3))
    assert np.max(np.abs(out - 1.0)) < 1e-6


def test_homogeneous_interval_converges_in_one_iteration():
    p = decay()
    sol = solve_interval(1, initial_trajectory(p), ZERO, p, SolverConfig(h=1e-3))
    assert sol.iterations == 1 and sol.last_diff == 0.0


def test_cancellation_fixed_point():
    p = build_instance(PopulationConfig(T=1.0, g={"kind": "linear", "a": 1.0}), 1e-3)
    traj = solve(p, ZERO, SolverConfig(h=1e-3, picard_tol=1e-13))
    # trapezoid defect of the discrete fixed point is h^2 / 12 per unit time
    assert np.max(np.abs(traj.knots()[1] - 1.0)) < 1e-6


def test_memory_with_zero_removal_is_exponential():
    p = memory(b=1e-300)
    traj = solve(p, ZERO, SolverConfig(h=1e-3, picard_tol=1e-13), diagnostics=False)
    t, y = traj.knots()
    assert np.max(np.abs(y[:, 0] - np.exp(t))) < 1e-5


def test_memory_matches_closed_form_and_refinement():
    coarse = solve(memory(h=8e-3), ZERO, SolverConfig(h=8e-3, picard_tol=1e-13), diagnostics=False)
    fine = solve(memory(h=1e-3), ZERO, SolverConfig(h=1e-3, picard_tol=1e-13), diagnostics=False)
    assert fine(1.0)[0] == pytest.approx(MEMORY_Y_ONE, abs=1e-6)
    t = coarse.knots()[0]
    assert np.max(np.abs(coarse(t)[:, 0] - fine(t)[:, 0])) < 1e-4
    assert np.max(np.abs(fine.knots()[1][:, 0] - memory_solution(fine.knots()[0]))) < 1e-6


def test_nonconvergence_names_interval():
    with pytest.raises(NonconvergenceError) as err:
        solve(memory(), ZERO, SolverConfig(h=1e-3, picard_tol=1e-30, max_iters=2))
    assert err.value.interval == 1 and err.value.last_diff > 0


def test_impulse_benchmark_and_jump_law():
    p = decay(impulse_times=(1.0,), impulses=({"kind": "constant", "value": 0.3},))
    traj = solve(p, ZERO, SolverConfig(h=1e-3, picard_tol=1e-12))
    t, y = traj.knots()
    assert np.max(np.abs(y[:, 0] - impulse_solution(t, traj.sides()))) < 1e-12
    (jr,) = traj.jump_records
    assert jr.right[0] == jr.left[0] + 0.3


def test_single_interval_equals_solve_interval_plus_glue():
    p = decay()
    cfg = SolverConfig(h=1e-3)
    a = solve(p, ZERO, cfg, diagnostics=False)
    b = glue(solve_interval(1, initial_trajectory(p), ZERO, p, cfg), initial_trajectory(p))
    assert np.array_equal(a.knots()[1], b.knots()[1])


def test_glue_jump_arithmetic_and_history_reread():
    p = decay()
    xi = glue((np.array([0.0, 0.5]), np.array([[1.0], [2.0]])), initial_trajectory(p))
    before = history_at(xi, 0.5)
    ext = glue((np.array([0.5, 1.0]), np.array([[0.0], [0.0]])), xi, impulse=np.array([0.5]))
    assert ext(0.5, "R")[0] == 2.5
    after = history_at(ext, 0.5)
    assert np.array_equal(before.theta, after.theta) and np.array_equal(before.values, after.values)


def test_glue_onto_initial_history_starts_at_phi0():
    p = decay(psi={"kind": "constant", "value": 3.0})
    xi = glue((np.array([0.0, 1.0]), np.array([[99.0], [0.0]])), initial_trajectory(p))
    assert xi(0.0)[0] == 3.0


def test_linear_saturating_impulse_maps():
    from impulsive_delay.phase_space import History
    h = History.exponential(1.0, 1.0, 1.0, 1e-3)
    assert ImpulseMap("linear", gain=0.1)(h)[0] == pytest.approx(0.1, abs=1e-7)
    assert ImpulseMap("saturating", level=2.0, scale=1.0)(h)[0] == pytest.approx(2 * math.tanh(1), abs=1e-6)
    assert not ImpulseMap("linear").bounded


def test_residual_detects_corruption():
    p = decay()
    traj = solve(p, ZERO, SolverConfig(h=1e-3), diagnostics=False)
    assert residual(traj, ZERO, p) < 1e-14
    t, y = traj.knots()
    y = y.copy()
    y[700] += 1.0
    bad = Trajectory(traj.initial_history, traj.t0, [(t, y)])
    assert residual(bad, ZERO, p) >= 0.5


def test_residual_of_exact_solution_is_quadrature_small():
    p = decay(g={"kind": "linear", "a": -1.0})  # y' = -2y
    t = np.linspace(0, 2, 2001)
    exact = Trajectory(p.initial_history, 0.0, [(t, np.exp(-2 * t)[:, None])])
    r = residual(exact, ZERO, p)
    assert r < 1e-6


def test_apriori_trivial_and_worked():
    b = apriori_from_constants(np.zeros(11), np.linspace(0, 1, 11), 1.0, 1.0, 1.0, 2.0, 5.0)
    assert b.ell1 == 0.0 and b.r == b.C1 == 2.0
    t = np.linspace(0, 1, 101)
    ell = contraction_factor(2.0, t, np.full(101, 0.5), 1.0, 1.0)
    assert ell == pytest.approx(WORKED_ELL1, abs=1e-12)
    w = apriori_from_constants(np.full(101, 0.5), t, 1.0, 1.0, 1.0, 1.0, 0.7)
    assert w.C1 == pytest.approx(1.0 + 0.5 + 0.5 * 0.7)
    assert w.ell1 < 0.5 and w.r >= w.C1 / (1 - w.ell1) - 1e-15


def test_apriori_bound_on_population_run():
    cfg = PopulationConfig(n_space=5, T=1.0, g={"kind": "logistic", "rate": 2.0},
                           omega={"shape": "ball", "R": 0.5}, psi={"kind": "constant", "value": 0.5})
    p = build_instance(cfg, 2e-3)
    sel = SelectionStrategy("vertex", direction=np.array(1.0), radius=0.5)
    traj = solve(p, sel, SolverConfig(h=2e-3))
    b = apriori_radius(p, 1, SolverConfig(h=2e-3))
    assert weighted_sup_norm(traj, b.N1, 0.0, 1.0) <= b.r
    assert traj.meta["apriori"].passed and traj.meta["F3"].passed and traj.meta["B3"].passed


def test_apriori_needs_growth():
    with pytest.raises(ConfigurationError):
        apriori_radius(memory())


def test_memory_needs_integrable_history():
    p = build_instance(PopulationConfig(g={"kind": "memory"}), 1e-2)
    with pytest.raises(IntegrabilityError):
        solve(p, ZERO, SolverConfig(h=1e-2))


def test_bitwise_determinism():
    a = solve(memory(), ZERO, SolverConfig(h=1e-3), diagnostics=False)
    b = solve(memory(), ZERO, SolverConfig(h=1e-3), diagnostics=False)
    assert a.knots()[1].tobytes() == b.knots()[1].tobytes()


def test_loop_and_vectorized_convolution_agree():
    # a huge removal rate forces the overflow-safe recursion
    slow = solve(build_instance(PopulationConfig(T=1.0, b={"kind": "constant", "value": 400.0},
                                                 g={"kind": "linear", "a": 1.0}), 1e-3),
                 ZERO, SolverConfig(h=1e-3), diagnostics=False)
    assert np.all(np.isfinite(slow.knots()[1]))
    assert slow(1.0)[0] < 1e-100


@settings(max_examples=25, deadline=None)
@given(c=st.floats(-5, 5), t1=st.floats(0.2, 1.8))
def test_jump_law_exact(c, t1):
    p = decay(h=1e-2, impulse_times=(t1,), impulses=({"kind": "constant", "value": c},))
    traj = solve(p, ZERO, SolverConfig(h=1e-2), diagnostics=False)
    (jr,) = traj.jump_records
    assert jr.right[0] == jr.left[0] + c
    assert traj(t1, "R")[0] == jr.right[0]
