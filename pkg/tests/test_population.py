import math

import numpy as np
import pytest

from impulsive_delay.exceptions import ConfigurationError, HypothesisViolation
from impulsive_delay.inclusion import SelectionStrategy
from impulsive_delay.phase_space import History
from impulsive_delay.population import (
    PopulationConfig,
    analytic_decay_oracle,
    b_cumulative,
    build_instance,
    verify_hypotheses,
)
from impulsive_delay.solver import SolverConfig, solve
from oracles import SEPARABLE_U1, SEPARABLE_U2, separable_solution

SEP = {"kind": "separable", "base": 1.0, "amp": 0.3, "freq": 1.0, "slope": 0.5}


def rows(report):
    return {r["hypothesis"]: r for r in report.rows}


def test_trivial_config_builds_and_validates():
    cfg = PopulationConfig()
    build_instance(cfg, 1e-2)
    assert verify_hypotheses(cfg).passed


def test_zero_removal_rejected():
    with pytest.raises(HypothesisViolation) as err:
        build_instance(PopulationConfig(b={"kind": "constant", "value": 0.0}), 1e-2)
    assert err.value.hypothesis == "(b2)"
    assert not rows(verify_hypotheses(PopulationConfig(b={"kind": "constant", "value": 0.0})))["(b2)"]["ok"]


def test_linear_impulse_on_exponential_history():
    cfg = PopulationConfig(n_space=4, impulse_times=(0.5,), impulses=({"kind": "linear", "gain": 0.1},))
    p = build_instance(cfg, 1e-3)
    h = History.exponential(np.ones(4), 1.0, 1.0, 1e-3, cfg.space)
    assert np.allclose(p.schedule.impulses[0](h), 0.1, atol=1e-7)


def test_oracle_examples():
    u = analytic_decay_oracle(PopulationConfig(T=1.0), 1e-2)
    assert u(1.0)[0] == pytest.approx(math.exp(-1), rel=1e-14)
    cfg = PopulationConfig(n_space=3, T=1.0, b={"kind": "affine_x", "base": 0.0, "slope": 1.0})
    u = analytic_decay_oracle(cfg, 1e-2)
    assert u(1.0)[0] == 1.0
    z = analytic_decay_oracle(PopulationConfig(psi={"kind": "constant", "value": 0.0}), 1e-2)
    assert not np.any(z.knots()[1])


def test_oracle_misuse():
    with pytest.raises(ConfigurationError):
        analytic_decay_oracle(PopulationConfig(g={"kind": "logistic"}))
    with pytest.raises(ConfigurationError):
        analytic_decay_oracle(PopulationConfig(omega={"shape": "box", "c": 1.0}))


def test_separable_oracle_against_closed_form():
    cfg = PopulationConfig(T=2.0, b=SEP)
    u = analytic_decay_oracle(cfg, 1e-3)
    assert u(1.0)[0] == pytest.approx(SEPARABLE_U1, rel=1e-13)
    assert u(2.0)[0] == pytest.approx(SEPARABLE_U2, rel=1e-13)


def test_solve_matches_oracle():
    cfg = PopulationConfig(n_space=9, T=2.0, b=SEP, psi={"kind": "constant", "value": 1.0, "profile": "sine"})
    traj = solve(build_instance(cfg, 1e-3), None, SolverConfig(h=1e-3))
    oracle = analytic_decay_oracle(cfg, 1e-3)
    assert np.max(np.abs(traj.knots()[1] - oracle.knots()[1])) <= 1e-6


def test_table_b_cumulative_is_exact_for_piecewise_linear():
    spec = {"kind": "table", "times": [0.0, 1.0, 2.0], "values": [1.0, 3.0, 1.0]}
    assert b_cumulative(spec, 0.0, [2.0], [0.5])[0, 0] == pytest.approx(4.0)
    assert b_cumulative(spec, 0.0, [0.5], [0.5])[0, 0] == pytest.approx(0.5 + 0.25)


def test_spatial_refinement_of_l2_norm():
    def norm_at_T(n):
        cfg = PopulationConfig(n_space=n, T=1.0, b={"kind": "affine_x", "base": 1.0, "slope": 1.0},
                               psi={"kind": "constant", "value": 1.0, "profile": "sine"})
        return cfg.space.norm(analytic_decay_oracle(cfg, 1e-2)(1.0))

    diffs = [abs(norm_at_T(n) - norm_at_T(2 * n - 1)) for n in (11, 21, 41)]
    assert diffs[1] < diffs[0] / 3 and diffs[2] < diffs[1] / 3


def test_nonnegativity_preserved():
    cfg = PopulationConfig(n_space=7, T=2.0, b=SEP, g={"kind": "logistic", "rate": 2.0},
                           omega={"shape": "ball", "R": 0.3}, psi={"kind": "exponential", "profile": "bump"},
                           impulse_times=(1.0,), impulses=({"kind": "saturating", "level": 0.2},))
    sel = SelectionStrategy("vertex", direction=np.array(1.0), radius=0.3)
    traj = solve(build_instance(cfg, 2e-3), sel, SolverConfig(h=2e-3))
    assert traj.knots()[1].min() >= -1e-12


def test_quadratic_law_flagged():
    rep = verify_hypotheses(PopulationConfig(g={"kind": "quadratic", "h": 1.0}))
    assert not rows(rep)["(g4)"]["ok"]


def test_omega_growth_counterexample():
    rep = verify_hypotheses(PopulationConfig(omega={"shape": "ball", "R": 2.0}),
                            samples={"controls": [(np.array([1.0]), np.array([5.0]))]})
    assert not rows(rep)["(Omega4)"]["ok"]


def test_assumed_items_listed():
    r = rows(verify_hypotheses(PopulationConfig()))
    for key in ("(b1)", "(Omega2)", "(Omega3)"):
        assert "assumed by construction" in r[key]["note"]


def test_bad_schedule_named():
    with pytest.raises(ConfigurationError) as err:
        PopulationConfig(T=1.0, impulse_times=(2.0,), impulses=({"kind": "constant"},))
    assert err.value.field == "schedule.times"
