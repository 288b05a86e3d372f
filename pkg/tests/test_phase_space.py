import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from impulsive_delay.exceptions import ConfigurationError, DomainError, IntegrabilityError
from impulsive_delay.phase_space import (
    BoundedTail,
    ExponentialTail,
    FadingWeight,
    History,
    PhaseSpaceConstants,
    StateSpace,
    check_B4,
    check_fading,
    seminorm,
    seminorm_with_bound,
    weighted_history_integral,
)
from oracles import exp_history_seminorm

W = FadingWeight(1.0, 1.0)


def test_weight_basics():
    assert W.rho(0.0) == 1.0
    assert W.rho(-2.0) == pytest.approx(math.exp(-2))
    assert W.tail_mass(3.0) == pytest.approx(math.exp(-3))
    assert W.default_cutoff(1e-8) == pytest.approx(1.0 + math.log(1e8))


def test_constant_history_seminorm_exact():
    h = History.constant(2.0, 1.0, 0.1)
    assert seminorm(h, W) == pytest.approx(2.0 * (1 + math.exp(-1)), rel=1e-14)


@pytest.mark.parametrize("rate", [0.5, 1.0, 3.0])
def test_exponential_history_seminorm(rate):
    h = History.exponential(1.5, rate, 1.0, 1e-3)
    assert seminorm(h, W) == pytest.approx(exp_history_seminorm(1.5, rate), abs=1e-6)


def test_non_integrable_tail_raises():
    h = History.exponential(1.0, -2.0, 1.0, 0.1)
    with pytest.raises(IntegrabilityError):
        seminorm(h, W)


def test_history_integral_of_exponential():
    h = History.exponential(1.0, 1.0, 1.0, 1e-3)
    assert weighted_history_integral(h)[0] == pytest.approx(1.0, abs=1e-6)


def test_history_inputs_not_mutated():
    theta = np.array([-1.0, -0.5, 1e-15])
    vals = np.ones((3, 1))
    History(theta, vals, 1.0, ExponentialTail(np.ones(1)))
    assert theta[-1] == 1e-15 and vals.flags.writeable


def test_jump_evaluation_sides():
    theta = [-1.0, -0.5, -0.5, 0.0]
    vals = [[0.0], [1.0], [3.0], [3.0]]
    h = History(theta, vals, 1.0, ExponentialTail(np.zeros(1)))
    assert h.evaluate(-0.5, "L")[0] == 1.0
    assert h.evaluate(-0.5, "R")[0] == 3.0
    assert h.evaluate(-0.75)[0] == pytest.approx(0.5)
    assert len(h.jumps) == 1


def test_grid_must_cover_window():
    with pytest.raises(ConfigurationError):
        History([-0.5, 0.0], [[1.0], [1.0]], 1.0, ExponentialTail(np.ones(1)))


@pytest.mark.parametrize("mult", [2, 4, 8])
def test_tail_truncation_within_bound(mult):
    h = History.exponential(1.0, 0.5, 1.0, 1e-3)
    exact = seminorm(h, W)
    approx, bound = seminorm_with_bound(h.discretize_tail(mult * 1.0, 1e-3), W)
    assert abs(approx - exact) <= bound


def test_truncation_removes_mass():
    h = History.exponential(1.0, 1.0, 1.0, 1e-2)
    cut = h.truncated(3.0)
    assert weighted_history_integral(h)[0] - weighted_history_integral(cut)[0] == pytest.approx(math.exp(-3))


def test_fading_exact_for_exponential_family():
    samples = [(xi, th) for xi in np.linspace(-4, 0, 9) for th in np.linspace(-6, -1.01, 7)]
    assert check_fading(W, samples).passed


def test_fading_fails_for_faster_P():
    samples = [(-1.0, -2.0)]
    assert not check_fading(FadingWeight(1.0, 1.0, p_rate=2.0), samples).passed


def test_fading_sample_domain():
    with pytest.raises(DomainError):
        check_fading(W, [(0.5, -2.0)])


def test_calibrated_constants():
    c = PhaseSpaceConstants.calibrated(W)
    assert c.K(0.3) == pytest.approx(2 + math.exp(-1))
    assert c.M(0.0) == pytest.approx(1 + math.exp(-1))


def test_B4_reports_violations():
    class Flat:
        t0, T = 0.0, 1.0
        initial_history = History.constant(1.0, 1.0, 0.1)

        def knots(self):
            return np.array([0.0, 0.5, 0.5, 1.0]), np.array([[1.0], [1.0], [100.0], [100.0]])

    rep = check_B4(Flat(), PhaseSpaceConstants.calibrated(W, H=0.5), W, [0.0, 0.75])
    assert not rep.passed
    assert "0.75" in rep.details["violating_t"]


def test_l2_space_weights():
    sp = StateSpace.l2_unit_interval(11)
    assert sp.weights.sum() == pytest.approx(1.0)
    assert sp.norm(np.ones(11)) == pytest.approx(1.0)


def test_bounded_tail_not_integrable_without_decay():
    h = History.from_samples([-1.0, 0.0], [[1.0], [1.0]], 1.0, sup_bound=1.0, decay=0.0)
    with pytest.raises(IntegrabilityError):
        weighted_history_integral(h)
    assert BoundedTail(1.0, 2.0).integral_bound() == 0.5


coeffs = st.floats(-5, 5, allow_nan=False)
rates = st.floats(0.0, 4.0, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(a=coeffs, ra=rates, b=coeffs, rb=rates, lam=coeffs)
def test_seminorm_laws(a, ra, b, rb, lam):
    ha = History.exponential([a, -a / 2], ra, 1.0, 0.05)
    hb = History.exponential([b, b], rb, 1.0, 0.05)
    na, nb = seminorm(ha, W), seminorm(hb, W)
    assert na >= 0
    assert abs(seminorm(ha * lam, W) - abs(lam) * na) <= 1e-10 * max(1.0, abs(lam) * na)
    assert seminorm(ha + hb, W) <= na + nb + 1e-10
