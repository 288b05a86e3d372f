import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from impulsive_delay.evolution import (
    MultiplicationEvolution,
    check_composition,
    check_identity,
    estimate_D,
)
from impulsive_delay.exceptions import DomainError, HypothesisViolation


def test_constant_rate_factor():
    ev = MultiplicationEvolution.from_callable(lambda t: [1.0], 0.0, 2.0, 0.01)
    assert ev.apply(2.0, 0.5, np.array([1.0]))[0] == pytest.approx(math.exp(-1.5), rel=1e-14)


def test_spatially_varying_rate():
    x = np.linspace(0, 1, 5)
    ev = MultiplicationEvolution.from_callable(lambda t: x, 0.0, 1.0, 0.1)
    f = ev.factor(1.0, 0.0)
    assert f[0] == 1.0
    assert f[-1] == pytest.approx(math.exp(-1))


def test_negative_rate_rejected():
    with pytest.raises(HypothesisViolation):
        MultiplicationEvolution([0.0, 1.0], [[-1.0], [-1.0]])


def test_signed_rate_bound():
    ev = MultiplicationEvolution([0.0, 1.0], [[-1.0], [-1.0]], allow_signed=True)
    assert estimate_D(ev, np.linspace(0, 1, 11)) == pytest.approx(math.e)
    assert not ev.validate().passed


def test_D_is_one_for_nonnegative_rates():
    ev = MultiplicationEvolution.from_callable(lambda t: [2 + math.sin(t)], 0.0, 3.0, 0.01)
    assert estimate_D(ev, np.linspace(0, 3, 31)) == 1.0


def test_triangle_enforced():
    ev = MultiplicationEvolution([0.0, 1.0], [[1.0], [1.0]])
    with pytest.raises(DomainError):
        ev.apply(0.2, 0.5, np.ones(1))


def test_exact_cumulative_is_used():
    t = np.linspace(0, 1, 3)
    ev = MultiplicationEvolution(t, np.ones((3, 1)), cumulative=t[:, None] * 2)
    assert ev.factor(1.0, 0.0)[0] == pytest.approx(math.exp(-2))


def test_identity_exact():
    ev = MultiplicationEvolution.from_callable(lambda t: [1 + t, 2.0], 0.0, 1.0, 0.01)
    assert check_identity(ev, [0.0, 0.3, 1.0], [np.array([1.0, -2.0])]).passed


@settings(max_examples=40, deadline=None)
@given(
    b=st.lists(st.floats(0.0, 50.0), min_size=4, max_size=12),
    frac=st.lists(st.floats(0.0, 1.0), min_size=3, max_size=3),
)
def test_composition_law(b, frac):
    times = np.linspace(0.0, 2.0, len(b))
    ev = MultiplicationEvolution(times, np.array(b)[:, None])
    s, r, t = sorted(2.0 * np.array(frac))
    rep = check_composition(ev, [(t, r, s)], [np.array([1.0]), np.array([-3.0])])
    assert rep.passed, rep.details
