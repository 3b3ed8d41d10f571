import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from sinkflow.model import (
    EnergyProfile,
    EpsFlag,
    FlowState,
    InvalidSpecError,
    NetworkSpec,
    Strategy,
    epsilon_chain,
    is_energy_balanced,
    recurrence_residuals,
    slice_energy,
    unit_cost,
    unit_slide_increments,
)

from .conftest import specs


def test_slice_energy_worked_instance(worked):
    flow = FlowState(np.array([0.0, 9.75]), np.array([10.75, 0.25]), np.zeros(2))
    assert slice_energy(flow, worked, 0) == 10.75
    assert slice_energy(flow, worked, 1) == 9.75 + 0.25 * 4
    assert slice_energy(flow, worked, 1, per_sensor=True) == 10.75


def test_slice_energy_trivial_cases(worked):
    flow = FlowState(np.zeros(2), np.zeros(2), np.zeros(2))
    assert slice_energy(flow, worked, 1) == 0
    flow.F[1] = 5
    assert slice_energy(flow, worked, 1) == 5
    with pytest.raises(IndexError):
        slice_energy(flow, worked, 2)


def exact_chain(b, d, first):
    """Solve the per-sensor balance equation exactly, slice by slice."""
    b = [Fraction(x) for x in b]
    d = [Fraction(x) for x in d]
    eps = [Fraction(1)] * (first + 1)
    for k in range(first + 1, len(b)):
        below = ((1 - eps[-1]) + eps[-1] * d[k - 1] ** 2) / b[k - 1]
        # (1 + e (d^2 - 1)) / b_k = (1 - e) * below, linear in e
        eps.append((below - 1 / b[k]) / ((d[k] ** 2 - 1) / b[k] + below))
    return eps


@pytest.mark.parametrize(
    "b, d, expected",
    [
        ((1, 1, 1), (1, 2, 3), (1, 0, 0)),
        ((1, 2), (1, 2), (1, Fraction(1, 5))),
        ((1, Fraction(1, 10), 1), (1, 2, 3), (1, Fraction(-9, 31), Fraction(9, 288))),
    ],
)
def test_epsilon_chain_hand_values(b, d, expected):
    assert exact_chain(b, d, 0) == list(expected)
    chain = epsilon_chain(NetworkSpec([float(x) for x in b], d, [1] * len(b)), 0)
    np.testing.assert_allclose(chain.eps, [float(x) for x in expected], rtol=1e-12, atol=1e-15)
    assert chain.flags[0] is EpsFlag.FORCED_ONE


def test_epsilon_chain_first_is_last():
    spec = NetworkSpec([1, 0.2, 3], [1, 2, 5], [1, 1, 1])
    chain = epsilon_chain(spec, 2)
    assert chain.eps.tolist() == [1, 1, 1]
    assert all(f is EpsFlag.FORCED_ONE for f in chain.flags)


def test_negative_epsilon_clamped_only_when_nothing_ejected():
    spec = NetworkSpec([1, 0.1, 1], [1, 2, 3], [1, 1, 1])
    flow = FlowState.initial(spec)
    flow.J[1] = 0.5
    kept = epsilon_chain(spec, 0, caution=True, flow=flow, current=2)
    assert kept.eps[1] < 0 and kept.clamped == []
    flow.J[1] = 0.0
    clamped = epsilon_chain(spec, 0, caution=True, flow=flow, current=2)
    assert clamped.eps[1] == 0 and clamped.clamped == [1]
    # later entries follow the clamped value: B = 1 / b_1 = 10, A = 8
    assert clamped.eps[2] == pytest.approx((10 - 1) / (8 + 10))
    # slices not yet treated are never clamped
    beyond = epsilon_chain(spec, 0, caution=True, flow=flow, current=0)
    assert beyond.clamped == []


def test_caution_needs_flow():
    spec = NetworkSpec([1, 1], [1, 2], [1, 1])
    with pytest.raises(ValueError):
        epsilon_chain(spec, 0, caution=True)


@settings(max_examples=300, deadline=None)
@given(specs(min_n=2), st.data())
def test_recurrence_residual_and_bounds(spec, data):
    first = data.draw(st.integers(0, spec.n - 1))
    chain = epsilon_chain(spec, first)
    assert np.all(chain.eps <= 1)
    assert np.all(chain.eps[: first + 1] == 1)
    assert recurrence_residuals(spec, chain).max() <= 1e-9


@settings(max_examples=100, deadline=None)
@given(specs(min_n=2))
def test_chain_matches_root_of_balance_equation(spec):
    chain = epsilon_chain(spec, 0)
    for k in range(1, spec.n):
        below = unit_cost(spec, k - 1, chain.eps[k - 1])

        def gap(e):
            return unit_cost(spec, k, e) - (1 - e) * below

        # gap is increasing in e; bracket the root generously below 1
        lo = -1.0
        while gap(lo) > 0:
            lo *= 2
        root = brentq(gap, lo, 1.0, xtol=1e-14, rtol=1e-13)
        assert chain.eps[k] == pytest.approx(root, rel=1e-9, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(specs(min_n=2))
def test_unit_increments_are_equal(spec):
    chain = epsilon_chain(spec, 0)
    for i in range(spec.n):
        m = unit_slide_increments(spec, chain, i)
        assert len(m) == i + 1
        np.testing.assert_allclose(m, m[0], rtol=1e-9)


@pytest.mark.parametrize(
    "b, eps, expected",
    [((1, 1), (1, 0), (1.0, 1.0)), ((1, 2), (1, 0.2), (0.8, 0.8))],
)
def test_unit_increments_hand_values(b, eps, expected):
    spec = NetworkSpec(b, [1, 2], [1, 1])
    chain = epsilon_chain(spec, 0)
    chain.eps[:] = eps
    np.testing.assert_allclose(unit_slide_increments(spec, chain, 1), expected, rtol=1e-12)


def test_unit_increments_first_slice():
    spec = NetworkSpec([2, 1], [1.5, 2], [1, 1])
    chain = epsilon_chain(spec, 0)
    assert unit_slide_increments(spec, chain, 0).tolist() == [1.5**2 / 2]


@settings(max_examples=200, deadline=None)
@given(specs(min_n=2, b_range=(0.01, 5.0)), st.data())
def test_clamping_only_changes_clamped_and_downstream(spec, data):
    current = data.draw(st.integers(0, spec.n - 1))
    flow = FlowState.initial(spec)
    flow.J[:] = [data.draw(st.sampled_from([0.0, 1.0])) for _ in range(spec.n)]
    free = epsilon_chain(spec, 0)
    careful = epsilon_chain(spec, 0, caution=True, flow=flow, current=current)
    clamped = careful.clamped
    for k in clamped:
        assert careful.eps[k] == 0
        assert flow.J[k] == 0 and k <= current
    cut = min(clamped) if clamped else spec.n
    if clamped:
        assert free.eps[cut] <= 0
    assert np.array_equal(careful.eps[:cut], free.eps[:cut])
    assert recurrence_residuals(spec, careful).max() <= 1e-9


def test_energy_balance():
    assert is_energy_balanced(EnergyProfile([10.75, 10.75]))
    assert not is_energy_balanced(EnergyProfile([10, 4]))
    assert is_energy_balanced(EnergyProfile([3.7]))
    assert is_energy_balanced(EnergyProfile([1e9, 1e9 * (1 + 1e-12)]))


def test_lifespan():
    assert EnergyProfile([10.75, 10.75]).lifespan == 1 / 10.75
    assert EnergyProfile([0.0, 0.0]).lifespan == math.inf


@pytest.mark.parametrize(
    "b, d, g, field",
    [
        ([1, 0], [1, 2], [1, 1], "b"),
        ([1, 1], [0.5, 2], [1, 1], "d"),
        ([1, 1], [2, 1], [1, 1], "d"),
        ([1, 1], [1, 2], [1, -1], "g"),
        ([1, 1], [1, 2], [1], "n"),
        ([], [], [], "n"),
        ([1, float("nan")], [1, 2], [1, 1], "b"),
    ],
)
def test_invalid_specs(b, d, g, field):
    with pytest.raises(InvalidSpecError) as info:
        NetworkSpec(b, d, g)
    assert info.value.field == field


def test_strategy_invariants():
    with pytest.raises(ValueError):
        Strategy([0.5, 0.5])
    with pytest.raises(ValueError):
        Strategy([0, 1.2])
    assert Strategy([0, 1]).p.tolist() == [0, 1]
