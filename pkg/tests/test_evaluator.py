import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sinkflow.evaluator import (
    Configuration,
    brute_force_oracle,
    check_tabletop_optimality,
    energies,
    evaluate_strategy,
    grid_slack,
    no_win_win_probe,
)
from sinkflow.model import NetworkSpec, Strategy
from sinkflow.optimizer import compute_optimal

from .conftest import specs


def config(spec, p):
    return Configuration(spec, Strategy(p))


def test_evaluate_worked_instance(worked):
    flow, profile = evaluate_strategy(config(worked, [0, 0.975]))
    np.testing.assert_allclose(profile.e, [10.75, 10.75], rtol=1e-12)
    np.testing.assert_allclose(flow.F, [0, 9.75])
    np.testing.assert_allclose(flow.J, [10.75, 0.25])


def test_evaluate_all_eject():
    spec = NetworkSpec([1, 2, 0.5], [1, 2, 3], [3, 4, 5])
    _, profile = evaluate_strategy(config(spec, [0, 0, 0]))
    np.testing.assert_allclose(profile.e, spec.g * spec.d**2 / spec.b)


def test_evaluate_full_funnel():
    spec = NetworkSpec([1, 1, 1], [1, 2, 3], [3, 4, 5])
    flow, profile = evaluate_strategy(config(spec, [0, 1, 1]))
    # slice 1 ejects everything; slice 2 slides its own 4 plus 5 from slice 3
    np.testing.assert_allclose(profile.e, [12, 9, 5])
    np.testing.assert_allclose(flow.F, [0, 9, 5])


def test_evaluate_length_mismatch(worked):
    with pytest.raises(ValueError):
        Configuration(worked, Strategy([0, 0, 0]))


@settings(max_examples=200, deadline=None)
@given(specs(min_n=1, max_n=6), st.data())
def test_vectorised_energies_agree(spec, data):
    p = [0.0] + [data.draw(st.floats(0, 1)) for _ in range(spec.n - 1)]
    _, profile = evaluate_strategy(config(spec, p))
    np.testing.assert_allclose(energies(spec, np.array(p)), profile.e, rtol=1e-12)


@settings(max_examples=200, deadline=None)
@given(specs(min_n=1, max_n=6), st.data())
def test_evaluated_flows_conserve(spec, data):
    p = [0.0] + [data.draw(st.floats(0, 1)) for _ in range(spec.n - 1)]
    flow, _ = evaluate_strategy(config(spec, p))
    assert np.abs(flow.conservation_residuals(spec)).max() <= 1e-12 * max(1, spec.total_messages)
    assert flow.F.min() >= 0 and flow.J.min() >= 0


# -- tabletop -----------------------------------------------------------------


def test_tabletop_balanced(worked):
    rep = check_tabletop_optimality(config(worked, [0, 0.975]))
    assert rep.k == 1 and rep.l is None
    assert rep.left_condition is None and rep.right_condition is None
    assert rep.optimal


def test_tabletop_little_messages(little_messages):
    rep = check_tabletop_optimality(config(little_messages, [0, 0]))
    assert rep.k == 0 and rep.left_condition is True
    assert rep.l is None and rep.right_condition is None
    assert rep.optimal


def test_tabletop_not_optimal(worked):
    # F_2 = J_2 = 5: E_1 = 1 + 5 = 6, E_2 = 5 + 5 * 4 = 25
    rep = check_tabletop_optimality(config(worked, [0, 0.5]))
    np.testing.assert_allclose(rep.profile.e, [6, 25])
    assert rep.k == 1 and rep.left_condition is None
    assert rep.l == 0 and rep.right_condition is False
    assert not rep.optimal
    assert rep.violated == ["right_condition"]


def test_tabletop_below_plateau_not_constrained():
    # max is pinned at slice 1 (g_1 d_1^2); slices further out are free
    spec = NetworkSpec([1, 1, 1], [1, 2, 3], [10, 1, 1])
    sol = compute_optimal(spec)
    assert 0 < sol.strategy.p[2] < 1
    rep = check_tabletop_optimality(Configuration(spec, sol.strategy))
    assert rep.k == 0 and rep.left_condition is True and rep.optimal


def test_tabletop_left_violation(little_messages):
    rep = check_tabletop_optimality(config(little_messages, [0, 0.5]))
    assert rep.k == 0 and rep.left_condition is False and not rep.optimal


def test_tabletop_detects_grid_losers():
    spec = NetworkSpec([1, 0.4, 2], [1, 1.5, 3], [2, 6, 9])
    best = brute_force_oracle(spec, 0.05).max_energy
    axis = np.linspace(0, 1, 21)
    for p1, p2 in itertools.product(axis, axis):
        rep = check_tabletop_optimality(config(spec, [0, p1, p2]))
        if rep.optimal:
            assert rep.max_value <= best * (1 + 1e-9)


# -- oracle ---------------------------------------------------------------------


def test_oracle_worked(worked):
    res = brute_force_oracle(worked, 0.025)
    assert res.strategy.p.tolist() == [0, 0.975]
    assert res.lifespan == pytest.approx(1 / 10.75, rel=1e-12)
    assert res.points == 41


def test_oracle_little_messages(little_messages):
    for step in (0.5, 0.1, 0.01):
        assert brute_force_oracle(little_messages, step).strategy.p.tolist() == [0, 0]


def test_oracle_single_slice():
    spec = NetworkSpec([2], [1.5], [4])
    res = brute_force_oracle(spec)
    assert res.strategy.p.tolist() == [0]
    assert res.lifespan == pytest.approx(2 / (4 * 1.5**2))


def test_oracle_limits():
    with pytest.raises(ValueError):
        brute_force_oracle(NetworkSpec([1] * 6, [1] * 6, [1] * 6))
    with pytest.raises(ValueError):
        brute_force_oracle(NetworkSpec([1, 1], [1, 2], [1, 1]), 0.3)


def test_oracle_ties_lexicographic():
    # d = 1 everywhere: every strategy costs the same at slice 2
    spec = NetworkSpec([1, 1, 1], [1, 1, 1], [0, 0, 1])
    res = brute_force_oracle(spec, 0.5)
    assert res.strategy.p.tolist() == [0, 0, 0]


def test_oracle_jobs_deterministic():
    spec = NetworkSpec([1, 0.3, 2, 1], [1, 2, 2.5, 4], [3, 1, 7, 2])
    a = brute_force_oracle(spec, 0.02, jobs=1)
    b = brute_force_oracle(spec, 0.02, jobs=4)
    assert np.array_equal(a.strategy.p, b.strategy.p) and a.lifespan == b.lifespan


@settings(max_examples=30, deadline=None)
@given(specs(min_n=2, max_n=3))
def test_grid_slack_bounds_grid_error(spec):
    sol = compute_optimal(spec)
    res = brute_force_oracle(spec, 0.05)
    assert res.max_energy <= sol.profile.max_energy + grid_slack(spec, 0.05) * (1 + 1e-9) + 1e-12
    assert sol.profile.max_energy <= res.max_energy * (1 + 1e-9) + 1e-12


def test_lifespan_slack():
    spec = NetworkSpec([1, 1], [1, 2], [1, 10])
    res = brute_force_oracle(spec, 0.01)
    assert res.energy_slack == pytest.approx(0.01 * 30)
    assert res.lifespan_slack(10.75) == pytest.approx(1 / 10.75 - 1 / 11.05)


# -- no win-win ---------------------------------------------------------------


def test_no_win_win_examples(worked):
    c = config(worked, [0, 0.975])
    assert no_win_win_probe(c, c) == 0
    eject_all = config(worked, [0, 0])
    _, e = evaluate_strategy(eject_all)
    np.testing.assert_allclose(e.e, [1, 40])
    assert no_win_win_probe(c, eject_all) == 0
    assert no_win_win_probe(eject_all, c) == 1


@settings(max_examples=300, deadline=None)
@given(specs(min_n=1, max_n=6), st.data())
def test_no_win_win_property(spec, data):
    def draw_p():
        return [0.0] + [data.draw(st.floats(0, 1)) for _ in range(spec.n - 1)]

    c1, c2 = config(spec, draw_p()), config(spec, draw_p())
    assert no_win_win_probe(c1, c2) is not None
    assert no_win_win_probe(c2, c1) is not None


def test_no_win_win_rejects_mixed_specs(worked, little_messages):
    with pytest.raises(ValueError):
        no_win_win_probe(config(worked, [0, 0]), config(little_messages, [0, 0]))
