import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hetnet_icic.engine import SimConfig, run_drop
from hetnet_icic.learn_sat import (EquilibriumDetector, SatisfactionScheme, SatLearnerState,
                                   apply_floor, detect_equilibrium, learning_rate, prob_update,
                                   sample_actions, sat_select_action, step_size, target_utility,
                                   utility)
from hetnet_icic.topology import ScenarioConfig, generate_layout
from oracles import run_toy_game, toy_equilibria


def test_utility_examples():
    assert utility([1.0]) == 1.0
    assert utility(np.zeros(50)) == 0.0
    assert utility([3.0, 3.0]) == 4.0
    assert utility([3.0, np.nan]) == 2.0
    assert target_utility(50) == pytest.approx(50 * math.log2(101))


def test_step_size_examples():
    assert step_size(10.0, 4.0, 10.0) == 0.5
    assert step_size(6.0, 4.0, 10.0) == 0.0
    assert step_size(14.0, 4.0, 10.0) == 1.0
    assert step_size(0.0, 4.0, 10.0) == 0.0
    with pytest.raises(ValueError):
        step_size(1.0, 0.0, 1.0)


def test_prob_update_examples():
    raw = prob_update(np.full(4, 0.25), 0, 0.5, 1.0, floor=None)
    assert list(raw) == [0.625, 0.125, 0.125, 0.125]
    assert raw.sum() == pytest.approx(1.0, abs=1e-9)
    pi = np.array([0.1, 0.2, 0.3, 0.4])
    assert np.array_equal(prob_update(pi, 2, 0.0, 0.7), pi)


def test_repeated_reinforcement_converges_to_floor_limit():
    pi = np.full(4, 0.25)
    prev = pi[1]
    for _ in range(3000):
        pi = prob_update(pi, 1, 0.5, 0.2)
        assert pi[1] >= prev - 1e-15
        prev = pi[1]
    assert pi[1] == pytest.approx(1 - 3 * 1e-3, abs=1e-9)
    assert pi.min() == pytest.approx(1e-3)


@settings(max_examples=200)
@given(st.lists(st.floats(0, 1), min_size=2, max_size=12), st.integers(0, 11),
       st.floats(0, 1), st.floats(0, 1))
def test_update_keeps_valid_distribution(w, a, b, tau):
    w = np.array(w) + 1e-6
    pi = apply_floor(w / w.sum())
    a = a % len(pi)
    raw = prob_update(pi, a, b, tau, floor=None)
    assert raw.sum() == pytest.approx(1.0, abs=1e-9)
    out = prob_update(pi, a, b, tau)
    assert out.sum() == pytest.approx(1.0, abs=1e-9)
    assert out.min() >= 1e-3 - 1e-15


def test_apply_floor():
    out = apply_floor(np.array([1.0, 0.0, 0.0, 0.0]))
    assert np.allclose(out, [0.997, 0.001, 0.001, 0.001])
    with pytest.raises(ValueError):
        apply_floor(np.full(4, 0.25), floor=0.3)


def test_learning_rate_decreasing():
    taus = [learning_rate(k) for k in range(100)]
    assert taus[0] == 1.0 and all(x > y > 0 for x, y in zip(taus, taus[1:]))


def test_satisfied_player_freezes():
    rng = np.random.default_rng(0)
    st_ = SatLearnerState(np.full(4, 0.25))
    first = sat_select_action(st_, 0.0, 4.0, 2.0, rng)
    pi = st_.pi.copy()
    for _ in range(50):
        assert sat_select_action(st_, 3.0, 4.0, 2.0, rng) == first
        assert np.array_equal(st_.pi, pi)
    assert st_.satisfied


def test_unsatisfied_player_visits_every_action():
    rng = np.random.default_rng(1)
    st_ = SatLearnerState(np.full(4, 0.25))
    seen = np.zeros(4, int)
    for _ in range(100_000):
        a = sat_select_action(st_, 0.5, 4.0, 2.0, rng)
        seen[a] += 1
    assert np.all(seen > 0)
    assert st_.pi.min() >= 1e-3 - 1e-15


def test_sample_actions_distribution():
    rng = np.random.default_rng(2)
    pi = np.tile([0.1, 0.2, 0.3, 0.4], (100_000, 1))
    freq = np.bincount(sample_actions(pi, rng), minlength=4) / 1e5
    assert np.allclose(freq, [0.1, 0.2, 0.3, 0.4], atol=0.01)


def test_detect_equilibrium_examples():
    acts = np.tile([[1, 2]], (500, 1))
    assert detect_equilibrium(acts, np.ones((500, 2), bool))
    sat = np.ones((500, 2), bool)
    sat[-1, 1] = False
    assert not detect_equilibrium(acts, sat)
    moving = acts.copy()
    moving[250, 0] = 3
    assert not detect_equilibrium(moving, np.ones((500, 2), bool))
    assert not detect_equilibrium(acts[:499], np.ones((499, 2), bool))


@given(st.lists(st.tuples(st.integers(0, 2), st.booleans()), min_size=1, max_size=80),
       st.integers(1, 10))
def test_online_detector_matches_batch(seq, window):
    acts = np.array([[a] for a, _ in seq])
    sat = np.array([[s] for _, s in seq])
    det = EquilibriumDetector(window)
    for t in range(len(seq)):
        assert det.update(t, acts[t], sat[t]) == detect_equilibrium(acts[:t + 1], sat[:t + 1], window)


def test_toy_game_reaches_equilibrium():
    eq = set(toy_equilibria())
    assert eq == {(2, 2), (3, 3)}
    fired = 0
    for seed in range(20):
        t, prof = run_toy_game(seed)
        if t >= 0:
            fired += 1
            assert prof in eq
    assert fired >= 19


def test_scheme_on_network():
    lay = generate_layout(ScenarioConfig(seed=4))
    s = SatisfactionScheme()
    r = run_drop(lay, s, SimConfig(num_ttis=100, warmup=10), 2)
    assert s.state.pi.shape == (lay.n_pico, 50, 4)
    assert np.allclose(s.state.pi.sum(axis=-1), 1.0, atol=1e-9)
    assert s.state.pi.min() >= 1e-3 - 1e-15
    assert np.all(s.u_max > 0) and np.all(s.u_max >= s.u_target - 1e-9)
    assert r.complexity.memory_units_sat == 12 * 50
    rows = list(s.sat_log())
    assert len(rows) == lay.n_pico
