import numpy as np
from hypothesis import given, settings, strategies as st

from hetnet_icic.scheduling import (UNASSIGNED, PfState, er_rb_mask, er_rb_report,
                                    pf_schedule, pf_schedule_all)


def test_single_ue_gets_everything():
    out = pf_schedule([3], np.ones((1, 6)), np.ones(6, bool), [1.0])
    assert list(out) == [3] * 6


def test_tie_goes_to_lowest_id():
    out = pf_schedule([7, 2], np.ones((2, 4)), np.ones(4, bool), [5.0, 5.0])
    assert list(out) == [2] * 4


def test_mask_respected():
    mask = np.array([True, False, True, False])
    out = pf_schedule([0, 1], np.ones((2, 4)), mask, [1.0, 2.0])
    assert list(out) == [0, UNASSIGNED, 0, UNASSIGNED]
    assert list(pf_schedule([], np.zeros((0, 4)), mask, [])) == [UNASSIGNED] * 4


def test_pf_metric():
    inst = np.array([[10.0, 1.0], [4.0, 4.0]])
    out = pf_schedule([0, 1], inst, np.ones(2, bool), [5.0, 1.0])
    # metrics: ue0 (2, 0.2), ue1 (4, 4)
    assert list(out) == [1, 1]


def test_pf_state_update_and_floor():
    s = PfState(2)
    assert np.all(s.avg_rate == 1.0)
    s.update(np.array([[100.0], [0.0]]))
    assert s.avg_rate[0, 0] == 0.99 * 1.0 + 0.01 * 100.0
    assert s.avg_rate[1, 0] == 1.0


def test_pf_fairness_symmetric_ues():
    rng = np.random.default_rng(0)
    n_ue, R, K = 5, 10, 10_000
    state = PfState(n_ue)
    share = np.zeros(n_ue)
    for _ in range(K):
        inst = 1e5 * rng.exponential(size=(n_ue, R))
        a = pf_schedule(np.arange(n_ue), inst, np.ones(R, bool), state.avg_rate[:, 0])
        served = np.zeros((n_ue, 1))
        np.add.at(served[:, 0], a, inst[a, np.arange(R)])
        np.add.at(share, a, 1)
        state.update(served)
    share /= share.sum()
    assert np.all(np.abs(share - 1 / n_ue) <= 0.05 / n_ue)


@settings(max_examples=100)
@given(seed=st.integers(0, 2**32 - 1), n_bs=st.integers(1, 5), n_ue=st.integers(1, 12),
       R=st.integers(1, 8))
def test_vectorized_matches_per_bs(seed, n_bs, n_ue, R):
    rng = np.random.default_rng(seed)
    inst = rng.integers(1, 5, (n_ue, R)).astype(float)
    serving = np.repeat(rng.integers(0, n_bs, n_ue)[:, None], R, axis=1)
    avg = rng.integers(1, 4, (n_ue, 1)).astype(float)
    mask = rng.random((n_bs, R)) < 0.7
    all_ = pf_schedule_all(inst, serving, np.repeat(avg, R, 1), mask, n_bs)
    for b in range(n_bs):
        cand = np.flatnonzero(serving[:, 0] == b)
        row = pf_schedule(cand, inst[cand], mask[b], avg[cand, 0])
        assert np.array_equal(all_[b], row)
        # scheduled UEs belong to the BS, nothing where masked
        assert np.all(all_[b][~mask[b]] == UNASSIGNED)
        assert set(all_[b][all_[b] >= 0]) <= set(cand)


def test_er_rb_report_examples():
    R = 10
    expanded = np.zeros((3, R), bool)
    row = np.array([0, 1, 2, 1, 0, 0, 1, 2, 0, -1])
    assert er_rb_report(row, expanded) == set()
    expanded[2] = True
    assert er_rb_report(row, expanded) == {2, 7}
    assert er_rb_report(np.full(R, 2), expanded) == set(range(R))
    mask = er_rb_mask(row[None, :], expanded)
    assert set(np.flatnonzero(mask[0])) == {2, 7}


@given(st.lists(st.integers(-1, 4), min_size=1, max_size=20), st.integers(0, 2**32 - 1))
def test_er_report_subset_of_scheduled(row, seed):
    row = np.array(row)
    expanded = np.random.default_rng(seed).random((5, row.size)) < 0.5
    rep = er_rb_report(row, expanded)
    assert rep <= set(np.flatnonzero(row >= 0))
    assert rep == set(np.flatnonzero(er_rb_mask(row[None, :], expanded)[0]))
