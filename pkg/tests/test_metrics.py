import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hetnet_icic.learn_q import OpCounter, q_iteration_counted, q_update
from hetnet_icic.learn_sat import prob_update, prob_update_counted
from hetnet_icic.metrics import (TtiRecord, complexity_report, empirical_cdf, headline,
                                 ops_q, ops_sat, throughput_percentile, write_cdf_csv,
                                 write_summary_json)


def test_percentile_examples():
    assert throughput_percentile(np.full(7, 3.0), 5) == 3.0
    v = np.arange(1, 101) * 1e6
    assert throughput_percentile(v, 50) == pytest.approx(50.5e6)
    assert throughput_percentile(v, 5) == pytest.approx(5.95e6)
    with pytest.raises(ValueError):
        throughput_percentile([], 5)


def test_cdf_and_headline():
    x, F = empirical_cdf([3.0, 1.0, 2.0])
    assert list(x) == [1.0, 2.0, 3.0] and F[-1] == 1.0 and np.all(np.diff(F) > 0)
    h = headline(np.arange(1, 101))
    assert h["num_ues"] == 100 and h["mean"] == 50.5


def test_complexity_examples():
    assert ops_q(5) == 26 and ops_sat(5) == 17
    r = complexity_report(9, 3, 9, 12, 50)
    assert r.memory_units_q == 6750
    assert r.memory_units_sat == 600
    assert complexity_report(0, 0, 9, 12, 50).memory_units_q == 9 * 12 * 50
    with pytest.raises(ValueError):
        complexity_report(9, 3, 0, 12, 50)


@pytest.mark.parametrize("n_a", list(range(1, 101)))
def test_instrumented_counts_match_formulas(n_a):
    rng = np.random.default_rng(n_a)
    Q = rng.normal(size=(9, n_a))
    ref = Q.copy()
    a, new, ops = q_iteration_counted(Q, 2, 3.0, 5)
    assert ops.total == ops_q(n_a) == 4 * n_a + 6
    assert a == int(np.argmin(ref[2]))
    assert new == pytest.approx(q_update(ref, 2, a, 3.0, 5))

    pi = rng.dirichlet(np.ones(n_a))
    out, ops = prob_update_counted(pi, n_a - 1, 2.0, 8.0, 5.0, 0.3)
    assert ops.total == ops_sat(n_a) == 2 * n_a + 7
    b = (8.0 + 2.0 - 5.0) / 16.0
    assert np.allclose(out, prob_update(pi, n_a - 1, b, 0.3, floor=None))
    # a satisfied player only compares
    out, ops = prob_update_counted(pi, 0, 6.0, 8.0, 5.0, 0.3)
    assert out is None and ops.total == 1


def test_op_counter_categories():
    _, _, ops = q_iteration_counted(np.zeros((9, 5)), 0, 1.0, 0)
    assert ops["comparison"] == 8 and ops["memory"] == 10 and ops["state_id"] == 2
    assert set(ops.counts) == set(OpCounter.CATEGORIES)


def test_tti_record_conservation():
    TtiRecord(0, np.array([1.0, 2.0]), np.array([3.0]), {}).check()
    with pytest.raises(AssertionError):
        TtiRecord(0, np.array([1.0, 2.0]), np.array([2.0]), {}).check()


@given(st.lists(st.floats(0, 1e9), min_size=1, max_size=50))
def test_percentiles_are_ordered(v):
    assert throughput_percentile(v, 5) <= throughput_percentile(v, 50) <= max(v)


def test_writers(tmp_path):
    write_cdf_csv(tmp_path / "cdf.csv", [2.0, 1.0])
    assert (tmp_path / "cdf.csv").read_text() == "value,cumulative_probability\n1.0,0.5\n2.0,1.0\n"
    write_summary_json(tmp_path / "s.json", {"b": 1, "a": [1.5]})
    assert json.loads((tmp_path / "s.json").read_text()) == {"a": [1.5], "b": 1}
