import numpy as np
import pytest

from hetnet_icic.association import associate_all, BiasConfig
from hetnet_icic.ca_freq import (CarrierPlan, MultiFlowDynamicQL, MultiFlowStaticQL,
                                 SingleFlowQL, mbs_select_primary_cc, pbs_select_primary_cc,
                                 single_flow_association)
from hetnet_icic.engine import SimConfig, run_drop
from hetnet_icic.learn_q import MACRO_HIGH_DBM, MACRO_LOW_DBM, QBank, level_watts
from hetnet_icic.topology import ScenarioConfig, generate_layout


def test_pbs_select_primary_cc():
    bank = QBank(2, 2)
    bank.q[0, 0] = [1.0, 3.0]
    rng = np.random.default_rng(0)
    assert list(pbs_select_primary_cc(bank, np.array([0, 0]), 0.0, rng)) == [0, 0]
    bank.q[1, 4] = [2.0, 1.0]
    assert list(pbs_select_primary_cc(bank, np.array([0, 4]), 0.0, rng)) == [0, 1]
    with pytest.raises(ValueError):
        pbs_select_primary_cc(QBank(1, 3), np.array([0]), 0.0, rng)


def test_mbs_select_primary_cc_examples():
    assert mbs_select_primary_cc([0, 0]) == 1
    assert mbs_select_primary_cc([0, 1], er_counts=[3, 1]) == 1
    assert mbs_select_primary_cc([0, 1], er_counts=[1, 3]) == 0
    assert mbs_select_primary_cc([1]) == 0
    assert mbs_select_primary_cc([0, 1], er_counts=[2, 2]) == 0
    assert mbs_select_primary_cc([]) == 0
    # never the unanimous pico choice
    for c in (0, 1):
        assert mbs_select_primary_cc([c, c, c]) != c


def test_carrier_plan():
    p = CarrierPlan([0, 1], np.zeros((2, 2)))
    assert list(p.secondary) == [1, 0]
    with pytest.raises(ValueError):
        CarrierPlan([2], np.zeros((1, 2)))
    with pytest.raises(ValueError):
        CarrierPlan([0], np.zeros((1, 2)), flow="both")


def test_single_flow_examples():
    # cells: macro 0, pico 1 (primary cc 0, bias 12 there)
    rsrp = np.array([[[-80.0, -80.0], [-80.0, -80.0]],
                     [[-86.0, -86.0], [-60.0, -60.0]]])   # (cell, ue, cc)
    bias = np.array([[0.0, 0.0], [12.0, 0.0]])
    data_cc = np.array([0, 1])          # macro primary 0, pico secondary 1
    a = single_flow_association(rsrp, bias, data_cc)
    # UE0 is an ER PUE: only served on the pico's primary
    assert list(a.serving[0]) == [1, -1] and a.expanded[0, 0]
    # UE1 wins the pico on both carriers: served on the pico secondary
    assert list(a.serving[1]) == [-1, 1] and not a.expanded[1].any()
    assert np.all((a.serving >= 0).sum(axis=1) == 1)


def test_single_flow_zero_bias_is_plain_argmax():
    rng = np.random.default_rng(3)
    rsrp = rng.normal(-90, 10, (5, 40, 2))
    a = single_flow_association(rsrp, np.zeros((5, 2)), np.zeros(5, int))
    assert not a.expanded.any()
    best = np.argmax(rsrp.transpose(1, 0, 2).reshape(40, -1), axis=1) // 2
    assert np.array_equal(a.serving.max(axis=1), best)
    assert np.all((a.serving >= 0).sum(axis=1) == 1)


@pytest.fixture(scope="module")
def layout():
    return generate_layout(ScenarioConfig(seed=17))


class _Spy:
    def __init__(self):
        self.rows = []

    def start_drop(self, net, scheme):
        self.net = net

    def record(self, net, scheme, out):
        self.rows.append((out, net.assoc, scheme.plan))

    def end_drop(self, *a):
        pass


def _run(layout, scheme, K=80):
    spy = _Spy()
    res = run_drop(layout, scheme, SimConfig(num_ttis=K, warmup=10), 5, trace=spy)
    return spy, res


def test_sf_one_serving_pair(layout):
    spy, res = _run(layout, SingleFlowQL())
    net = spy.net
    nm = layout.n_macro
    for out, assoc, plan in spy.rows:
        assert np.all((assoc.serving >= 0).sum(axis=1) == 1)
        for b in range(nm):
            sec = net.grid.cc_rbs(plan.secondary[b])
            assert np.all(out.power[b, sec] <= level_watts(MACRO_LOW_DBM, 50).max() + 1e-15)
        assert np.all(net.cc_power_totals(out.power) <= (net.pmax_w / 2)[:, None] * (1 + 1e-9))
        assert np.all(plan.bias_db[:nm] == 0)
        cc = plan.primary[nm:]
        assert np.all(plan.bias_db[np.arange(nm, net.n_bs), 1 - cc] == 0)
    assert res.complexity.n_actions_pico == 24


def test_mf_per_cc_association(layout):
    spy, res = _run(layout, MultiFlowDynamicQL())
    net = spy.net
    dual = 0
    for out, assoc, plan in spy.rows:
        ref = associate_all(net.rsrp, BiasConfig(plan.bias_db))
        assert np.array_equal(assoc.serving, ref.serving)
        dual += np.sum(assoc.serving[:, 0] != assoc.serving[:, 1])
    assert dual > 0
    got = res.extras["ue_cc_throughput"].sum(axis=1)
    assert np.allclose(got, res.ue_throughput)
    assert res.complexity.n_actions_macro == 9
    assert res.complexity.memory_units_q == (9 * 9 + 9 * 24) * 50


def test_mf_static_macro(layout):
    spy, res = _run(layout, MultiFlowStaticQL(), K=40)
    nm = layout.n_macro
    high = level_watts(MACRO_HIGH_DBM, 50)[-1]
    low = level_watts(MACRO_LOW_DBM, 50)[-1]
    net = spy.net
    for out, assoc, plan in spy.rows:
        assert np.all(plan.bias_db[:nm] == 0)
        for b in range(nm):
            on = net.grid.cc_rbs(plan.primary[b])
            off = net.grid.cc_rbs(plan.secondary[b])
            assert np.all(np.isin(out.power[b, on], [0.0, high]))
            assert np.all(np.isin(out.power[b, off], [0.0, low]))
    assert res.complexity.memory_units_q == 9 * 24 * 50


def test_mf_dynamic_without_picos():
    lay = generate_layout(ScenarioConfig(num_pbs_per_sector=0, seed=3))
    s = MultiFlowDynamicQL()
    r = run_drop(lay, s, SimConfig(num_ttis=60, warmup=10), 1)
    assert np.any(s.macro_q.q != 0)
    assert np.all(r.ue_throughput >= 0)
