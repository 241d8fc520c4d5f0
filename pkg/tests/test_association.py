import numpy as np
import pytest
from hypothesis import given, strategies as st

from hetnet_icic.association import (AssociationError, BiasConfig, associate, associate_all,
                                     rsrp_dbm)
from oracles import association_violations


def test_rsrp_examples():
    r = rsrp_dbm([46.0, 30.0], [[-114.1], [-62.3]])
    assert r[0, 0, 0] == pytest.approx(-68.1, abs=1e-12)
    assert r[1, 0, 0] == pytest.approx(-32.3, abs=1e-12)
    muted = rsrp_dbm([46.0, 30.0], [[-114.1], [-62.3]], transmits=[[True], [False]])
    assert muted[1, 0, 0] == -np.inf
    assert associate(muted[:, 0, 0], [0.0, 12.0]) == (0, False)


def test_associate_examples():
    assert associate([-80.0, -88.0], [0.0, 12.0]) == (1, True)
    assert associate([-80.0, -88.0], [0.0, 0.0]) == (0, False)
    assert associate([-80.0, -86.0], [6.0, 12.0]) == (0, False)
    # equal biased RSRP: lower id
    assert associate([-80.0, -92.0], [0.0, 12.0]) == (0, False)


def test_no_candidate():
    with pytest.raises(AssociationError):
        associate([], [])
    with pytest.raises(AssociationError):
        associate([-np.inf, -np.inf], [0.0, 0.0])


def test_bias_config():
    b = BiasConfig(np.array([[0.0, 6.0], [12.0, 0.0]]))
    assert np.allclose(b.lin, 10 ** (b.bias_db / 10), atol=1e-12)
    with pytest.raises(AssociationError):
        BiasConfig(np.array([[3.0]]))
    with pytest.raises(AssociationError):
        associate_all(np.zeros((2, 3, 1)), BiasConfig.zeros(3, 1))


def test_unserved_when_all_silent():
    rsrp = np.full((2, 1, 2), -70.0)
    rsrp[:, :, 1] = -np.inf
    a = associate_all(rsrp, BiasConfig.zeros(2, 2))
    assert a.serving[0, 0] == 0 and a.serving[0, 1] == -1
    assert not a.expanded.any()


def test_property_suite_1000_instances():
    assert association_violations(1000, seed=0) == []


@given(st.lists(st.integers(-120, -60), min_size=2, max_size=6), st.integers(-100, 100))
def test_common_shift_of_rsrp_and_bias(rsrp, c):
    r = np.array(rsrp, float)
    b = np.zeros_like(r)
    b[1:] = 12.0
    assert associate(r, b)[0] == associate(r + c, b + c)[0]
