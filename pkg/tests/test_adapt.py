import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pseudogt.adapt import AdaptConfig, select_adaptation_examples


def inputs(side=12):
    return st.tuples(
        arrays(float, (side, side), elements=st.floats(0, 1)),
        arrays(bool, (side, side)),
    )


def test_full_confidence_full_mask():
    ex = select_adaptation_examples(np.ones((8, 8)), np.ones((8, 8), bool))
    assert ex.positives.all() and not ex.negatives.any()


def test_zero_confidence_empty_mask():
    ex = select_adaptation_examples(np.zeros((8, 8)), np.zeros((8, 8), bool))
    assert ex.negatives.all() and not ex.positives.any()


def test_negatives_outside_radius_30():
    last = np.zeros((100, 100), bool)
    last[50, 50] = True
    ex = select_adaptation_examples(np.zeros((100, 100)), last, AdaptConfig(negative_distance=30))
    expected = np.array([[(y - 50) ** 2 + (x - 50) ** 2 > 900 for x in range(100)] for y in range(100)])
    assert np.array_equal(ex.negatives, expected)


def test_positive_threshold_inclusive():
    conf = np.array([[0.97, 0.969]])
    ex = select_adaptation_examples(conf, np.ones((1, 2), bool))
    assert ex.positives.tolist() == [[True, False]]


def test_positives_win_conflicts():
    conf = np.zeros((10, 10))
    conf[9, 9] = 1.0
    last = np.zeros((10, 10), bool)
    last[0, 0] = True
    ex = select_adaptation_examples(conf, last, AdaptConfig(negative_distance=3))
    assert ex.positives[9, 9] and not ex.negatives[9, 9]


def test_errors():
    with pytest.raises(ValueError):
        select_adaptation_examples(np.zeros((3, 3)), np.zeros((3, 4), bool))
    with pytest.raises(ValueError):
        select_adaptation_examples(np.full((3, 3), 1.5), np.zeros((3, 3), bool))
    with pytest.raises(ValueError):
        AdaptConfig(positive_threshold=1.0)


@settings(max_examples=100, deadline=None)
@given(inputs(), st.floats(0.05, 0.95), st.floats(0, 10))
def test_partition(data, thr, dist):
    conf, last = data
    ex = select_adaptation_examples(conf, last, AdaptConfig(thr, dist))
    total = ex.positives.astype(int) + ex.negatives + ex.dontcare
    assert (total == 1).all()


@settings(max_examples=60, deadline=None)
@given(inputs(), st.floats(0.05, 0.9), st.floats(0.0, 0.09), st.floats(0, 8), st.floats(0, 4))
def test_monotone_in_thresholds(data, thr, dthr, dist, ddist):
    conf, last = data
    lo = select_adaptation_examples(conf, last, AdaptConfig(thr, dist))
    hi_t = select_adaptation_examples(conf, last, AdaptConfig(thr + dthr, dist))
    hi_d = select_adaptation_examples(conf, last, AdaptConfig(thr, dist + ddist))
    assert not (hi_t.positives & ~lo.positives).any()
    assert not (hi_d.negatives & ~lo.negatives).any()
