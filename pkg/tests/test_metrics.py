import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import gap_bruteforce
from mlvc.metrics import (UndefinedMetric, evaluate, global_average_precision, hit_at_one, per_example_perr, perr,
                          top_k_indices)


def _instance(rng):
    N, L = int(rng.integers(1, 20)), int(rng.integers(1, 12))
    pred = np.round(rng.random((N, L)), int(rng.integers(1, 4)))   # coarse rounding forces ties
    labels = rng.random((N, L)) < 0.3
    labels[0, 0] = True
    return pred, labels


def test_worked_example():
    pred = np.array([[0.9, 0.7], [0.1, 0.8]])
    labels = np.array([[1, 1], [0, 0]])
    assert global_average_precision(pred, labels, top_k=2) == pytest.approx(5 / 6)


def test_perfect_predictor_scores_one():
    labels = np.random.default_rng(0).random((30, 40)) < 0.7     # many videos exceed 20 labels
    labels[:, 0] = True
    assert global_average_precision(labels.astype(float), labels) == pytest.approx(1.0)


@pytest.mark.parametrize("top_k", [1, 3, 20])
def test_matches_bruteforce_with_ties(top_k):
    rng = np.random.default_rng(top_k)
    for _ in range(40):
        pred, labels = _instance(rng)
        assert global_average_precision(pred, labels, top_k) == pytest.approx(gap_bruteforce(pred, labels, top_k),
                                                                            abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.floats(1e-3, 1e3))
def test_invariant_to_positive_scaling_and_monotone_maps(seed, c):
    pred, labels = _instance(np.random.default_rng(seed))
    base = global_average_precision(pred, labels)
    assert global_average_precision(pred * c, labels) == pytest.approx(base, abs=1e-12)
    assert global_average_precision(np.sqrt(pred), labels) == pytest.approx(base, abs=1e-12)


def test_single_video_all_positive_any_order():
    pred = np.random.default_rng(1).random((1, 6))
    assert global_average_precision(pred, np.ones((1, 6)), top_k=10**6) == pytest.approx(1.0)


def test_no_positives_is_undefined():
    with pytest.raises(UndefinedMetric):
        global_average_precision(np.ones((2, 3)), np.zeros((2, 3)))


def test_top_k_tie_rule():
    assert top_k_indices(np.zeros(25), 20).tolist() == list(range(20))
    assert top_k_indices(np.array([0.1, 0.5, 0.5, 0.9]), 3).tolist() == [3, 1, 2]


def test_perr_cases():
    assert perr([0.9, 0.8, 0.1], [1, 1, 0]) == 1.0
    assert perr([0.1, 0.2, 0.9, 0.8], [1, 1, 0, 0]) == 0.0
    assert perr([0.9, 0.1, 0.8], [1, 1, 0]) == 0.5
    with pytest.raises(UndefinedMetric):
        perr([0.5, 0.5], [0, 0])


def test_perr_matches_enumeration():
    rng = np.random.default_rng(3)
    for _ in range(100):
        p, y = rng.random(8), rng.random(8) < 0.4
        if not y.any():
            continue
        g = int(y.sum())
        best = sorted(range(8), key=lambda l: (-p[l], l))[:g]
        assert perr(p, y) == sum(y[l] for l in best) / g


def test_hit_at_one_and_tie_rule():
    assert hit_at_one([0.2, 0.9], [0, 1]) == 1
    assert hit_at_one([0.2, 0.9], [1, 0]) == 0
    assert hit_at_one([0.5, 0.5], [1, 0]) == 1
    assert hit_at_one([0.5, 0.5], [0, 1]) == 0


def test_evaluate_report():
    pred = np.array([[0.9, 0.1], [0.2, 0.8], [0.5, 0.4]])
    labels = np.array([[1, 0], [1, 0], [0, 0]])
    r = evaluate(pred, labels)
    assert r.n_examples == 3 and r.n_positives == 2
    assert r.perr == pytest.approx(0.5) and r.hit_at_one == pytest.approx(0.5)
    assert np.isnan(per_example_perr(pred, labels)[2])
    assert "gap:" in r.to_text() and set(r.as_dict()) == {"gap", "perr", "hit_at_one", "n_examples", "n_positives"}
