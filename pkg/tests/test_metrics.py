import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sigvae.metrics import auc, average_precision, link_prediction_eval


def brute_auc(pos, neg):
    wins = 0.0
    for p in pos:
        for q in neg:
            wins += 1.0 if p > q else 0.5 if p == q else 0.0
    return wins / (len(pos) * len(neg))


def brute_ap(pos, neg):
    items = [(s, i, 1) for i, s in enumerate(pos)] + [(s, len(pos) + i, 0) for i, s in enumerate(neg)]
    items.sort(key=lambda t: (-t[0], t[1]))
    hits, precisions = 0, []
    for rank, (_, _, label) in enumerate(items, start=1):
        if label:
            hits += 1
            precisions.append(hits / rank)
    return sum(precisions) / len(precisions)


def test_auc_examples():
    assert auc([0.9, 0.8], [0.1, 0.2]) == 1.0
    assert auc([0.8, 0.2], [0.5, 0.1]) == 0.75
    assert auc([0.3, 0.3], [0.3, 0.3, 0.3]) == 0.5


def test_ap_examples():
    # ranked labels [1, 0, 1]
    assert average_precision([0.9, 0.1], [0.5]) == pytest.approx((1 + 2 / 3) / 2, abs=1e-15)
    assert average_precision([0.9, 0.8], [0.1, 0.2]) == 1.0
    m = 7
    assert average_precision([0.0], np.linspace(1, 2, m)) == pytest.approx(1 / (m + 1), abs=1e-15)


def test_ties_put_positives_first():
    assert average_precision([0.5], [0.5, 0.5]) == 1.0


def test_metrics_reject_empty_or_non_finite():
    with pytest.raises(ValueError):
        auc([], [0.1])
    with pytest.raises(ValueError):
        average_precision([np.nan], [0.1])


# tie-heavy scores exercise the half-credit rule
score_lists = st.lists(st.sampled_from([0.0, 0.1, 0.25, 0.5, 0.75, 1.0]) | st.floats(-5, 5), min_size=1, max_size=100)


@settings(max_examples=200, deadline=None)
@given(pos=score_lists, neg=score_lists)
def test_metrics_match_brute_force(pos, neg):
    assert auc(pos, neg) == pytest.approx(brute_auc(pos, neg), abs=1e-12)
    assert average_precision(pos, neg) == pytest.approx(brute_ap(pos, neg), abs=1e-12)


# grid-valued scores stay distinct after the maps below, so float rounding cannot create ties
grid_lists = st.lists(st.integers(-40, 40).map(lambda k: k / 8), min_size=1, max_size=100)


@settings(max_examples=100, deadline=None)
@given(pos=grid_lists, neg=grid_lists)
def test_metrics_invariant_under_monotone_maps(pos, neg):
    pos, neg = np.asarray(pos), np.asarray(neg)
    for f in (lambda x: 3 * x + 1, np.arctan, lambda x: np.exp(x / 5)):
        assert auc(f(pos), f(neg)) == pytest.approx(auc(pos, neg), abs=1e-12)
        assert average_precision(f(pos), f(neg)) == pytest.approx(average_precision(pos, neg), abs=1e-12)


def test_metrics_are_deterministic():
    rng = np.random.default_rng(0)
    pos, neg = rng.integers(0, 4, 50) / 4, rng.integers(0, 4, 50) / 4
    assert average_precision(pos, neg) == average_precision(pos.copy(), neg.copy())
    assert auc(pos, neg) == auc(pos, neg)


class _StubModel:
    def __init__(self, fn):
        self.fn = fn

    def edge_probs(self, data, pairs, rng, draws):
        return np.array([self.fn(i, j) for i, j in pairs], dtype=float)


def test_link_prediction_eval_with_stub_scorers():
    pos = np.array([[0, 1], [2, 3], [4, 5]])
    neg = np.array([[0, 3], [1, 4], [2, 5], [0, 5]])
    edges = {tuple(p) for p in pos}
    flat = link_prediction_eval(_StubModel(lambda i, j: 0.5), None, pos, neg, None)
    assert flat["auc"] == 0.5
    oracle = link_prediction_eval(_StubModel(lambda i, j: float((i, j) in edges)), None, pos, neg, None)
    assert oracle == {"auc": 1.0, "ap": 1.0}
