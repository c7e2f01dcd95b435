"""Ranking metrics for held-out links."""

from __future__ import annotations

import numpy as np
from scipy.stats import rankdata


def _scores(pos, neg):
    pos = np.asarray(pos, dtype=np.float64).ravel()
    neg = np.asarray(neg, dtype=np.float64).ravel()
    if pos.size == 0 or neg.size == 0:
        raise ValueError("need at least one positive and one negative score")
    if not (np.isfinite(pos).all() and np.isfinite(neg).all()):
        raise ValueError("scores must be finite")
    return pos, neg


def auc(pos, neg):
    """P(random positive outranks random negative), ties counting one half."""
    pos, neg = _scores(pos, neg)
    ranks = rankdata(np.concatenate([pos, neg]))  # average ranks handle ties
    u = ranks[: pos.size].sum() - pos.size * (pos.size + 1) / 2.0
    return float(u / (pos.size * neg.size))


def average_precision(pos, neg):
    """Mean precision at the rank of each positive.

    Scores are sorted descending with a stable sort over the concatenated
    ``[pos, neg]`` order, so a tie always places the positive first.
    """
    pos, neg = _scores(pos, neg)
    scores = np.concatenate([pos, neg])
    labels = np.concatenate([np.ones(pos.size), np.zeros(neg.size)])
    order = np.argsort(-scores, kind="stable")
    hits = labels[order]
    ranks = np.flatnonzero(hits) + 1
    return float(np.mean(np.arange(1, ranks.size + 1) / ranks))


def link_prediction_eval(model, data, pos_pairs, neg_pairs, rng, draws=15):
    """AUC and AP of mean posterior edge probabilities on held-out pairs."""
    pairs = np.concatenate([pos_pairs, neg_pairs]).reshape(-1, 2)
    probs = model.edge_probs(data, pairs, rng, draws)
    m = len(pos_pairs)
    return {"auc": auc(probs[:m], probs[m:]), "ap": average_precision(probs[:m], probs[m:])}
