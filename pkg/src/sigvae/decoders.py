"""Edge-probability models p(A | Z) and graph sampling.

Two links over a pairwise score s_ij:

* inner product:     s = z_i . z_j,              p = sigmoid(s)
* Bernoulli-Poisson: s = sum_k r_k z_ik z_jk,    p = 1 - exp(-exp(s))

The log-likelihood clamps p to [1e-7, 1 - 1e-7].  Because both links are
monotone in s this is the same as clipping s, which is what the fused
likelihood ops do (zero gradient where the clip is active).
"""

from __future__ import annotations

import numpy as np

from . import autograd as ag
from .autograd import Value
from .graph import Graph

P_EPS = 1e-7

_BOUNDS = {
    "sigmoid": (np.log(P_EPS / (1 - P_EPS)), np.log((1 - P_EPS) / P_EPS)),
    "bernoulli_poisson": (np.log(-np.log1p(-P_EPS)), np.log(-np.log(P_EPS))),
}


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def link_terms(s, link):
    """log p, log(1-p) and their derivatives wrt s, elementwise on clipped scores."""
    if link == "sigmoid":
        log_p = -np.logaddexp(0.0, -s)
        log_q = -np.logaddexp(0.0, s)
        sig = _sigmoid(s)
        return log_p, log_q, 1.0 - sig, -sig
    if link == "bernoulli_poisson":
        lam = np.exp(s)
        log_p = np.log(-np.expm1(-lam))
        return log_p, -lam, lam / np.expm1(lam), -lam
    raise ValueError(f"unknown link {link!r}")


def _neg_terms(sc, link):
    """log(1-p) and its derivative only; ``sc`` must already be clipped to _BOUNDS, so exp cannot overflow."""
    e = np.exp(sc)
    if link == "sigmoid":
        return -np.log1p(e), -e / (1.0 + e)
    return -e, -e


def link_prob(s, link):
    s = np.asarray(s, dtype=np.float64)
    if link == "sigmoid":
        return _sigmoid(s)
    return -np.expm1(-np.exp(np.minimum(s, 700.0)))


def edge_loglik(scores, link, pos_rows, pos_cols, pos_weight=1.0, norm=1.0):
    """norm * sum_ij [pos_weight * A_ij log p_ij + (1 - A_ij) log(1 - p_ij)] over all entries.

    ``scores`` is a dense n x n Value; A is 1 exactly at (pos_rows, pos_cols).
    """
    s = scores.data
    lo, hi = _BOUNDS[link]
    sc = np.clip(s, lo, hi)
    inside = sc == s
    pos = (np.asarray(pos_rows), np.asarray(pos_cols))
    log_q, dlog_q = _neg_terms(sc, link)
    log_p_pos, log_q_pos, dlog_p_pos, _ = link_terms(sc[pos], link)
    total = norm * (log_q.sum() + (pos_weight * log_p_pos - log_q_pos).sum())

    def backward_fn(g):
        grad = dlog_q.copy()
        grad[pos] = pos_weight * dlog_p_pos
        grad *= inside
        grad *= norm * g[0, 0]
        return (grad,)

    return ag.custom_op(np.array([[total]]), (scores,), backward_fn, "edge_loglik")


def weighted_loglik(scores, link, coef_pos, coef_neg):
    """sum_e coef_pos_e log p_e + coef_neg_e log(1 - p_e) for an arbitrary score array."""
    s = scores.data
    lo, hi = _BOUNDS[link]
    sc = np.clip(s, lo, hi)
    inside = sc == s
    log_p, log_q, dlog_p, dlog_q = link_terms(sc, link)
    total = (coef_pos * log_p + coef_neg * log_q).sum()

    def backward_fn(g):
        return ((coef_pos * dlog_p + coef_neg * dlog_q) * inside * g[0, 0],)

    return ag.custom_op(np.array([[total]]), (scores,), backward_fn, "weighted_loglik")


class InnerProductDecoder:
    link = "sigmoid"

    def named_params(self):
        return []

    def params(self):
        return []

    def scores(self, z):
        return z @ z.T

    def pair_scores(self, z, rows, cols):
        return ag.sum_(z[rows] * z[cols], axis=1)

    def probs(self, z):
        return ag.sigmoid(self.scores(z))


class BernoulliPoissonDecoder:
    """Bernoulli-Poisson link with nonnegative per-dimension rates r = softplus(r_raw).

    ``s_max`` caps the score before exponentiation; ``saturated`` records
    whether the last :meth:`probs` call hit the cap.
    """

    link = "bernoulli_poisson"

    def __init__(self, latent_dim, r_init=1.0, s_max=30.0):
        raw = np.log(np.expm1(r_init)) if r_init > 0 else -30.0
        self.r_raw = Value(np.full((1, latent_dim), raw), requires_grad=True)
        self.s_max = s_max
        self.saturated = False
        self._fixed_r = None

    def named_params(self):
        return [("r_raw", self.r_raw)]

    def params(self):
        return [self.r_raw]

    def r(self):
        if self._fixed_r is not None:
            return Value(self._fixed_r)
        return ag.softplus(self.r_raw)

    def rates(self):
        return self.r().data.ravel().copy()

    def fix_rates(self, r):
        """Pin r to given values (e.g. after shrinkage); ``None`` restores the trainable rates."""
        self._fixed_r = None if r is None else np.asarray(r, dtype=np.float64).reshape(1, -1)

    def scores(self, z):
        return (z * self.r()) @ z.T

    def pair_scores(self, z, rows, cols):
        return ag.sum_(z[rows] * self.r() * z[cols], axis=1)

    def probs(self, z):
        s = self.scores(z)
        self.saturated = bool((s.data > self.s_max).any())
        s = ag.clamp(s, hi=self.s_max)
        return 1.0 - ag.exp(-ag.exp(s))


def inner_product_decode(z):
    return InnerProductDecoder().probs(ag.as_value(z))


def bernoulli_poisson_decode(z, r, s_max=30.0):
    """Edge probabilities for rates ``r`` (array or Value, already nonnegative)."""
    z = ag.as_value(z)
    r = ag.as_value(np.reshape(r, (1, -1)) if not isinstance(r, Value) else r)
    s = ag.clamp((z * r) @ z.T, hi=s_max)
    return 1.0 - ag.exp(-ag.exp(s))


def shrink_r(r, threshold=0.01):
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    r = np.array(r, dtype=np.float64)
    r[r < threshold] = 0.0
    return r


def sample_adjacency(p, rng):
    """Draw an undirected simple graph with independent edges of probability p_ij (i < j)."""
    p = np.asarray(p.data if isinstance(p, Value) else p, dtype=np.float64)
    n = p.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < p[iu, ju]
    return Graph(n, np.stack([iu[keep], ju[keep]], axis=1))


DECODERS = {
    "inner_product": InnerProductDecoder,
    "bernoulli_poisson": BernoulliPoissonDecoder,
}
