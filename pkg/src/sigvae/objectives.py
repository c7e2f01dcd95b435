"""Evidence lower bounds for the four model variants."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from .decoders import P_EPS, edge_loglik, weighted_loglik
from .encoders import reparameterize
from .graph import normalize_adjacency

LOG_2PI = float(np.log(2.0 * np.pi))

DENSE_PAIR_LIMIT = 4000


@dataclass
class LossConfig:
    """Monte-Carlo settings of the bound.

    ``K`` auxiliary psi draws enter the mixture density used for the entropy
    term; ``K_schedule=(start, stop, frac)`` ramps K linearly from start to
    stop over the first ``frac`` of the epochs.  ``mixture`` selects whether
    the mixture is formed per node ("node") or over the whole latent matrix
    ("joint").
    """

    J: int = 1
    K: int = 0
    K_schedule: tuple | None = None
    kl_weight: float = 1.0
    mixture: str = "node"
    pair_mode: str = "auto"
    pair_samples_per_edge: int = 16

    def K_at(self, epoch, epochs):
        if self.K_schedule is None:
            return self.K
        start, stop, frac = self.K_schedule
        ramp = max(1.0, frac * epochs)
        t = min(1.0, epoch / ramp)
        return int(round(start + (stop - start) * t))


class GraphData:
    """Everything the loss needs about one training graph.

    The reconstruction target holds the training edges in both directions
    and, with ``self_loops``, the diagonal.  ``pos_weight`` and ``norm``
    rebalance the rare positives.
    """

    def __init__(self, graph, train_edges=None, features=None, self_loops=True):
        self.graph = graph
        self.n = graph.n
        self.self_loops = self_loops
        self.train_edges = graph.edges if train_edges is None else np.asarray(train_edges)
        self.adj = normalize_adjacency(graph, self.train_edges)
        self.x = graph.features if features is None else features
        e = self.train_edges
        rows = [e[:, 0], e[:, 1]]
        cols = [e[:, 1], e[:, 0]]
        if self_loops:
            rows.append(np.arange(self.n))
            cols.append(np.arange(self.n))
        self.pos_rows = np.concatenate(rows).astype(np.int64)
        self.pos_cols = np.concatenate(cols).astype(np.int64)
        n_pos = len(self.pos_rows)
        total = self.n * self.n
        self.pos_weight = default_pos_weight(total, n_pos)
        self.norm = total / (2.0 * (total - n_pos))

    def with_features(self, features):
        out = object.__new__(GraphData)
        out.__dict__.update(self.__dict__)
        out.x = features
        return out


def default_pos_weight(n_pairs, n_pos):
    return (n_pairs - n_pos) / n_pos


def kl_gaussian(psi):
    """KL(N(mu, diag sigma^2) || N(0, I)) summed over nodes and dimensions."""
    mu, ls = psi.mu, psi.log_sigma
    terms = ag.exp(2.0 * ls) + ag.square(mu) - 1.0 - 2.0 * ls
    return 0.5 * ag.sum_(terms)


def gaussian_log_density(z, mu, log_sigma):
    """Per-node log N(z_i | mu_i, diag sigma_i^2) as an n x 1 column."""
    scaled = (z - mu) * ag.exp(-log_sigma)
    d = z.shape[1]
    return -0.5 * ag.sum_(ag.square(scaled), axis=1) - ag.sum_(log_sigma, axis=1) - 0.5 * d * LOG_2PI


def standard_normal_log_density(z):
    return -0.5 * ag.sum_(ag.square(z), axis=1) - 0.5 * z.shape[1] * LOG_2PI


def reconstruction_loglik(p, target, pos_weight=1.0, norm=1.0):
    """norm * sum [pos_weight A log P + (1 - A) log(1 - P)] from explicit probabilities."""
    target = np.asarray(target, dtype=np.float64)
    pc = ag.clamp(p, P_EPS, 1.0 - P_EPS)
    terms = pos_weight * target * ag.log(pc) + (1.0 - target) * ag.log(1.0 - pc)
    return norm * ag.sum_(terms)


def reconstruction_term(decoder, z, data, rng, pair_mode="auto", samples_per_edge=16):
    """Expected log-likelihood of the training adjacency for one latent sample."""
    dense = pair_mode == "dense" or (pair_mode == "auto" and data.n <= DENSE_PAIR_LIMIT)
    if dense:
        return edge_loglik(decoder.scores(z), decoder.link, data.pos_rows, data.pos_cols,
                           data.pos_weight, data.norm)
    # unbiased estimate of the sum over all n^2 negatives from uniform pairs
    m = samples_per_edge * max(1, len(data.train_edges))
    rows = np.concatenate([data.pos_rows, rng.integers(0, data.n, m)])
    cols = np.concatenate([data.pos_cols, rng.integers(0, data.n, m)])
    n_pos = len(data.pos_rows)
    coef_pos = np.zeros((len(rows), 1))
    coef_neg = np.full((len(rows), 1), data.n * data.n / m)
    coef_pos[:n_pos] = data.pos_weight
    coef_neg[:n_pos] = -1.0
    scores = decoder.pair_scores(z, rows, cols)
    return data.norm * weighted_loglik(scores, decoder.link, coef_pos, coef_neg)


def mixture_log_density(z, psi_draws, mixture="node"):
    """log of (1/(K+1)) sum_k q(z | psi_k), summed over nodes."""
    comps = [gaussian_log_density(z, p.mu, p.log_sigma) for p in psi_draws]
    log_k = float(np.log(len(comps)))
    if mixture == "node":
        stacked = ag.concat(comps, axis=1)
        return ag.sum_(ag.logsumexp(stacked, axis=1) - log_k)
    if mixture == "joint":
        stacked = ag.concat([ag.sum_(c) for c in comps], axis=1)
        return ag.logsumexp(stacked, axis=1) - log_k
    raise ValueError(f"unknown mixture {mixture!r}")


def surrogate_elbo(model, data, cfg, rng, K=None):
    """Semi-implicit bound, averaged over ``cfg.J`` independent repetitions.

    Draw psi_0..psi_K, sample z ~ q(.|psi_0), and use the (K+1)-component
    mixture in place of the intractable marginal density.  With K = 0 the
    closed-form Gaussian KL replaces the sampled entropy term.
    """
    K = cfg.K if K is None else K
    if not getattr(model.encoder, "stochastic", False):
        # every psi draw is identical, so the mixture collapses to q(z|psi_0)
        K = 0
    total = None
    for _ in range(cfg.J):
        # psi_0 and z come first so that runs differing only in K share them
        psi0 = model.encoder.sample_psi(data.adj, data.x, rng, 1)[0]
        z = reparameterize(psi0, rng)
        if K == 0:
            reg = -kl_gaussian(psi0)
        else:
            psi = [psi0] + model.encoder.sample_psi(data.adj, data.x, rng, K)
            reg = ag.sum_(standard_normal_log_density(z)) - mixture_log_density(z, psi, cfg.mixture)
        rec = reconstruction_term(model.decoder, z, data, rng, cfg.pair_mode, cfg.pair_samples_per_edge)
        term = rec + cfg.kl_weight * reg
        total = term if total is None else total + term
    return total * (1.0 / cfg.J)


def nf_elbo(model, data, cfg, rng):
    """Single-sample bound for the flow posterior.

    E[log p(A|z_K) + log p(z_K) - log q_0(z_0) + sum log|det|] is evaluated as
    -KL(q_0 || p) in closed form plus the Monte-Carlo correction
    log p(z_K) - log p(z_0) + sum log|det|, which vanishes for identity flows.
    """
    total = None
    for _ in range(cfg.J):
        psi = model.encoder.sample_psi(data.adj, data.x, rng, 1)[0]
        z0 = reparameterize(psi, rng)
        zk, log_det = model.encoder.transform(z0)
        rec = reconstruction_term(model.decoder, zk, data, rng, cfg.pair_mode, cfg.pair_samples_per_edge)
        reg = -kl_gaussian(psi)
        if model.encoder.flows:
            corr = standard_normal_log_density(zk) - standard_normal_log_density(z0) + log_det
            reg = reg + ag.sum_(corr)
        term = rec + cfg.kl_weight * reg
        total = term if total is None else total + term
    return total * (1.0 / cfg.J)


def elbo(model, data, cfg, rng, K=None):
    if model.encoder.kind == "nf":
        return nf_elbo(model, data, cfg, rng)
    return surrogate_elbo(model, data, cfg, rng, K)
