"""scikit-learn style wrapper around config, training and posterior queries."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .config import ModelConfig
from .graph import EdgeSplit, split_edges
from .metrics import auc
from .training import fit as fit_config
from .validation import check_graph, check_node_ids, check_pairs, check_positive_int


class GraphVAE(TransformerMixin, BaseEstimator, auto_wrap_output_keys=None):
    """Graph variational autoencoder for link prediction and embedding.

    ``fit`` takes a graph (a :class:`~sigvae.graph.Graph`, an adjacency
    matrix or an edge array) and trains on the training part of an edge
    split; ``transform`` returns the posterior-mean node embedding and
    ``predict_proba`` the mean edge probability for node pairs.

    Examples
    --------
    >>> from sigvae import GraphVAE, torus_graph
    >>> est = GraphVAE(encoder="vgae", epochs=5, random_state=0).fit(torus_graph(6, 6))
    >>> est.transform().shape
    (36, 16)
    """

    def __init__(self, encoder="sigvae", decoder="inner_product", latent_dim=16, hidden_dims=(32,),
                 noise_dim=64, noise_family="bernoulli", noise_p=0.5, mlp_dims=(32,), n_flows=4,
                 J=1, K=0, K_schedule=(1, 50, 1.0 / 3.0), mixture="node", epochs=3500, lr=5e-4,
                 patience=200, eval_samples=15, two_stage=False, self_loops=True, random_state=0):
        self.encoder = encoder
        self.decoder = decoder
        self.latent_dim = latent_dim
        self.hidden_dims = hidden_dims
        self.noise_dim = noise_dim
        self.noise_family = noise_family
        self.noise_p = noise_p
        self.mlp_dims = mlp_dims
        self.n_flows = n_flows
        self.J = J
        self.K = K
        self.K_schedule = K_schedule
        self.mixture = mixture
        self.epochs = epochs
        self.lr = lr
        self.patience = patience
        self.eval_samples = eval_samples
        self.two_stage = two_stage
        self.self_loops = self_loops
        self.random_state = random_state

    def _config(self):
        check_positive_int(self.latent_dim, "latent_dim")
        check_positive_int(self.epochs, "epochs", minimum=0)
        check_positive_int(self.eval_samples, "eval_samples")
        seed = 0 if self.random_state is None else int(self.random_state)
        return ModelConfig(
            dataset="<in-memory>", self_loops=self.self_loops, encoder=self.encoder, decoder=self.decoder,
            latent_dim=self.latent_dim, hidden_dims=tuple(self.hidden_dims), mlp_dims=tuple(self.mlp_dims),
            noise_family=self.noise_family, noise_dim=self.noise_dim, noise_p=self.noise_p,
            n_flows=self.n_flows, J=self.J, K=self.K, K_schedule=self.K_schedule, mixture=self.mixture,
            epochs=self.epochs, lr=self.lr, patience=self.patience, seed=seed,
            eval_samples=self.eval_samples, two_stage=self.two_stage)

    def fit(self, X, y=None, split=None, features=None):
        """Train on ``X``; ``split`` defaults to a seeded 85/5/10 edge split."""
        graph = check_graph(X, features)
        cfg = self._config()
        if split is None:
            split = split_edges(graph, cfg.seed)
        elif not isinstance(split, EdgeSplit):
            raise TypeError("split must be an EdgeSplit")
        elif split.n != graph.n:
            raise ValueError(f"split is for {split.n} nodes but the graph has {graph.n}")
        self.config_ = cfg
        self.graph_ = graph
        self.split_ = split
        self.model_, self.data_, self.state_, _ = fit_config(cfg, graph, split)
        self.n_nodes_ = graph.n
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError("call fit before using this GraphVAE")

    def _rng(self, stream):
        return np.random.default_rng([self.config_.seed, stream])

    def transform(self, X=None):
        """Posterior-mean embedding (mu averaged over psi draws), shape (n, latent_dim)."""
        self._check_fitted()
        if X is not None and check_graph(X).n != self.n_nodes_:
            raise ValueError("transform expects the graph the estimator was fitted on")
        return self.model_.mean_embedding(self.data_, self._rng(4), self.eval_samples)

    def predict_proba(self, pairs):
        """Mean edge probability over ``eval_samples`` posterior draws for each (i, j) pair."""
        self._check_fitted()
        pairs = check_pairs(pairs, self.n_nodes_)
        return self.model_.edge_probs(self.data_, pairs, self._rng(8), self.eval_samples)

    def predict(self, pairs, threshold=0.5):
        return (self.predict_proba(pairs) >= threshold).astype(np.int64)

    def score(self, pairs, y):
        """AUC of the predicted probabilities against binary labels ``y``."""
        y = np.asarray(y).ravel()
        p = self.predict_proba(pairs)
        if len(y) != len(p):
            raise ValueError("pairs and y differ in length")
        return auc(p[y == 1], p[y == 0])

    def sample_posterior(self, nodes=None, draws=100):
        """Latent samples, shape (len(nodes), draws, latent_dim)."""
        self._check_fitted()
        draws = check_positive_int(draws, "draws")
        nodes = np.arange(self.n_nodes_) if nodes is None else check_node_ids(nodes, self.n_nodes_)
        _, zs = self.model_.sample_latents(self.data_, self._rng(5), draws)
        return np.stack([z[nodes] for z in zs], axis=1)

    def generate(self, n_samples=1, shrink_threshold=0.01):
        self._check_fitted()
        return self.model_.generate(self.data_, self._rng(6), n_samples, shrink_threshold)
