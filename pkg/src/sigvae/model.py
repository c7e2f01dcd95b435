"""Encoder/decoder pairs, posterior sampling and checkpoints."""

from __future__ import annotations

import json

import numpy as np
import scipy.sparse as sp

from .decoders import BernoulliPoissonDecoder, InnerProductDecoder, link_prob, sample_adjacency, shrink_r
from .encoders import HierarchicalGCNEncoder, NaiveSIVIEncoder, NFEncoder, VGAEEncoder, reparameterize
from .graph import Graph
from .objectives import GraphData

CHECKPOINT_FORMAT = "sigvae-checkpoint"
CHECKPOINT_VERSION = 1


class GraphVAEModel:
    def __init__(self, encoder, decoder):
        self.encoder = encoder
        self.decoder = decoder

    @classmethod
    def build(cls, cfg, n_features, latent_dim=None, noise_dim=None):
        """Instantiate the encoder/decoder pair described by a :class:`ModelConfig`."""
        latent = cfg.latent_dim if latent_dim is None else latent_dim
        rng = np.random.default_rng([cfg.seed, 0])
        if cfg.encoder == "vgae":
            enc = VGAEEncoder(n_features, cfg.hidden_dims, latent, rng=rng)
        elif cfg.encoder == "sigvae":
            enc = HierarchicalGCNEncoder(n_features, cfg.hidden_dims, latent, cfg.noise(noise_dim), rng)
        elif cfg.encoder == "naive":
            enc = NaiveSIVIEncoder(n_features, cfg.hidden_dims, latent, cfg.noise(noise_dim), rng,
                                   mlp_dims=cfg.mlp_dims)
        else:
            enc = NFEncoder(n_features, cfg.hidden_dims, latent, cfg.n_flows, rng)
        dec = BernoulliPoissonDecoder(latent) if cfg.decoder == "bernoulli_poisson" else InnerProductDecoder()
        return cls(enc, dec)

    @property
    def stochastic_psi(self):
        return getattr(self.encoder, "stochastic", False)

    def named_params(self):
        return ([(f"encoder.{k}", v) for k, v in self.encoder.named_params()]
                + [(f"decoder.{k}", v) for k, v in self.decoder.named_params()])

    def params(self):
        return [v for _, v in self.named_params()]

    def state_dict(self):
        return {k: v.data.copy() for k, v in self.named_params()}

    def load_state_dict(self, state):
        own = dict(self.named_params())
        if set(own) != set(state):
            raise ValueError(f"parameter names differ: {sorted(set(own) ^ set(state))}")
        for k, v in own.items():
            if v.shape != state[k].shape:
                raise ValueError(f"{k}: shape {state[k].shape} does not match {v.shape}")
            v.data[...] = state[k]

    # posterior ------------------------------------------------------------------

    def sample_latents(self, data, rng, draws=1, chunk=32):
        """Draw ``draws`` (psi, z) pairs; returns (list of mu arrays, list of z arrays)."""
        mus, zs = [], []
        done = 0
        while done < draws:
            m = min(chunk, draws - done)
            for psi in self.encoder.sample_psi(data.adj, data.x, rng, m):
                z = reparameterize(psi, rng)
                if self.encoder.kind == "nf":
                    z, _ = self.encoder.transform(z)
                mus.append(psi.mu.data)
                zs.append(z.data)
            done += m
        return mus, zs

    def mean_embedding(self, data, rng, draws=15):
        """Posterior mean of mu averaged over psi draws."""
        if not self.stochastic_psi:
            draws = 1
        mus = [self.encoder.sample_psi(data.adj, data.x, rng, 1)[0].mu.data for _ in range(draws)]
        return np.mean(mus, axis=0)

    def pair_probs_from_z(self, z, pairs):
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        zi, zj = z[pairs[:, 0]], z[pairs[:, 1]]
        if self.decoder.link == "bernoulli_poisson":
            s = (zi * self.decoder.rates() * zj).sum(axis=1)
        else:
            s = (zi * zj).sum(axis=1)
        return link_prob(s, self.decoder.link)

    def edge_probs(self, data, pairs, rng, draws=15):
        """Mean edge probability over ``draws`` posterior samples, at the given pairs."""
        _, zs = self.sample_latents(data, rng, draws)
        return np.mean([self.pair_probs_from_z(z, pairs) for z in zs], axis=0)

    def full_probs(self, z, rates=None):
        if self.decoder.link == "bernoulli_poisson":
            r = self.decoder.rates() if rates is None else rates
            s = np.minimum((z * r) @ z.T, self.decoder.s_max)
        else:
            s = z @ z.T
        return link_prob(s, self.decoder.link)

    def generate(self, data, rng, n_samples=1, shrink_threshold=0.01):
        """Sample graphs from the posterior predictive; BP rates below the threshold are zeroed."""
        rates = None
        if self.decoder.link == "bernoulli_poisson":
            rates = shrink_r(self.decoder.rates(), shrink_threshold)
        graphs = []
        for _ in range(n_samples):
            _, (z,) = self.sample_latents(data, rng, 1)
            graphs.append(sample_adjacency(self.full_probs(z, rates), rng))
        return graphs


def save_checkpoint(path, model, cfg, data, extra=None):
    """Write parameters, config and the training graph (train edges + features) to one npz."""
    arrays = {f"param/{k}": v for k, v in model.state_dict().items()}
    arrays["data/train_edges"] = np.asarray(data.train_edges, dtype=np.int64)
    x = data.x
    if sp.issparse(x):
        x = sp.csr_matrix(x)
        arrays.update({"data/x_data": x.data, "data/x_indices": x.indices, "data/x_indptr": x.indptr,
                       "data/x_shape": np.asarray(x.shape)})
    else:
        arrays["data/x"] = np.asarray(x, dtype=np.float64)
    extra = dict(extra or {})
    extra.update(n=data.n, n_features=int(data.x.shape[1]), latent_dim=model.encoder.latent_dim,
                 self_loops=bool(data.self_loops))
    header = {"format": CHECKPOINT_FORMAT, "version": CHECKPOINT_VERSION, "config": cfg.to_text(),
              "extra": extra}
    arrays["__header__"] = np.frombuffer(json.dumps(header, sort_keys=True).encode("utf-8"), dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path):
    """Return (model, cfg, data, extra); the model is rebuilt from the embedded config."""
    from .config import ModelConfig

    try:
        npz = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise ValueError(f"{path}: cannot read checkpoint ({exc})") from None
    with npz:
        if "__header__" not in npz.files:
            raise ValueError(f"{path}: not a checkpoint")
        header = json.loads(bytes(npz["__header__"]).decode("utf-8"))
        if header.get("format") != CHECKPOINT_FORMAT:
            raise ValueError(f"{path}: not a checkpoint")
        if header["version"] > CHECKPOINT_VERSION:
            raise ValueError(f"{path}: checkpoint version {header['version']} is newer than supported")
        state = {k[len("param/"):]: npz[k] for k in npz.files if k.startswith("param/")}
        edges = npz["data/train_edges"]
        if "data/x" in npz.files:
            x = npz["data/x"]
        else:
            x = sp.csr_matrix((npz["data/x_data"], npz["data/x_indices"], npz["data/x_indptr"]),
                              shape=tuple(npz["data/x_shape"]))
    cfg = ModelConfig.from_text(header["config"])
    extra = header["extra"]
    model = GraphVAEModel.build(cfg, extra["n_features"], extra["latent_dim"], extra.get("noise_dim"))
    model.load_state_dict(state)
    data = GraphData(Graph(extra["n"], edges, x), self_loops=extra["self_loops"])
    return model, cfg, data, extra
