"""Inference networks mapping (A, X) to draws of posterior parameters and latents.

All four encoders share the same output type.  A "psi draw" is one realization
of the posterior parameters (mu, log sigma); for the noise-injecting encoders
each draw uses fresh noise, so psi itself is random.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autograd as ag
from .autograd import Value

ACTIVATIONS = {
    "relu": ag.relu,
    "tanh": ag.tanh,
    "identity": lambda x: x,
}


def glorot(rng, d_in, d_out):
    limit = np.sqrt(6.0 / (d_in + d_out))
    return Value(rng.uniform(-limit, limit, size=(d_in, d_out)), requires_grad=True)


@dataclass
class NoiseSpec:
    family: str = "bernoulli"
    dim: int = 64
    p: float = 0.5
    per_layer: bool = True

    def __post_init__(self):
        if self.family not in ("bernoulli", "normal"):
            raise ValueError(f"unknown noise family {self.family!r}")
        if self.dim < 0:
            raise ValueError("noise dim must be >= 0")

    def layer_dim(self, u):
        return self.dim if (self.per_layer or u == 0) else 0

    def sample(self, rng, n, dim=None):
        dim = self.dim if dim is None else dim
        if dim == 0:
            return np.zeros((n, 0))
        if self.family == "bernoulli":
            return (rng.random((n, dim)) < self.p).astype(np.float64)
        return rng.standard_normal((n, dim))


@dataclass
class PosteriorParams:
    mu: Value
    log_sigma: Value

    @property
    def sigma(self):
        return np.exp(self.log_sigma.data)


@dataclass
class EncoderOutput:
    psi: list
    z: list
    z0: list = field(default_factory=list)
    log_det: list = field(default_factory=list)


class DenseLayer:
    """Affine map over a column-concatenation of input blocks, without bias.

    The weight is one (sum(in_dims) x out_dim) matrix; each block multiplies
    its own row slice, which equals concat(blocks) @ W without materializing
    the concatenation.
    """

    def __init__(self, in_dims, out_dim, activation, rng):
        self.in_dims = list(in_dims)
        self.out_dim = out_dim
        self.activation = activation
        self.weight = glorot(rng, sum(self.in_dims), out_dim)
        self._bounds = np.cumsum([0] + self.in_dims)

    def params(self):
        return [self.weight]

    def project(self, block, index):
        """Contribution of input block ``index`` (constant array or Value)."""
        a, b = self._bounds[index], self._bounds[index + 1]
        if b == a:
            return None
        w = self.weight[a:b, :]
        if isinstance(block, Value):
            return ag.matmul(block, w)
        return ag.spmm(block, w)

    def combine(self, terms):
        terms = [t for t in terms if t is not None]
        total = terms[0]
        for t in terms[1:]:
            total = total + t
        return total

    def __call__(self, blocks):
        pre = self.combine([self.project(b, i) for i, b in enumerate(blocks)])
        return ACTIVATIONS[self.activation](pre)


class GCNLayer(DenseLayer):
    """activation(A_norm @ concat(blocks) @ W)."""

    def propagate(self, adj, pre):
        return ACTIVATIONS[self.activation](ag.spmm(adj, pre))

    def __call__(self, adj, blocks):
        pre = self.combine([self.project(b, i) for i, b in enumerate(blocks)])
        return self.propagate(adj, pre)


def gcn_forward(layer, adj, h):
    """Single-input GCN propagation: activation(A_norm @ H @ W)."""
    return layer(adj, [h])


def _finite(v, name):
    if not np.isfinite(v.data).all():
        raise FloatingPointError(f"non-finite activations in {name}")
    return v


def reparameterize(psi, rng):
    eps = rng.standard_normal(psi.mu.shape)
    return psi.mu + ag.exp(psi.log_sigma) * eps


class HierarchicalGCNEncoder:
    """Noise-injecting GCN encoder.

    Layer u sees concat(X, eps_u, h_{u-1}); the mean and log-sigma branches
    are GCNs over concat(X, h_L).  With ``noise.dim == 0`` every psi draw is
    identical and this is the two-branch VGAE encoder.
    """

    kind = "sigvae"

    def __init__(self, n_features, hidden_dims=(32,), latent_dim=16, noise=None, rng=None):
        if len(hidden_dims) < 1:
            raise ValueError("need at least one hidden GCN layer")
        rng = np.random.default_rng(0) if rng is None else rng
        self.noise = NoiseSpec() if noise is None else noise
        self.latent_dim = latent_dim
        self.layers = []
        prev = 0
        for u, width in enumerate(hidden_dims):
            self.layers.append(
                GCNLayer([n_features, self.noise.layer_dim(u), prev], width, "relu", rng))
            prev = width
        self.mu_layer = GCNLayer([n_features, prev], latent_dim, "identity", rng)
        self.sigma_layer = GCNLayer([n_features, prev], latent_dim, "identity", rng)

    @property
    def stochastic(self):
        return any(self.noise.layer_dim(u) > 0 for u in range(len(self.layers)))

    def named_params(self):
        out = [(f"gcn{u}.weight", layer.weight) for u, layer in enumerate(self.layers)]
        return out + [("mu.weight", self.mu_layer.weight), ("log_sigma.weight", self.sigma_layer.weight)]

    def params(self):
        return [v for _, v in self.named_params()]

    def _feature_terms(self, x):
        return ([layer.project(x, 0) for layer in self.layers],
                self.mu_layer.project(x, 0), self.sigma_layer.project(x, 0))

    def _psi(self, adj, terms, noises):
        layer_terms, mu_x, sigma_x = terms
        h = None
        for u, layer in enumerate(self.layers):
            pre = layer.combine([layer_terms[u], layer.project(noises[u], 1),
                                 None if h is None else layer.project(h, 2)])
            h = _finite(layer.propagate(adj, pre), f"gcn{u}")
        mu = self.mu_layer.propagate(adj, self.mu_layer.combine([mu_x, self.mu_layer.project(h, 1)]))
        ls = self.sigma_layer.propagate(
            adj, self.sigma_layer.combine([sigma_x, self.sigma_layer.project(h, 1)]))
        return PosteriorParams(_finite(mu, "mu"), _finite(ls, "log_sigma"))

    def sample_psi(self, adj, x, rng, n_draws=1):
        terms = self._feature_terms(x)
        n = adj.shape[0]
        if not self.stochastic:
            psi = self._psi(adj, terms, [np.zeros((n, 0))] * len(self.layers))
            return [psi] * n_draws
        draws = []
        for _ in range(n_draws):
            noises = [self.noise.sample(rng, n, self.noise.layer_dim(u))
                      for u in range(len(self.layers))]
            draws.append(self._psi(adj, terms, noises))
        return draws

    def encode(self, adj, x, rng, n_draws=1):
        psi = self.sample_psi(adj, x, rng, n_draws)
        return EncoderOutput(psi, [reparameterize(p, rng) for p in psi])


class VGAEEncoder(HierarchicalGCNEncoder):
    kind = "vgae"

    def __init__(self, n_features, hidden_dims=(32,), latent_dim=16, rng=None, **_):
        super().__init__(n_features, hidden_dims, latent_dim, NoiseSpec(dim=0), rng)


class NaiveSIVIEncoder:
    """Deterministic GCN stack followed by per-node stochastic MLP layers.

    Noise enters after graph propagation, so node i's noise only reaches
    psi_i: there is no sharing of uncertainty between neighbours.
    """

    kind = "naive"

    def __init__(self, n_features, hidden_dims=(32,), latent_dim=16, noise=None, rng=None,
                 mlp_dims=(32,)):
        rng = np.random.default_rng(0) if rng is None else rng
        self.noise = NoiseSpec() if noise is None else noise
        self.latent_dim = latent_dim
        self.gnn = []
        prev = 0
        for width in hidden_dims:
            self.gnn.append(GCNLayer([n_features, prev], width, "relu", rng))
            prev = width
        self.h_dim = prev
        self.mlp = []
        prev_l = 0
        for t, width in enumerate(mlp_dims):
            self.mlp.append(DenseLayer([prev_l, self.noise.layer_dim(t), self.h_dim], width, "relu", rng))
            prev_l = width
        self.g_mu = DenseLayer([prev_l, self.h_dim], latent_dim, "identity", rng)
        self.g_sigma = DenseLayer([prev_l, self.h_dim], latent_dim, "identity", rng)

    @property
    def stochastic(self):
        return self.noise.dim > 0 and bool(self.mlp)

    def named_params(self):
        out = [(f"gcn{u}.weight", layer.weight) for u, layer in enumerate(self.gnn)]
        out += [(f"mlp{t}.weight", layer.weight) for t, layer in enumerate(self.mlp)]
        return out + [("mu.weight", self.g_mu.weight), ("log_sigma.weight", self.g_sigma.weight)]

    def params(self):
        return [v for _, v in self.named_params()]

    def hidden(self, adj, x):
        h = None
        for u, layer in enumerate(self.gnn):
            h = _finite(layer(adj, [x, h]), f"gcn{u}")
        return h

    def psi_from_hidden(self, h, noises):
        ell = None
        for t, layer in enumerate(self.mlp):
            ell = _finite(layer([ell, noises[t], h]), f"mlp{t}")
        return PosteriorParams(_finite(self.g_mu([ell, h]), "mu"), _finite(self.g_sigma([ell, h]), "log_sigma"))

    def sample_psi(self, adj, x, rng, n_draws=1):
        h = self.hidden(adj, x)
        n = adj.shape[0]
        draws = []
        for _ in range(n_draws):
            noises = [self.noise.sample(rng, n, self.noise.layer_dim(t)) for t in range(len(self.mlp))]
            draws.append(self.psi_from_hidden(h, noises))
        return draws

    def encode(self, adj, x, rng, n_draws=1):
        psi = self.sample_psi(adj, x, rng, n_draws)
        return EncoderOutput(psi, [reparameterize(p, rng) for p in psi])


class PlanarFlow:
    """f(z) = z + u_hat * tanh(w.z + b), applied row-wise with shared parameters.

    ``u`` is replaced by the projection u_hat only when w.u < -1, which is
    when f would stop being invertible.
    """

    def __init__(self, dim, rng=None, u=None, w=None, b=0.0):
        rng = np.random.default_rng(0) if rng is None else rng
        scale = 1.0 / np.sqrt(dim)
        self.u = Value(rng.uniform(-scale, scale, (1, dim)) if u is None else np.reshape(u, (1, dim)),
                       requires_grad=True)
        self.w = Value(rng.uniform(-scale, scale, (1, dim)) if w is None else np.reshape(w, (1, dim)),
                       requires_grad=True)
        self.b = Value(np.reshape(b, (1, 1)), requires_grad=True)

    def params(self):
        return [self.u, self.w, self.b]

    def u_hat(self):
        wu = ag.sum_(self.w * self.u)
        if wu.item() >= -1.0:
            return self.u
        m = ag.softplus(wu) - 1.0
        return self.u + (m - wu) * self.w / ag.sum_(ag.square(self.w))

    def __call__(self, z):
        """Return (f(z), log|det df/dz|) with the log-det as an n x 1 column."""
        u = self.u_hat()
        t = ag.tanh(z @ self.w.T + self.b)
        out = z + t * u
        wu = ag.sum_(self.w * u)
        det = 1.0 + (1.0 - ag.square(t)) * wu
        return out, ag.log(ag.abs_(det))


class NFEncoder:
    """Deterministic two-branch GCN posterior reshaped by a chain of planar flows."""

    kind = "nf"

    def __init__(self, n_features, hidden_dims=(32,), latent_dim=16, n_flows=4, rng=None, **_):
        rng = np.random.default_rng(0) if rng is None else rng
        self.latent_dim = latent_dim
        self.base = VGAEEncoder(n_features, hidden_dims, latent_dim, rng=rng)
        self.flows = [PlanarFlow(latent_dim, rng) for _ in range(n_flows)]

    def named_params(self):
        out = list(self.base.named_params())
        for k, f in enumerate(self.flows):
            out += [(f"flow{k}.u", f.u), (f"flow{k}.w", f.w), (f"flow{k}.b", f.b)]
        return out

    def params(self):
        return [v for _, v in self.named_params()]

    def sample_psi(self, adj, x, rng, n_draws=1):
        return self.base.sample_psi(adj, x, rng, n_draws)

    def transform(self, z0):
        z = z0
        log_det = None
        for flow in self.flows:
            z, ld = flow(z)
            log_det = ld if log_det is None else log_det + ld
        if log_det is None:
            log_det = Value(np.zeros((z0.shape[0], 1)))
        return z, log_det

    def encode(self, adj, x, rng, n_draws=1):
        psi = self.sample_psi(adj, x, rng, n_draws)
        out = EncoderOutput(psi, [])
        for p in psi:
            z0 = reparameterize(p, rng)
            zk, ld = self.transform(z0)
            out.z0.append(z0)
            out.z.append(zk)
            out.log_det.append(ld)
        return out


ENCODERS = {
    "vgae": VGAEEncoder,
    "sigvae": HierarchicalGCNEncoder,
    "naive": NaiveSIVIEncoder,
    "nf": NFEncoder,
}
