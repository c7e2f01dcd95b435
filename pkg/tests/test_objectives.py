import numpy as np
import pytest
from scipy import stats

from sigvae import autograd as ag
from sigvae.autograd import Value
from sigvae.decoders import BernoulliPoissonDecoder, InnerProductDecoder
from sigvae.encoders import HierarchicalGCNEncoder, NFEncoder, NoiseSpec, PlanarFlow, PosteriorParams, VGAEEncoder
from sigvae.graph import Graph
from sigvae.model import GraphVAEModel
from sigvae.objectives import (
    GraphData,
    LossConfig,
    default_pos_weight,
    gaussian_log_density,
    kl_gaussian,
    mixture_log_density,
    nf_elbo,
    reconstruction_term,
    surrogate_elbo,
)

TWO_TRIANGLES = Graph(6, [[0, 1], [0, 2], [1, 2], [3, 4], [3, 5], [4, 5]])


def toy_data():
    return GraphData(TWO_TRIANGLES)


def vgae_reference_elbo(mu, log_sigma, eps, data):
    """Textbook VGAE bound in plain numpy: weighted dense reconstruction minus analytic KL."""
    z = mu + np.exp(log_sigma) * eps
    p = 1.0 / (1.0 + np.exp(-(z @ z.T)))
    p = np.clip(p, 1e-7, 1 - 1e-7)
    a = np.zeros((data.n, data.n))
    a[data.pos_rows, data.pos_cols] = 1.0
    rec = data.norm * np.sum(data.pos_weight * a * np.log(p) + (1 - a) * np.log(1 - p))
    kl = 0.5 * np.sum(np.exp(2 * log_sigma) + mu ** 2 - 1 - 2 * log_sigma)
    return rec - kl


# KL --------------------------------------------------------------------------------

def test_kl_standard_normal_is_zero():
    psi = PosteriorParams(Value(np.zeros((3, 2))), Value(np.zeros((3, 2))))
    assert kl_gaussian(psi).item() == 0.0


def test_kl_unit_shift():
    psi = PosteriorParams(Value([[1.0]]), Value([[0.0]]))
    assert kl_gaussian(psi).item() == pytest.approx(0.5, abs=1e-15)


def test_kl_matches_monte_carlo():
    rng = np.random.default_rng(0)
    mu, ls = rng.normal(scale=0.5, size=(2, 2)), rng.normal(scale=0.3, size=(2, 2))
    psi = PosteriorParams(Value(mu), Value(ls))
    z = mu + np.exp(ls) * rng.standard_normal((100_000, 2, 2))
    log_q = stats.norm.logpdf(z, mu, np.exp(ls)).sum(axis=(1, 2))
    log_p = stats.norm.logpdf(z).sum(axis=(1, 2))
    assert kl_gaussian(psi).item() == pytest.approx(np.mean(log_q - log_p), abs=0.01)


def test_gaussian_log_density_matches_scipy():
    rng = np.random.default_rng(1)
    z, mu, ls = (rng.normal(size=(4, 3)) for _ in range(3))
    got = gaussian_log_density(Value(z), Value(mu), Value(ls)).data.ravel()
    want = stats.norm.logpdf(z, mu, np.exp(ls)).sum(axis=1)
    np.testing.assert_allclose(got, want, rtol=1e-12)


# reconstruction weighting ---------------------------------------------------------

def test_pos_weight_balances_classes():
    n, n_edges = 50, 120
    w = default_pos_weight(n * n, 2 * n_edges)
    assert w == pytest.approx((n * n - 2 * n_edges) / (2 * n_edges))
    # at P == density the weighted positive mass equals the negative mass
    assert w * 2 * n_edges == pytest.approx(n * n - 2 * n_edges)


def test_target_holds_train_edges_both_ways_plus_diagonal():
    data = GraphData(TWO_TRIANGLES, train_edges=TWO_TRIANGLES.edges[:4])
    a = np.zeros((6, 6))
    a[data.pos_rows, data.pos_cols] = 1
    np.testing.assert_array_equal(a, a.T)
    assert a.sum() == 2 * 4 + 6 and np.all(np.diag(a) == 1)
    assert data.pos_weight == pytest.approx((36 - 14) / 14)
    assert data.norm == pytest.approx(36 / (2 * (36 - 14)))


def test_sampled_pairs_estimate_is_unbiased():
    data = toy_data()
    dec = InnerProductDecoder()
    z = Value(np.random.default_rng(2).normal(size=(6, 3)))
    dense = reconstruction_term(dec, z, data, None, "dense").item()
    rng = np.random.default_rng(3)
    draws = [reconstruction_term(dec, z, data, rng, "sampled", 16).item() for _ in range(3000)]
    sem = np.std(draws) / np.sqrt(len(draws))
    assert abs(np.mean(draws) - dense) < 4 * sem


# mixtures and the surrogate --------------------------------------------------------

def test_single_component_mixture_is_gaussian_density():
    rng = np.random.default_rng(4)
    psi = PosteriorParams(Value(rng.normal(size=(5, 2))), Value(rng.normal(size=(5, 2))))
    z = Value(rng.normal(size=(5, 2)))
    want = ag.sum_(gaussian_log_density(z, psi.mu, psi.log_sigma)).item()
    for mode in ("node", "joint"):
        assert mixture_log_density(z, [psi], mode).item() == pytest.approx(want, rel=1e-13)


def test_k_schedule_ramps_then_holds():
    cfg = LossConfig(K=0, K_schedule=(1, 50, 1 / 3))
    assert cfg.K_at(0, 300) == 1
    assert cfg.K_at(50, 300) == 26
    assert cfg.K_at(100, 300) == 50 and cfg.K_at(299, 300) == 50
    assert LossConfig(K=7).K_at(123, 300) == 7


def _vgae_pair(seed=5):
    enc_v = VGAEEncoder(6, (8,), 3, rng=np.random.default_rng(seed))
    enc_s = HierarchicalGCNEncoder(6, (8,), 3, NoiseSpec(dim=0), np.random.default_rng(seed))
    enc_n = NFEncoder(6, (8,), 3, n_flows=0, rng=np.random.default_rng(seed))
    return [GraphVAEModel(e, InnerProductDecoder()) for e in (enc_v, enc_s, enc_n)]


def test_vgae_bound_matches_textbook_form():
    data = toy_data()
    model = _vgae_pair()[0]
    got = surrogate_elbo(model, data, LossConfig(), np.random.default_rng(6)).item()
    psi = model.encoder.sample_psi(data.adj, data.x, None, 1)[0]
    eps = np.random.default_rng(6).standard_normal((6, 3))
    want = vgae_reference_elbo(psi.mu.data, psi.log_sigma.data, eps, data)
    assert got == pytest.approx(want, rel=1e-12)


def test_reduction_identities():
    data = toy_data()
    vgae, sig, nf = _vgae_pair()
    cfg = LossConfig(K=0)
    a = surrogate_elbo(vgae, data, cfg, np.random.default_rng(7)).item()
    b = surrogate_elbo(sig, data, cfg, np.random.default_rng(7)).item()
    c = nf_elbo(nf, data, cfg, np.random.default_rng(7)).item()
    assert abs(a - b) <= 1e-10 and abs(a - c) <= 1e-10


def test_deterministic_encoder_ignores_k():
    data = toy_data()
    vgae = _vgae_pair()[0]
    a = surrogate_elbo(vgae, data, LossConfig(), np.random.default_rng(8), K=0).item()
    b = surrogate_elbo(vgae, data, LossConfig(), np.random.default_rng(8), K=10).item()
    assert a == b


def test_identity_flows_equal_no_flows():
    data = toy_data()
    with_flows = NFEncoder(6, (8,), 3, n_flows=3, rng=np.random.default_rng(9))
    for f in with_flows.flows:
        f.u.data[...] = 0.0
    without = NFEncoder(6, (8,), 3, n_flows=0, rng=np.random.default_rng(9))
    without.base = with_flows.base
    cfg = LossConfig()
    a = nf_elbo(GraphVAEModel(with_flows, InnerProductDecoder()), data, cfg, np.random.default_rng(1)).item()
    b = nf_elbo(GraphVAEModel(without, InnerProductDecoder()), data, cfg, np.random.default_rng(1)).item()
    assert a == b


def _sigvae_model(decoder=None, seed=0):
    enc = HierarchicalGCNEncoder(6, (8,), 3, NoiseSpec("bernoulli", 4), np.random.default_rng(seed))
    return GraphVAEModel(enc, decoder or InnerProductDecoder())


@pytest.mark.parametrize("mixture", ["node", "joint"])
def test_larger_k_does_not_lower_the_bound(mixture):
    data = toy_data()
    model = _sigvae_model(seed=11)
    for p in model.params():
        p.data *= 2.0  # a spread-out mixing distribution makes the gap visible
    cfg = LossConfig(mixture=mixture)
    diffs = []
    for seed in range(200):
        hi = surrogate_elbo(model, data, cfg, np.random.default_rng(seed), K=10).item()
        lo = surrogate_elbo(model, data, cfg, np.random.default_rng(seed), K=0).item()
        diffs.append(hi - lo)
    diffs = np.asarray(diffs)
    t = diffs.mean() / (diffs.std(ddof=1) / np.sqrt(len(diffs)))
    print(f"{mixture}: mean gain {diffs.mean():.4f}, paired t = {t:.2f}")
    assert diffs.mean() > 0 and t > 2.0


@pytest.mark.parametrize("mixture", ["node", "joint"])
@pytest.mark.parametrize("decoder", ["inner_product", "bernoulli_poisson"])
def test_surrogate_gradient_check(mixture, decoder):
    data = toy_data()
    dec = BernoulliPoissonDecoder(3, r_init=0.8) if decoder == "bernoulli_poisson" else InnerProductDecoder()
    model = _sigvae_model(dec, seed=3)
    cfg = LossConfig(mixture=mixture)
    err = ag.grad_check(lambda: surrogate_elbo(model, data, cfg, np.random.default_rng(12), K=3), model.params())
    assert err < 1e-4


def test_nf_gradient_check():
    data = toy_data()
    enc = NFEncoder(6, (8,), 3, n_flows=2, rng=np.random.default_rng(13))
    model = GraphVAEModel(enc, InnerProductDecoder())
    err = ag.grad_check(lambda: nf_elbo(model, data, LossConfig(), np.random.default_rng(14)), model.params())
    assert err < 1e-4


def test_nf_projection_path_gradient_check():
    flow = PlanarFlow(2, u=[-3.0, 0.5], w=[1.0, 0.2], b=0.1)
    z = Value(np.random.default_rng(15).normal(size=(4, 2)))

    def f():
        out, ld = flow(z)
        return ag.sum_(ag.square(out)) + ag.sum_(ld)

    assert ag.grad_check(f, flow.params()) < 1e-4
