import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from sigvae import GraphVAE
from sigvae.graph import torus_graph

SMALL = dict(hidden_dims=(8,), latent_dim=3, noise_dim=4, mlp_dims=(8,), epochs=5, eval_samples=3,
             K_schedule=(1, 3, 0.5))


@pytest.fixture(scope="module")
def fitted():
    return GraphVAE(**SMALL, random_state=1).fit(torus_graph(5, 5))


def test_params_round_trip_and_clone():
    est = GraphVAE(encoder="nf", lr=0.01)
    params = est.get_params()
    assert params["encoder"] == "nf" and params["lr"] == 0.01
    est.set_params(latent_dim=4)
    twin = clone(est)
    assert twin.get_params() == est.get_params() and twin is not est
    assert not hasattr(twin, "model_")


def test_unfitted_estimator_raises():
    est = GraphVAE()
    for call in (lambda: est.transform(), lambda: est.predict_proba([[0, 1]]), lambda: est.sample_posterior(),
                 lambda: est.generate()):
        with pytest.raises(NotFittedError):
            call()


def test_fitted_outputs(fitted):
    assert fitted.transform().shape == (25, 3)
    pairs = [[0, 1], [0, 12], [3, 4]]
    p = fitted.predict_proba(pairs)
    assert p.shape == (3,) and np.all((p > 0) & (p < 1))
    np.testing.assert_array_equal(fitted.predict(pairs, threshold=0.0), [1, 1, 1])
    assert fitted.sample_posterior([0, 4], draws=6).shape == (2, 6, 3)
    graphs = fitted.generate(2)
    assert len(graphs) == 2 and all(g.n == 25 for g in graphs)


def test_queries_are_repeatable(fitted):
    np.testing.assert_array_equal(fitted.transform(), fitted.transform())
    np.testing.assert_array_equal(fitted.predict_proba([[0, 1]]), fitted.predict_proba([[0, 1]]))


def test_score_is_auc_over_labels(fitted):
    s = fitted.split_
    pairs = np.concatenate([s.test_pos, s.test_neg])
    y = np.r_[np.ones(len(s.test_pos)), np.zeros(len(s.test_neg))]
    assert 0.0 <= fitted.score(pairs, y) <= 1.0
    with pytest.raises(ValueError):
        fitted.score(pairs, y[:-1])


def test_fit_is_reproducible():
    g = torus_graph(5, 5)
    a = GraphVAE(**SMALL, random_state=2).fit(g).transform()
    b = GraphVAE(**SMALL, random_state=2).fit(g).transform()
    np.testing.assert_array_equal(a, b)


def test_accepts_adjacency_input():
    g = torus_graph(5, 5)
    est = GraphVAE(**SMALL, encoder="vgae").fit(g.adjacency().toarray())
    assert est.n_nodes_ == 25


def test_input_errors(fitted):
    with pytest.raises(ValueError, match="25 nodes"):
        fitted.predict_proba([[0, 25]])
    with pytest.raises(ValueError, match="unknown node id"):
        fitted.sample_posterior([30])
    with pytest.raises(ValueError):
        fitted.sample_posterior(draws=0)
    with pytest.raises(ValueError):
        GraphVAE(latent_dim=0).fit(torus_graph(5, 5))
    with pytest.raises(ValueError):
        GraphVAE(encoder="gat").fit(torus_graph(5, 5))
    with pytest.raises(TypeError):
        GraphVAE(**SMALL).fit(torus_graph(5, 5), split="80/20")
