"""Full-batch training with validation early stopping, and the two-stage procedure."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import autograd as ag
from .metrics import link_prediction_eval
from .model import GraphVAEModel
from .objectives import GraphData, elbo
from .optim import Adam


@dataclass
class TrainState:
    epoch: int = 0
    best_val: float = -np.inf
    best_epoch: int = 0
    patience_counter: int = 0
    seed: int = 0
    best_params: dict | None = None
    history: list = field(default_factory=list)
    lr: float = 0.0
    lr_halved: bool = False
    aborted: bool = False
    events: list = field(default_factory=list)
    runtime_seconds: float = 0.0


def _eval_rng(seed, epoch):
    # a fixed substream per (seed, epoch) keeps validation noise independent of training draws
    return np.random.default_rng([seed, 2, epoch])


def validate(model, data, split, seed, epoch, draws):
    m = link_prediction_eval(model, data, split.val_pos, split.val_neg, _eval_rng(seed, epoch), draws)
    return m["auc"], m["ap"]


def train(model, data, split, loss_cfg, epochs=3500, lr=5e-4, patience=200, seed=0, draws=15,
          eval_every=1, log=None):
    """Maximise the model's bound with Adam; keep the parameters with the best val AUC+AP.

    ``log`` receives one tab-delimited ``epoch loss val_auc val_ap`` line per
    evaluated epoch.  A non-finite loss or gradient restores the best snapshot
    and halves the learning rate; a second one aborts the run.
    """
    start = time.perf_counter()
    if epochs < 0:
        raise ValueError("epochs must be >= 0")
    if patience < 1 or eval_every < 1 or draws < 1:
        raise ValueError("patience, eval_every and draws must be positive")
    state = TrainState(seed=seed, lr=lr)
    rng = np.random.default_rng([seed, 1])
    params = model.params()
    opt = Adam(params, lr=lr)
    scale = 1.0 / (data.n * data.n)

    def accept(epoch, loss):
        try:
            auc, ap = validate(model, data, split, seed, epoch, draws)
        except (ValueError, FloatingPointError):
            return None
        state.history.append((epoch, loss, auc, ap))
        if log is not None:
            log(f"{epoch}\t{loss:.10g}\t{auc:.10g}\t{ap:.10g}")
        if auc + ap > state.best_val:
            state.best_val = auc + ap
            state.best_epoch = epoch
            state.best_params = model.state_dict()
            state.patience_counter = 0
        else:
            state.patience_counter += eval_every
        return auc + ap

    accept(0, float("nan"))
    if state.best_params is None:
        state.best_params = model.state_dict()

    for epoch in range(1, epochs + 1):
        state.epoch = epoch
        opt.zero_grad()
        K = loss_cfg.K_at(epoch - 1, epochs)
        try:
            loss = elbo(model, data, loss_cfg, rng, K) * (-scale)
            value = loss.item()
        except (FloatingPointError, ag.DomainError):
            value = float("nan")
        ok = np.isfinite(value)
        if ok:
            ag.backward(loss)
            ok = opt.step()
        metric = None
        if ok and (epoch % eval_every == 0 or epoch == epochs):
            metric = accept(epoch, value)
            ok = metric is not None
        if not ok:
            state.events.append(f"epoch {epoch}: non-finite loss or gradient")
            if log is not None:
                log(f"# epoch {epoch}: divergence detected")
            model.load_state_dict(state.best_params)
            if state.lr_halved:
                state.aborted = True
                state.events.append(f"epoch {epoch}: aborted after repeated divergence")
                break
            state.lr_halved = True
            state.lr = lr / 2.0
            opt = Adam(params, lr=state.lr)
            continue
        if state.patience_counter >= patience:
            state.events.append(f"epoch {epoch}: early stop (best epoch {state.best_epoch})")
            break

    model.load_state_dict(state.best_params)
    state.runtime_seconds = time.perf_counter() - start
    return state


def fit(cfg, graph, split, log=None):
    """Build and train the model described by ``cfg``; returns (model, data, state, extra).

    With ``cfg.two_stage`` a first model (``stage1_latent_dim`` latents,
    ``stage1_noise_dim`` noise) is trained on the given features, and its
    posterior-mean embedding becomes the feature matrix of the second model.
    """
    data = GraphData(graph, split.train_pos, self_loops=cfg.self_loops)
    loss_cfg = cfg.loss()
    extra = {"seed": cfg.seed, "dataset": cfg.dataset}
    if cfg.two_stage:
        model1 = GraphVAEModel.build(cfg, data.x.shape[1], cfg.stage1_latent_dim, cfg.stage1_noise_dim)
        if log is not None:
            log("# stage 1")
        state1 = train(model1, data, split, loss_cfg, cfg.epochs, cfg.lr, cfg.patience, cfg.seed,
                       cfg.eval_samples, cfg.eval_every, log)
        emb = model1.mean_embedding(data, np.random.default_rng([cfg.seed, 3]), cfg.eval_samples)
        data = data.with_features(emb)
        extra["stage1_best_epoch"] = state1.best_epoch
        if log is not None:
            log("# stage 2")
    model = GraphVAEModel.build(cfg, data.x.shape[1])
    state = train(model, data, split, loss_cfg, cfg.epochs, cfg.lr, cfg.patience, cfg.seed,
                  cfg.eval_samples, cfg.eval_every, log)
    return model, data, state, extra
