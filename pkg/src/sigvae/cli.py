"""Command-line entry point: ``sigvae {split,train,eval,generate,embed}``."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .config import ModelConfig
from .datasets import load_dataset, write_edge_list
from .graph import EdgeSplit, Graph, graph_stats, split_edges
from .metrics import link_prediction_eval
from .model import load_checkpoint, save_checkpoint
from .training import fit
from .validation import check_node_ids

# density ratio above which an inner-product sample is reported as the dense regime
DENSE_REGIME_RATIO = 20.0

_OVERRIDES = ("dataset", "encoder", "decoder", "latent_dim", "noise_dim", "epochs", "lr", "patience",
              "J", "K", "eval_samples")


def _write_json(obj, path=None):
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8")
    return text


def metrics_record(cfg, metrics, runtime_seconds, **fields):
    record = {"dataset": cfg.dataset, "model": f"{cfg.encoder}+{cfg.decoder}", "seed": cfg.seed,
              "auc": metrics["auc"], "ap": metrics["ap"], "runtime_seconds": runtime_seconds}
    record.update(fields)
    return record


def _load_config(args):
    overrides = {k: getattr(args, k, None) for k in _OVERRIDES}
    overrides["seed"] = args.seed
    if getattr(args, "two_stage", None) is not None:
        overrides["two_stage"] = args.two_stage
    if getattr(args, "K_schedule", None) is not None:
        text = args.K_schedule
        overrides["K_schedule"] = None if text == "none" else tuple(float(v) for v in text.split(","))
    if args.config:
        return ModelConfig.load(args.config, **overrides)
    return ModelConfig(**{k: v for k, v in overrides.items() if v is not None})


def cmd_split(args):
    graph = load_dataset(args.dataset)
    split = split_edges(graph, args.seed, args.val_frac, args.test_frac)
    split.save(args.out)
    print(f"{args.out}: train={len(split.train_pos)} val={len(split.val_pos)} test={len(split.test_pos)}")
    return 0


def cmd_train(args):
    cfg = _load_config(args)
    start = time.perf_counter()
    graph = load_dataset(cfg.dataset)
    split = EdgeSplit.load(args.split) if args.split else split_edges(graph, cfg.seed)
    if split.n != graph.n:
        raise ValueError(f"{args.split}: split is for {split.n} nodes but {cfg.dataset} has {graph.n}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg.save(out / "config.ini")
    split.save(out / "split.json")
    with open(out / "epochs.tsv", "w", encoding="utf-8") as log_fh:
        log_fh.write("epoch\tloss\tval_auc\tval_ap\n")

        def log(line):
            log_fh.write(line + "\n")

        model, data, state, extra = fit(cfg, graph, split, log)
        for event in state.events:
            log(f"# {event}")
    test = link_prediction_eval(model, data, split.test_pos, split.test_neg,
                                np.random.default_rng([cfg.seed, 7]), cfg.eval_samples)
    extra.update(best_epoch=state.best_epoch, epochs_run=state.epoch, aborted=state.aborted)
    save_checkpoint(out / "checkpoint.npz", model, cfg, data, extra)
    record = metrics_record(cfg, test, time.perf_counter() - start, best_epoch=state.best_epoch,
                            epochs_run=state.epoch, aborted=state.aborted)
    _write_json(record, out / "metrics.json")
    _write_json(record)
    return 3 if state.aborted else 0


def cmd_eval(args):
    start = time.perf_counter()
    model, cfg, data, _ = load_checkpoint(args.checkpoint)
    split = EdgeSplit.load(args.split)
    if split.n != data.n:
        raise ValueError(f"{args.split}: split is for {split.n} nodes but the checkpoint has {data.n}")
    seed = cfg.seed if args.seed is None else args.seed
    metrics = link_prediction_eval(model, data, split.test_pos, split.test_neg,
                                   np.random.default_rng([seed, 7]), args.samples or cfg.eval_samples)
    record = metrics_record(cfg.replace(seed=seed), metrics, time.perf_counter() - start)
    _write_json(record, args.out)
    if args.out:
        _write_json(record)
    return 0


def cmd_generate(args):
    model, cfg, data, _ = load_checkpoint(args.checkpoint)
    seed = cfg.seed if args.seed is None else args.seed
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    graphs = model.generate(data, np.random.default_rng([seed, 6]), args.samples, args.shrink_threshold)
    reference = graph_stats(Graph(data.n, data.train_edges))
    samples = []
    for k, g in enumerate(graphs):
        write_edge_list(g, out / f"sample_{k}.txt")
        samples.append(graph_stats(g))
    mean = {key: float(np.mean([s[key] for s in samples])) for key in ("density", "avg_clustering")}
    report = {"checkpoint": str(args.checkpoint), "decoder": cfg.decoder, "seed": seed,
              "shrink_threshold": args.shrink_threshold, "samples": samples, "mean": mean,
              "training_graph": reference}
    if model.decoder.link == "bernoulli_poisson":
        report["rates_kept"] = int(np.sum(model.decoder.rates() >= args.shrink_threshold))
    ratio = mean["density"] / reference["density"] if reference["density"] > 0 else float("inf")
    report["density_ratio"] = ratio
    report["dense_regime"] = bool(ratio >= DENSE_REGIME_RATIO)
    _write_json(report, out / "report.json")
    _write_json(report)
    return 0


def cmd_embed(args):
    model, cfg, data, _ = load_checkpoint(args.checkpoint)
    seed = cfg.seed if args.seed is None else args.seed
    if args.nodes:
        try:
            ids = [int(v) for v in args.nodes.split(",") if v.strip()]
        except ValueError:
            raise ValueError(f"--nodes must be comma-separated integers, got {args.nodes!r}") from None
        nodes = check_node_ids(ids, data.n)
    else:
        nodes = np.arange(data.n)
    mus, zs = model.sample_latents(data, np.random.default_rng([seed, 5]), args.draws)
    dim = zs[0].shape[1]
    header = ["node_id", "draw"] + [f"z{k + 1}" for k in range(dim)]
    if args.with_mu:
        header += [f"mu{k + 1}" for k in range(dim)]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(args.delimiter.join(header) + "\n")
        for node in nodes:
            for d, z in enumerate(zs):
                row = [str(node), str(d)] + [repr(float(v)) for v in z[node]]
                if args.with_mu:
                    row += [repr(float(v)) for v in mus[d][node]]
                fh.write(args.delimiter.join(row) + "\n")
    print(f"{out}: {len(nodes) * args.draws} rows")
    return 0


def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="sigvae", description="Graph VAE training and evaluation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_help):
        p.add_argument("--config", help="INI config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", required=True, help=out_help)

    p = sub.add_parser("split", help="write a seeded train/val/test edge split")
    p.add_argument("dataset")
    common(p, "split file (JSON)")
    p.add_argument("--val-frac", type=float, default=0.05)
    p.add_argument("--test-frac", type=float, default=0.10)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train a model and report test metrics")
    common(p, "output directory")
    p.add_argument("--split", help="split file from 'sigvae split' (default: seeded split)")
    p.add_argument("--dataset")
    p.add_argument("--encoder")
    p.add_argument("--decoder")
    p.add_argument("--latent-dim", dest="latent_dim", type=int)
    p.add_argument("--noise-dim", dest="noise_dim", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--patience", type=int)
    p.add_argument("--J", type=int)
    p.add_argument("--K", type=int)
    p.add_argument("--K-schedule", dest="K_schedule", help="'start,stop,fraction' or 'none'")
    p.add_argument("--eval-samples", dest="eval_samples", type=int)
    stage = p.add_mutually_exclusive_group()
    stage.add_argument("--two-stage", dest="two_stage", action="store_true", default=None)
    stage.add_argument("--no-two-stage", dest="two_stage", action="store_false")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a split's test edges")
    p.add_argument("checkpoint")
    p.add_argument("--split", required=True)
    p.add_argument("--config", help=argparse.SUPPRESS)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", help="metrics file (default: stdout only)")
    p.add_argument("--samples", type=_positive, help="posterior draws (default: config eval_samples)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("generate", help="sample graphs from a trained model")
    p.add_argument("checkpoint")
    common(p, "output directory")
    p.add_argument("--samples", type=_positive, default=10)
    p.add_argument("--shrink-threshold", type=float, default=0.01)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("embed", help="export posterior latent samples per node")
    p.add_argument("checkpoint")
    common(p, "table path")
    p.add_argument("--nodes", help="comma-separated node ids (default: all)")
    p.add_argument("--draws", type=_positive, default=1000)
    p.add_argument("--with-mu", action="store_true", help="append the mu of each draw")
    p.add_argument("--delimiter", default="\t")
    p.set_defaults(func=cmd_embed)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "split" and args.seed is None:
            args.seed = ModelConfig.load(args.config).seed if args.config else 0
        return args.func(args)
    except (OSError, ValueError, KeyError) as exc:
        # ParseError is a ValueError; FileNotFoundError an OSError
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        if isinstance(exc, FileNotFoundError) and exc.filename and str(exc.filename) not in str(msg):
            msg = f"{exc.filename}: {exc.strerror}"
        print(f"sigvae {args.command}: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
