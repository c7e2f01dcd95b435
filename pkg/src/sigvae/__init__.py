"""Graph variational autoencoders with semi-implicit, flow and Gaussian posteriors."""

from .config import ModelConfig
from .datasets import load_dataset, load_edge_list
from .estimator import GraphVAE
from .graph import EdgeSplit, Graph, graph_stats, split_edges, swiss_roll_graph, torus_graph
from .metrics import auc, average_precision, link_prediction_eval
from .model import GraphVAEModel, load_checkpoint, save_checkpoint
from .objectives import GraphData, LossConfig, elbo, nf_elbo, surrogate_elbo
from .training import TrainState, fit, train

__version__ = "0.1.0"

__all__ = [
    "EdgeSplit", "Graph", "GraphData", "GraphVAE", "GraphVAEModel", "LossConfig", "ModelConfig",
    "TrainState", "auc", "average_precision", "elbo", "fit", "graph_stats", "link_prediction_eval",
    "load_checkpoint", "load_dataset", "load_edge_list", "nf_elbo", "save_checkpoint", "split_edges",
    "surrogate_elbo", "swiss_roll_graph", "torus_graph", "train",
]
