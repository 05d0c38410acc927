"""linkresolve: resolve ambiguous ties in self-reported social network surveys.

The toolkit trains an attention-based node embedding model on unambiguous
links and uses embedding distances to pick between candidate contacts and to
decide whether a reported link exists, with decision tree / MLP baselines,
a synthetic survey generator, a downstream risk-prediction evaluation,
mask-based explanations, and a human review service.
"""

from .data import (
    DataError,
    Edge,
    EdgeSplit,
    EdgeTable,
    Graph,
    NodeTable,
    build_graph,
    graph_from_pairs,
    load_edges,
    load_nodes,
    split_edges,
)
from .gat import (
    GatLinkPredictor,
    GatModel,
    TrainConfig,
    default_model,
    forward,
    grad_check,
    train,
)
from .metrics import auc, classification_metrics, mae
from .preprocessing import FeatureMatrix, SurveyPreprocessor, preprocess

__version__ = "0.1.0"

__all__ = [
    "DataError",
    "Edge",
    "EdgeSplit",
    "EdgeTable",
    "FeatureMatrix",
    "GatLinkPredictor",
    "GatModel",
    "Graph",
    "NodeTable",
    "SurveyPreprocessor",
    "TrainConfig",
    "auc",
    "build_graph",
    "classification_metrics",
    "default_model",
    "forward",
    "grad_check",
    "graph_from_pairs",
    "load_edges",
    "load_nodes",
    "mae",
    "preprocess",
    "split_edges",
    "train",
]
