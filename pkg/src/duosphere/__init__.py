"""Graph anomaly detection with dual autoencoders and learned hyperspheres."""

__version__ = "0.1.0"

from .graph import Graph, build_graph, degree_vector, normalized_adjacency
from .hypersphere import Hypersphere, distances, init_center, sphere_loss, update_radius
from .model import ForwardOutputs, ModelConfig, Variant, forward
from .scoring import ScoringConfig, anomaly_score, auc, average_precision, classify
from .training import TrainConfig, TrainedModel, train

__all__ = [
    "Graph", "build_graph", "degree_vector", "normalized_adjacency",
    "Hypersphere", "init_center", "distances", "sphere_loss", "update_radius",
    "ModelConfig", "Variant", "ForwardOutputs", "forward",
    "TrainConfig", "TrainedModel", "train",
    "ScoringConfig", "anomaly_score", "classify", "auc", "average_precision",
]
