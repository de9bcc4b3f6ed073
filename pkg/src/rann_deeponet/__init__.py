"""Randomized-neural-network DeepONet: frozen random branch/trunk layers, one least-squares fit."""
from .features import Hypercube, RandomLayer, make_layer
from .linalg import LsqSystem, relative_l2_error, solve_least_squares
from .model import ConstraintWrapper, PeriodicEmbedding, RannDeepONet
from .train import TrainConfig, TrainReport, train

__version__ = "0.1.0"

__all__ = [
    "ConstraintWrapper", "Hypercube", "LsqSystem", "PeriodicEmbedding", "RandomLayer",
    "RannDeepONet", "TrainConfig", "TrainReport", "make_layer", "relative_l2_error",
    "solve_least_squares", "train",
]
