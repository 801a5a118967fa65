"""Network that predicts RBF shape parameters from stencil geometry."""

from .cost import batch_cost, cost_single, loss_and_gradient
from .features import (FeatureMode, FeatureSpec, features_1d_coordinate, features_1d_distance,
                       features_2d_structured, raw_features, stencil_features)
from .io import load_model, save_model
from .model import MlpModel, backward, forward, init_model, mlp_forward
from .predict import predict_epsilon, predict_epsilons
from .train import (Dataset, TrainConfig, TrainTrace, default_feature_spec, generate_dataset,
                    new_model, train)

__all__ = [
    "FeatureMode", "FeatureSpec", "MlpModel", "TrainConfig", "TrainTrace", "Dataset",
    "batch_cost", "cost_single", "loss_and_gradient", "features_1d_coordinate",
    "features_1d_distance", "features_2d_structured", "raw_features", "stencil_features",
    "load_model", "save_model", "backward", "forward", "init_model", "mlp_forward",
    "predict_epsilon", "predict_epsilons", "default_feature_spec", "generate_dataset",
    "new_model", "train",
]
