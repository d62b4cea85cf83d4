"""Master-response prediction: normalization, LSTM model, training, inference."""

from .lstm import LstmModel, loss_and_gradients, lstm_forward
from .normalize import NormalizerStats, apply, fit_normalizer, invert
from .predict import Predictor, load_model, predict_master, save_model
from .train import TrainConfig, augment, train

__all__ = [
    "LstmModel",
    "NormalizerStats",
    "Predictor",
    "TrainConfig",
    "apply",
    "augment",
    "fit_normalizer",
    "invert",
    "load_model",
    "loss_and_gradients",
    "lstm_forward",
    "predict_master",
    "save_model",
    "train",
]
