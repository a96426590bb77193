"""Set-attention model that maps labeled transitions to rule probabilities."""

from lfitlab.neural.checkpoint import load_checkpoint, save_checkpoint
from lfitlab.neural.decode import DEFAULT_THRESHOLD, decode
from lfitlab.neural.gradcheck import GRAD_FLOOR, Probe, check_gradients
from lfitlab.neural.model import ModelConfig, RuleSetModel, forward, forward_all
from lfitlab.neural.train import TrainConfig, TrainingError, TrainResult, evaluate, loss_and_grads, train
from lfitlab.pipeline import NeuralPredictor, predict_program
from lfitlab.tokens import tokenize

__all__ = [
    "DEFAULT_THRESHOLD",
    "GRAD_FLOOR",
    "ModelConfig",
    "NeuralPredictor",
    "Probe",
    "RuleSetModel",
    "TrainConfig",
    "TrainResult",
    "TrainingError",
    "check_gradients",
    "decode",
    "evaluate",
    "forward",
    "forward_all",
    "load_checkpoint",
    "loss_and_grads",
    "predict_program",
    "save_checkpoint",
    "tokenize",
    "train",
]
