"""Consensual collaborative training (CCT) for classification under label noise."""
from .config import DataConfig, ExperimentConfig, TrainConfig
from .data import Dataset, LabeledSample, NoiseSpec
from .losses import BalanceSchedule, combined_loss, combined_loss_grad, ramp_lambda
from .metrics import MetricReport, evaluate, overall_score
from .net import AdamState, Network, adam_step, backward, decay_lr, forward, init_network
from .trainer import Ensemble, infer_ensemble, infer_single, memorization_rate, train

__version__ = "0.1.0"

__all__ = [
    "DataConfig", "ExperimentConfig", "TrainConfig",
    "Dataset", "LabeledSample", "NoiseSpec",
    "BalanceSchedule", "combined_loss", "combined_loss_grad", "ramp_lambda",
    "MetricReport", "evaluate", "overall_score",
    "AdamState", "Network", "adam_step", "backward", "decay_lr", "forward", "init_network",
    "Ensemble", "infer_ensemble", "infer_single", "memorization_rate", "train",
]
