"""Provenance attribution on reconstruction losses with adaptive Box-Cox calibration."""

__version__ = "0.1.0"

from .classifier import LambdaTracerClassifier, SvmModel, TrainConfig, predict, threshold_oracle, train
from .drift import DriftConfig, generate_dataset, simulate_trajectory
from .kde import GaussianKDE, KdeEstimate, kde_eval, kde_fit, overlap, overlap_matrix
from .loss_model import GroupConfig, LabeledLosses, LossDataset, LossSample, parse_loss_file, select_binary, write_loss_file
from .metrics import ConfusionCounts, EvalReport, confusion, evaluate
from .transform import (
    BoxCoxTransformer,
    TransformSpec,
    alt_transform,
    boxcox_apply,
    boxcox_loglik,
    kurtosis,
    select_lambda,
    shift_positive,
    skewness,
)

__all__ = [
    "BoxCoxTransformer", "ConfusionCounts", "DriftConfig", "EvalReport", "GaussianKDE",
    "GroupConfig", "KdeEstimate", "LabeledLosses", "LambdaTracerClassifier", "LossDataset",
    "LossSample", "SvmModel", "TrainConfig", "TransformSpec", "alt_transform", "boxcox_apply",
    "boxcox_loglik", "confusion", "evaluate", "generate_dataset", "kde_eval", "kde_fit",
    "kurtosis", "overlap", "overlap_matrix", "parse_loss_file", "predict", "select_binary",
    "select_lambda", "shift_positive", "simulate_trajectory", "skewness", "threshold_oracle",
    "train", "write_loss_file",
]
