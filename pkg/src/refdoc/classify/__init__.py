"""Commit classification: models, splitting, tuning and evaluation."""

from .core import DEFAULT_PARAMS, KINDS, Category, Hyperparams, LabeledCommit, parse_category
from .evaluation import (
    EvalReport,
    McNemarResult,
    evaluate,
    grid_search_cv,
    mcnemar,
    mcnemar_counts,
    score_predictions,
    stratified_kfold,
    stratified_split,
)
from .models import TrainedModel, dumps_model, fit, loads_model, predict, train

__all__ = [
    "Category",
    "LabeledCommit",
    "Hyperparams",
    "KINDS",
    "DEFAULT_PARAMS",
    "parse_category",
    "TrainedModel",
    "train",
    "fit",
    "predict",
    "dumps_model",
    "loads_model",
    "EvalReport",
    "McNemarResult",
    "evaluate",
    "score_predictions",
    "stratified_split",
    "stratified_kfold",
    "grid_search_cv",
    "mcnemar",
    "mcnemar_counts",
]
