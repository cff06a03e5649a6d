"""Classifier estimators, evaluation harness, and model persistence."""

from .base import BaseEstimator, check_labels, check_matrix
from .evaluation import (
    MODEL_IDS,
    MODEL_NB,
    MODEL_SVM,
    MODEL_TREE,
    CrossValidationResult,
    LabeledDataset,
    Metrics,
    calibrate_nu,
    cross_validate,
    predict_all,
    stratified_folds,
    train_all,
)
from .naive_bayes import BernoulliNaiveBayes
from .ocsvm import LinearOneClassSvm
from .serialize import load_model, model_document, save_model
from .tree import DecisionTreeClassifier, information_gain

__all__ = [
    "BaseEstimator",
    "BernoulliNaiveBayes",
    "CrossValidationResult",
    "DecisionTreeClassifier",
    "LabeledDataset",
    "LinearOneClassSvm",
    "MODEL_IDS",
    "MODEL_NB",
    "MODEL_SVM",
    "MODEL_TREE",
    "Metrics",
    "calibrate_nu",
    "check_labels",
    "check_matrix",
    "cross_validate",
    "information_gain",
    "load_model",
    "model_document",
    "predict_all",
    "save_model",
    "stratified_folds",
    "train_all",
]
