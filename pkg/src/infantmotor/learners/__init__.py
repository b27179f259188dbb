"""The six classifier families and the uniform fit/predict wrapper."""
from .base import (
    DEFAULTS,
    FAMILIES,
    LearnerSpec,
    Model,
    UnsupportedLearnerError,
    canonical_rows,
    fit,
    fit_arrays,
)
from .boosting import AdaBoost, stump_alpha
from .forest import RandomForest
from .knn import KNN
from .logistic import ConvergenceError, LogisticRegression
from .svm import SVM, kernel_matrix, smo
from .tree import DecisionTree, Leaf, Split, TreeNode, best_numeric_split

__all__ = [
    "DEFAULTS", "FAMILIES", "LearnerSpec", "Model", "UnsupportedLearnerError", "canonical_rows", "fit",
    "fit_arrays", "AdaBoost", "stump_alpha", "RandomForest", "KNN", "ConvergenceError",
    "LogisticRegression", "SVM", "kernel_matrix", "smo", "DecisionTree", "Leaf", "Split", "TreeNode",
    "best_numeric_split",
]
