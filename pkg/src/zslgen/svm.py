"""One-vs-rest linear SVM trained by deterministic subgradient descent.

Each class gets a binary hinge-loss problem, full-batch, with the
classic 1/sqrt(t) step decay. No randomness is involved, so refitting
the same data gives the same model.
"""

import math
from dataclasses import dataclass

import numpy as np

from .data import ZslDataset
from .errors import ConfigError, InputError, ShapeError
from .numerics import Matrix


@dataclass(frozen=True)
class SvmConfig:
    """cost is the usual C weighting the hinge term against ||w||^2/2."""

    cost: float = 100.0
    max_epochs: int = 1000
    tol: float = 1e-6

    def __post_init__(self):
        if self.cost <= 0.0:
            raise ConfigError(f"cost must be > 0, got {self.cost}")
        if self.max_epochs < 1:
            raise ConfigError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.tol <= 0.0:
            raise ConfigError(f"tol must be > 0, got {self.tol}")


@dataclass
class SvmModel:
    """classes is ascending; weights row i and biases[i] score classes[i]."""

    classes: np.ndarray
    weights: Matrix
    biases: np.ndarray
    objective_histories: list | None = None

    def __post_init__(self):
        self.classes = np.asarray(self.classes, dtype=np.int64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.biases = np.asarray(self.biases, dtype=np.float64)

    def to_matrices(self):
        return [("svm.classes", self.classes.astype(np.float64).reshape(1, -1)),
                ("svm.weights", self.weights),
                ("svm.biases", self.biases.reshape(1, -1))]

    @classmethod
    def from_matrices(cls, entries) -> "SvmModel":
        from .errors import FormatError

        for key in ("svm.classes", "svm.weights", "svm.biases"):
            if key not in entries:
                raise FormatError(f"checkpoint lacks entry {key!r}")
        classes = np.rint(entries["svm.classes"].ravel()).astype(np.int64)
        return cls(classes=classes, weights=entries["svm.weights"],
                   biases=entries["svm.biases"].ravel())


def hinge_objective(w: np.ndarray, b: float, x: Matrix, y: np.ndarray, cost: float) -> float:
    """0.5 ||w||^2 + cost * sum_i max(0, 1 - y_i (w . x_i + b))."""
    margins = 1.0 - y * (x @ w + b)
    return float(0.5 * w @ w + cost * np.maximum(margins, 0.0).sum())


def _fit_binary(x: Matrix, y: np.ndarray, config: SvmConfig):
    """Full-batch subgradient descent on the hinge objective.

    Step size 1/(cost * n * sqrt(t)) cancels the cost * n scale of the
    hinge subgradient. Stops early when the relative objective change
    drops below tol. Returns (w, b, objective history).
    """
    n, d = x.shape
    w = np.zeros(d)
    b = 0.0
    history = [hinge_objective(w, b, x, y, config.cost)]
    for t in range(1, config.max_epochs + 1):
        violated = y * (x @ w + b) < 1.0
        grad_w = w - config.cost * (y[violated] @ x[violated])
        grad_b = -config.cost * y[violated].sum()
        step = 1.0 / (config.cost * n * math.sqrt(t))
        w = w - step * grad_w
        b = b - step * grad_b
        obj = hinge_objective(w, b, x, y, config.cost)
        prev = history[-1]
        history.append(obj)
        if abs(prev - obj) < config.tol * max(1.0, abs(prev)):
            break
    return w, b, np.asarray(history)


def svm_fit(data: ZslDataset, config: SvmConfig) -> SvmModel:
    """Fit one binary problem per class present in data.labels."""
    if data.n < 1:
        raise InputError("classifier training needs at least one row")
    classes = np.unique(data.labels)
    if classes.size < 2:
        raise InputError(f"need at least two classes to classify, got {classes.size}")
    weights = np.empty((classes.size, data.feature_dim))
    biases = np.empty(classes.size)
    histories = []
    for i, cid in enumerate(classes):
        y = np.where(data.labels == cid, 1.0, -1.0)
        weights[i], biases[i], hist = _fit_binary(data.features, y, config)
        histories.append(hist)
    return SvmModel(classes=classes, weights=weights, biases=biases,
                    objective_histories=histories)


def svm_scores(model: SvmModel, x: Matrix) -> Matrix:
    """Raw decision values, one column per class in model.classes order."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.weights.shape[1]:
        raise ShapeError(
            f"expected (*, {model.weights.shape[1]}) features, got {x.shape}")
    return x @ model.weights.T + model.biases


def svm_predict(model: SvmModel, x: Matrix) -> np.ndarray:
    """Argmax over class scores; ties go to the lowest class id."""
    scores = svm_scores(model, x)
    return model.classes[np.argmax(scores, axis=1)]


def top_k_labels(model: SvmModel, x: Matrix, k: int) -> np.ndarray:
    """(n, k) class ids by descending score; ties favor lower class ids."""
    if not 1 <= k <= model.classes.size:
        raise InputError(f"k must be in [1, {model.classes.size}], got {k}")
    scores = svm_scores(model, x)
    # stable sort on the negated scores keeps ascending class order on ties
    order = np.argsort(-scores, axis=1, kind="stable")
    return model.classes[order[:, :k]]
