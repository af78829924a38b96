"""
Multinomial logistic classifier with L2 penalty, trained by full-batch gradient descent
"""
import logging
from typing import Optional

import numpy as np
from scipy.special import logsumexp, softmax

from shapca.classifiers.models import LinearConfig, LinearProbModel, ModelError

logger = logging.getLogger(__name__)


def _loss(x: np.ndarray, onehot: np.ndarray, w: np.ndarray, b: np.ndarray, l2: float) -> float:
    z = x @ w.T + b
    nll = np.mean(logsumexp(z, axis=1) - np.sum(z * onehot, axis=1))
    return float(nll + 0.5 * l2 * np.sum(w ** 2))


def fit_linear(
    x: np.ndarray,
    labels: np.ndarray,
    cfg: LinearConfig,
    n_classes: Optional[int] = None,
) -> LinearProbModel:
    """
    Minimize mean cross-entropy + (l2 / 2) ||W||^2; the bias is not penalized.

    The step size is 1 / L with L the gradient Lipschitz constant
    (||[X, 1]||_2^2 / (2N) + l2), so the loss is non-increasing across epochs.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise ModelError("expected an N x K matrix and N labels")
    if np.unique(y).size < 2:
        raise ModelError("training data contains a single class")
    n, k = x.shape
    n_classes = int(n_classes if n_classes is not None else y.max() + 1)
    onehot = np.eye(n_classes)[y]

    augmented = np.hstack([x, np.ones((n, 1))])
    sigma = np.linalg.norm(augmented, ord=2)
    step = 1.0 / (0.5 * sigma ** 2 / n + cfg.l2_strength)

    w = np.zeros((n_classes, k))
    b = np.zeros(n_classes)
    history = [_loss(x, onehot, w, b, cfg.l2_strength)]
    for epoch in range(cfg.max_epochs):
        residual = softmax(x @ w.T + b, axis=1) - onehot
        grad_w = residual.T @ x / n + cfg.l2_strength * w
        grad_b = residual.mean(axis=0)
        w = w - step * grad_w
        b = b - step * grad_b
        history.append(_loss(x, onehot, w, b, cfg.l2_strength))
        if history[-2] - history[-1] <= cfg.tol * max(abs(history[-2]), 1.0):
            break
    logger.debug(f"Linear model: {len(history) - 1} epochs, final loss {history[-1]:.6f}")
    return LinearProbModel(weights=w, bias=b, l2_strength=cfg.l2_strength, loss_history=history)


def linear_proba(model: LinearProbModel, x: np.ndarray) -> np.ndarray:
    return softmax(x @ model.weights.T + model.bias, axis=1)
