"""
Sparse PCA by alternating minimization

Objective: ||X_c - U W||_F^2 + alpha * sum_k ||W_k||_1 with unit-norm columns of U.
Both half-steps are exact block-coordinate minimizations, so the objective never
increases: a W row is the soft-thresholded projection of its partial residual onto
u_k, and a U column is the normalized partial residual times w_k.
"""
import logging
from typing import Tuple

import numpy as np

from shapca.decomposition.models import (
    ComponentScaler,
    ComponentValues,
    InitMode,
    SparsePcaConfig,
    SparsePcaError,
    SparsePcaModel,
)

logger = logging.getLogger(__name__)


def _soft_threshold(v: np.ndarray, t: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _objective(residual: np.ndarray, w: np.ndarray, alpha: float) -> float:
    return float(np.sum(residual ** 2) + alpha * np.sum(np.abs(w)))


def _init_factors(xc: np.ndarray, cfg: SparsePcaConfig) -> Tuple[np.ndarray, np.ndarray]:
    k = cfg.n_components
    if cfg.init == InitMode.SVD:
        u, s, vt = np.linalg.svd(xc, full_matrices=False)
        return u[:, :k].copy(), s[:k, None] * vt[:k]
    rng = np.random.default_rng(cfg.seed)
    u = rng.normal(size=(xc.shape[0], k))
    u /= np.linalg.norm(u, axis=0, keepdims=True)
    return u, u.T @ xc


def _leading_direction(r: np.ndarray) -> np.ndarray:
    u, _, _ = np.linalg.svd(r, full_matrices=False)
    return u[:, 0]


def fit(x: np.ndarray, cfg: SparsePcaConfig) -> SparsePcaModel:
    """Fit K sparse loading rows to the centred data"""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise SparsePcaError("X must be an N x P matrix")
    n, p = x.shape
    if n < 2:
        raise SparsePcaError("Sparse PCA needs at least 2 samples")
    k = cfg.n_components
    if k > min(n, p):
        raise SparsePcaError(f"n_components={k} exceeds min(N, P)={min(n, p)}")

    means = x.mean(axis=0)
    xc = x - means
    u, w = _init_factors(xc, cfg)
    half_alpha = cfg.alpha / 2.0
    residual = xc - u @ w
    history = [_objective(residual, w, cfg.alpha)]
    reseeded = set()
    converged = False

    it = 0
    for it in range(1, cfg.max_iter + 1):
        # W step: exact lasso minimizer per row given unit-norm u_k
        for c in range(k):
            partial = residual + np.outer(u[:, c], w[c])
            row = _soft_threshold(partial.T @ u[:, c], half_alpha)
            if not row.any() and c not in reseeded:
                reseeded.add(c)
                u[:, c] = _leading_direction(partial)
                row = _soft_threshold(partial.T @ u[:, c], half_alpha)
            w[c] = row
            residual = partial - np.outer(u[:, c], row)

        # U step: best unit direction per column given w_k
        for c in range(k):
            if not w[c].any():
                continue
            partial = residual + np.outer(u[:, c], w[c])
            direction = partial @ w[c]
            norm = np.linalg.norm(direction)
            if norm > 0:
                u[:, c] = direction / norm
            residual = partial - np.outer(u[:, c], w[c])

        history.append(_objective(residual, w, cfg.alpha))
        prev, cur = history[-2], history[-1]
        if prev - cur <= cfg.tol * max(abs(prev), np.finfo(float).tiny):
            converged = True
            break

    if not converged:
        logger.warning(f"Sparse PCA did not converge in {cfg.max_iter} iterations (alpha={cfg.alpha}, K={k})")

    variance = np.sum(w ** 2, axis=1) / (n - 1)
    order = np.argsort(-variance, kind="stable")
    w = w[order]
    variance = variance[order]

    for c in range(k):
        if w[c].any():
            j = int(np.argmax(np.abs(w[c])))
            if w[c, j] < 0:
                w[c] = -w[c]

    degenerate = [int(c) for c in range(k) if not w[c].any()]
    if degenerate:
        logger.warning(f"Sparse PCA components {degenerate} have all-zero loadings (alpha={cfg.alpha})")

    w[w == 0] = 0.0  # drop negative zeros
    sparsity = float(np.count_nonzero(w == 0) / w.size)
    logger.debug(f"Sparse PCA fit: {it} iterations, sparsity={sparsity:.3f}")
    return SparsePcaModel(
        loadings=w,
        feature_means=means,
        explained_variance=variance,
        sparsity_fraction=sparsity,
        config=cfg,
        objective_history=history,
        n_iter=it,
        converged=converged,
        degenerate_components=degenerate,
    )


def transform(model: SparsePcaModel, x: np.ndarray) -> ComponentValues:
    """Project spectra through the loadings: (X - means) W^T"""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.n_features:
        raise SparsePcaError(f"expected {model.n_features} columns, got shape {x.shape}")
    return ComponentValues(values=(x - model.feature_means) @ model.loadings.T)


def fit_scaler(cv: ComponentValues, clip: float = 1.5) -> ComponentScaler:
    """Training-set min-max statistics per component"""
    if cv.n_samples < 2:
        raise SparsePcaError("component normalization needs at least 2 samples")
    return ComponentScaler(minimum=cv.values.min(axis=0), maximum=cv.values.max(axis=0), clip=clip)


def apply_scaler(scaler: ComponentScaler, cv: ComponentValues) -> ComponentValues:
    """Map onto [-1, 1] with the stored statistics; constant components map to 0"""
    span = scaler.maximum - scaler.minimum
    constant = span == 0
    safe = np.where(constant, 1.0, span)
    out = 2.0 * (cv.values - scaler.minimum) / safe - 1.0
    out[:, constant] = 0.0
    return ComponentValues(values=np.clip(out, -scaler.clip, scaler.clip))


def normalize_components(cv: ComponentValues) -> ComponentValues:
    """Min-max each component over the given samples onto [-1, 1]"""
    return apply_scaler(fit_scaler(cv), cv)
