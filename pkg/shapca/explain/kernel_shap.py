"""
KernelSHAP: Shapley values as a Shapley-kernel weighted least-squares fit over coalitions

Missing features take background values and predictions are averaged over the weighted
background rows. The efficiency constraint sum(phi) = f(x) - phi0 is imposed exactly by
eliminating the last feature before solving the regression.
"""
import logging
from typing import Optional, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy.special import comb

from shapca.config import settings
from shapca.decomposition.models import ComponentValues
from shapca.explain.brute_force import ProbaFn, as_proba_fn
from shapca.explain.models import AttributionTensor, BackgroundSet, ExplainerError

logger = logging.getLogger(__name__)

# model rows evaluated per batch when imputing coalitions
MAX_EVAL_ROWS = 20_000


def kernel_weight(k: int, size: int) -> float:
    return (k - 1) / (comb(k, size, exact=True) * size * (k - size))


def default_n_coalitions(k: int) -> int:
    return 2 * k + settings.KERNEL_EXTRA_COALITIONS


def all_coalitions(k: int) -> Tuple[np.ndarray, np.ndarray]:
    """Every proper non-empty coalition with its kernel weight"""
    codes = np.arange(1, 2 ** k - 1)
    masks = ((codes[:, None] >> np.arange(k)[None, :]) & 1).astype(bool)
    sizes = masks.sum(axis=1)
    weights = np.array([kernel_weight(k, int(s)) for s in sizes])
    return masks, weights


def sample_coalitions(k: int, n: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """
    Draw coalition sizes with probability proportional to their total kernel weight,
    members uniformly, each paired with its complement. Duplicates are merged and
    weighted by frequency.
    """
    sizes = np.arange(1, k)
    p = (k - 1) / (sizes * (k - sizes))
    p = p / p.sum()
    drawn = []
    while len(drawn) < n:
        size = int(rng.choice(sizes, p=p))
        mask = np.zeros(k, dtype=bool)
        mask[rng.choice(k, size=size, replace=False)] = True
        drawn.append(mask)
        drawn.append(~mask)
    masks, counts = np.unique(np.array(drawn), axis=0, return_counts=True)
    return masks, counts.astype(np.float64)


def _coalition_values(proba: ProbaFn, x: np.ndarray, masks: np.ndarray, background: BackgroundSet) -> np.ndarray:
    m, k = background.rows.shape
    chunk = max(1, MAX_EVAL_ROWS // m)
    out = []
    for start in range(0, masks.shape[0], chunk):
        block = masks[start:start + chunk]
        z = np.where(block[:, None, :], x[None, None, :], background.rows[None, :, :])
        preds = proba(z.reshape(-1, k)).reshape(block.shape[0], m, -1)
        out.append(np.einsum("m,bmc->bc", background.weights, preds))
    return np.vstack(out)


def _solve(masks: np.ndarray, weights: np.ndarray, y: np.ndarray, delta: np.ndarray) -> np.ndarray:
    k = masks.shape[1]
    if masks.shape[0] < k:
        raise ExplainerError(f"only {masks.shape[0]} distinct coalitions for {k} features")
    z = masks.astype(np.float64)
    a = z[:, :-1] - z[:, -1:]
    b = y - z[:, -1:] * delta[None, :]
    sw = np.sqrt(weights)[:, None]
    coef, _, rank, _ = np.linalg.lstsq(a * sw, b * sw, rcond=None)
    if rank < k - 1:
        raise ExplainerError("coalition design matrix is rank deficient")
    return np.vstack([coef, delta - coef.sum(axis=0)])


def _explain_row(
    proba: ProbaFn,
    x: np.ndarray,
    fx: np.ndarray,
    phi0: np.ndarray,
    background: BackgroundSet,
    masks: Optional[np.ndarray],
    weights: Optional[np.ndarray],
    n_coalitions: Optional[int],
    seed: Tuple[int, int],
) -> np.ndarray:
    k = x.size
    delta = fx - phi0
    if k == 1:
        return delta[None, :]
    if masks is None:
        masks, weights = sample_coalitions(k, n_coalitions, np.random.default_rng(np.random.SeedSequence(seed)))
    y = _coalition_values(proba, x, masks, background) - phi0[None, :]
    return _solve(masks, weights, y, delta)


def kernel_shap(
    model,
    cv,
    background: BackgroundSet,
    n_coalitions: Optional[int] = None,
    seed: int = 0,
    workers: int = 1,
) -> AttributionTensor:
    """
    n_coalitions=None enumerates all 2^K - 2 proper coalitions; an integer samples that
    many (falling back to enumeration when it would cover them all).
    """
    x = cv.values if isinstance(cv, ComponentValues) else np.atleast_2d(np.asarray(cv, dtype=np.float64))
    n, k = x.shape
    if background.rows.shape[1] != k:
        raise ExplainerError(f"background has {background.rows.shape[1]} features, data has {k}")
    if n_coalitions is not None and n_coalitions < 1:
        raise ExplainerError("n_coalitions must be positive")
    exhaustive = n_coalitions is None or (k < 31 and n_coalitions >= 2 ** k - 2)
    if exhaustive and k > settings.KERNEL_MAX_EXHAUSTIVE:
        raise ExplainerError(f"exhaustive KernelSHAP over {k} features exceeds the limit of {settings.KERNEL_MAX_EXHAUSTIVE}")

    proba = as_proba_fn(model)
    phi0 = background.weights @ proba(background.rows)
    fx = proba(x)
    masks, weights = all_coalitions(k) if exhaustive and k > 1 else (None, None)

    rows = Parallel(n_jobs=workers)(
        delayed(_explain_row)(proba, x[i], fx[i], phi0, background, masks, weights, n_coalitions, (seed, i))
        for i in range(n)
    )
    phi = np.stack(rows) if rows else np.zeros((0, k, phi0.size))
    label = "kernel" if exhaustive else "kernel_sampled"
    logger.debug(f"KernelSHAP ({label}): {n} rows, {k} features, {background.rows.shape[0]} background rows")
    return AttributionTensor(phi=phi, phi0=phi0, explainer=label)
