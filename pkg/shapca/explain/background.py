"""
Background (reference) sets for KernelSHAP
"""
import logging
from typing import Optional

import numpy as np
from sklearn.cluster import KMeans

from shapca.config import settings
from shapca.explain.models import BackgroundSelection, BackgroundSet, ExplainerError

logger = logging.getLogger(__name__)


def select_background(
    rows: np.ndarray,
    selection: BackgroundSelection = BackgroundSelection.AUTO,
    n_centroids: Optional[int] = None,
    seed: int = 0,
) -> BackgroundSet:
    """
    Full training matrix with uniform weights, or a k-means summary whose centroids are
    weighted by cluster size. AUTO keeps the full matrix up to
    settings.BACKGROUND_FULL_MAX rows.
    """
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] == 0:
        raise ExplainerError("background source must be a non-empty matrix")
    n = rows.shape[0]
    if selection == BackgroundSelection.AUTO:
        selection = BackgroundSelection.TRAINING_SET if n <= settings.BACKGROUND_FULL_MAX else BackgroundSelection.KMEANS

    if selection == BackgroundSelection.TRAINING_SET:
        return BackgroundSet(rows=rows, weights=np.full(n, 1.0 / n), selection=selection)

    m = min(n_centroids or settings.BACKGROUND_CENTROIDS, n)
    km = KMeans(n_clusters=m, n_init=10, random_state=seed).fit(rows)
    counts = np.bincount(km.labels_, minlength=m).astype(np.float64)
    keep = counts > 0
    logger.info(f"Summarized {n} background rows into {int(keep.sum())} k-means centroids")
    return BackgroundSet(rows=km.cluster_centers_[keep], weights=counts[keep] / counts.sum(), selection=selection)
