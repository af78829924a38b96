"""
Similarity scores between explanation vectors; None marks an undefined score
"""
from typing import Optional

import numpy as np


def cosine_sim(a: np.ndarray, b: np.ndarray) -> Optional[float]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"vector shapes differ: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return None
    return float(np.clip(np.dot(a / na, b / nb), -1.0, 1.0))


def pearson_corr(a: np.ndarray, b: np.ndarray) -> Optional[float]:
    """Cosine of the mean-centred vectors; constant vectors are undefined"""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"vector shapes differ: {a.shape} vs {b.shape}")
    if a.size < 2 or np.ptp(a) == 0 or np.ptp(b) == 0:
        return None
    return cosine_sim(a - a.mean(), b - b.mean())
