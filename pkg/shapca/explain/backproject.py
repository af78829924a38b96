"""
Back-projection of component attributions onto the spectral axis

Importance tracks use absolute loadings, value tracks use signed loadings:
    psi = phi_bar^T |W|       pc_track = pc_bar^T W
"""
import logging
from typing import Dict, List, Optional, Sequence

import numpy as np

from shapca.decomposition.models import ComponentValues
from shapca.explain.models import (
    AttributionTensor,
    ExplainerError,
    GlobalExplanation,
    LocalExplanation,
    SanityReport,
)

logger = logging.getLogger(__name__)

SANITY_TOLERANCE = 1e-12


def _values(cvn) -> np.ndarray:
    return cvn.values if isinstance(cvn, ComponentValues) else np.asarray(cvn, dtype=np.float64)


def global_explain(
    phi: AttributionTensor,
    yhat: np.ndarray,
    cvn,
    loadings: np.ndarray,
    class_names: Optional[Sequence[str]] = None,
) -> Dict[int, GlobalExplanation]:
    """Per class: mean class-c attributions and mean component values over samples predicted as c"""
    yhat = np.asarray(yhat, dtype=np.int64)
    values = _values(cvn)
    w = np.asarray(loadings, dtype=np.float64)
    n, k, c = phi.phi.shape
    if yhat.shape != (n,) or values.shape != (n, k) or w.ndim != 2 or w.shape[0] != k:
        raise ExplainerError(
            f"inconsistent shapes: phi {phi.phi.shape}, yhat {yhat.shape}, components {values.shape}, loadings {w.shape}"
        )
    names = list(class_names or phi.class_names or [str(i) for i in range(c)])
    abs_w = np.abs(w)
    out = {}
    for cls in range(c):
        members = yhat == cls
        used = int(members.sum())
        if used == 0:
            logger.warning(f"No samples predicted as class {names[cls]!r}; global explanation is empty")
            out[cls] = GlobalExplanation(class_index=cls, class_name=names[cls], n_samples_used=0)
            continue
        phi_bar = phi.phi[members, :, cls].mean(axis=0)
        pc_bar = values[members].mean(axis=0)
        out[cls] = GlobalExplanation(
            class_index=cls,
            class_name=names[cls],
            n_samples_used=used,
            psi=phi_bar @ abs_w,
            pc_track=pc_bar @ w,
        )
    return out


def local_explain(
    phi: AttributionTensor,
    i: int,
    c: int,
    cvn_row: np.ndarray,
    loadings: np.ndarray,
    sample_id: Optional[str] = None,
) -> LocalExplanation:
    """Split phi_i toward class c into supporting and opposing parts and project each"""
    if not 0 <= i < phi.n_samples:
        raise ExplainerError(f"sample index {i} out of range [0, {phi.n_samples})")
    if not 0 <= c < phi.n_classes:
        raise ExplainerError(f"class index {c} out of range [0, {phi.n_classes})")
    w = np.asarray(loadings, dtype=np.float64)
    row = phi.phi[i, :, c]
    if w.shape[0] != row.size:
        raise ExplainerError(f"loadings have {w.shape[0]} rows, attributions have {row.size} features")
    abs_w = np.abs(w)
    return LocalExplanation(
        sample_index=i,
        predicted_class=c,
        psi_pos=np.maximum(row, 0.0) @ abs_w,
        psi_neg=np.minimum(row, 0.0) @ abs_w,
        pc_track=np.asarray(cvn_row, dtype=np.float64) @ w,
        sample_id=sample_id,
    )


def local_explain_all(
    phi: AttributionTensor,
    yhat: np.ndarray,
    cvn,
    loadings: np.ndarray,
    sample_ids: Optional[Sequence[str]] = None,
) -> List[LocalExplanation]:
    """Local explanation of every sample for its own predicted class"""
    values = _values(cvn)
    return [
        local_explain(phi, i, int(yhat[i]), values[i], loadings, sample_ids[i] if sample_ids is not None else None)
        for i in range(phi.n_samples)
    ]


def combined_local_vector(le: LocalExplanation) -> np.ndarray:
    """Signed local importance psi_pos + psi_neg"""
    return le.psi_pos + le.psi_neg


def combine_sanity(le: LocalExplanation, loadings: np.ndarray, phi_row: np.ndarray, tol: float = SANITY_TOLERANCE) -> SanityReport:
    """psi_pos + psi_neg must equal phi^T |W|"""
    expected = np.asarray(phi_row, dtype=np.float64) @ np.abs(np.asarray(loadings, dtype=np.float64))
    deviation = float(np.max(np.abs(combined_local_vector(le) - expected))) if expected.size else 0.0
    return SanityReport(passed=deviation <= tol, max_deviation=deviation, tolerance=tol)
