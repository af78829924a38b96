"""
Spectral preprocessing chain: crop -> Savitzky-Golay -> baseline -> max normalization
"""
import logging
from typing import Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy import sparse
from scipy.signal import savgol_filter
from scipy.sparse.linalg import spsolve

from shapca.spectra.errors import PreprocessError
from shapca.spectra.models import NormalizeMode, PreprocessConfig, SpectraDataset, SpectralAxis

logger = logging.getLogger(__name__)

# stop reweighting once fewer than this fraction of residual signs flip
BASELINE_SIGN_CHANGE_TOL = 1e-3


def crop(ds: SpectraDataset, lo: float, hi: float) -> SpectraDataset:
    """Keep the columns whose axis value lies in [lo, hi]"""
    values = ds.axis.values
    keep = (values >= lo) & (values <= hi)
    if keep.sum() < 2:
        raise PreprocessError(f"crop range [{lo}, {hi}] keeps fewer than 2 axis points")
    if keep.all():
        return ds
    axis = SpectralAxis(values=values[keep], unit_label=ds.axis.unit_label)
    return ds.with_intensities(ds.intensities[:, keep], axis=axis)


def savgol_smooth(y: np.ndarray, window: int, polyorder: int) -> np.ndarray:
    """
    Savitzky-Golay smoothing.

    Interior points use the standard centred least-squares filter. The first and last
    window // 2 points are fitted on the truncated one-sided window that fits inside the
    signal, so no boundary data is invented.
    """
    y = np.asarray(y, dtype=np.float64)
    if window % 2 == 0 or window < 1:
        raise PreprocessError(f"window must be odd, got {window}")
    if polyorder >= window:
        raise PreprocessError(f"polyorder {polyorder} must be < window {window}")
    if y.size < window:
        raise PreprocessError(f"signal length {y.size} is shorter than window {window}")

    out = savgol_filter(y, window, polyorder, mode="constant")
    half = window // 2
    n = y.size
    for i in list(range(half)) + list(range(n - half, n)):
        lo, hi = max(0, i - half), min(n, i + half + 1)
        offsets = np.arange(lo, hi) - i
        deg = min(polyorder, hi - lo - 1)
        coef = np.polynomial.polynomial.polyfit(offsets, y[lo:hi], deg)
        out[i] = coef[0]
    return out


def _second_difference_penalty(n: int, lam: float) -> sparse.csc_matrix:
    d = sparse.diags([1.0, -2.0, 1.0], [0, -1, -2], shape=(n, n - 2))
    return (lam * d.dot(d.transpose())).tocsc()


def baseline_correct(
    y: np.ndarray,
    lam: float,
    p: float,
    max_iter: int = 50,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Asymmetric penalized least-squares baseline (reweighted Whittaker smoother).

    Minimizes sum_i w_i (y_i - z_i)^2 + lam * ||D2 z||^2 with w_i = p above the baseline
    and 1 - p elsewhere. Returns (y - z, z).
    """
    y = np.asarray(y, dtype=np.float64)
    if lam <= 0:
        raise PreprocessError(f"lambda must be positive, got {lam}")
    if not 0.0 < p < 1.0:
        raise PreprocessError(f"p must lie in (0, 1), got {p}")
    n = y.size
    if n < 3:
        raise PreprocessError("baseline correction needs at least 3 points")

    penalty = _second_difference_penalty(n, lam)
    w = np.ones(n)
    above = None
    z = y.copy()
    for it in range(max_iter):
        weights = sparse.diags(w, 0, shape=(n, n), format="csc")
        z = spsolve(weights + penalty, w * y)
        new_above = y > z
        if above is not None:
            flips = np.count_nonzero(new_above != above) / n
            if flips < BASELINE_SIGN_CHANGE_TOL:
                break
        above = new_above
        w = np.where(new_above, p, 1.0 - p)
    return y - z, z


def normalize_max(y: np.ndarray) -> np.ndarray:
    """Scale a spectrum so its maximum is 1"""
    y = np.asarray(y, dtype=np.float64)
    if not np.any(y):
        raise PreprocessError("cannot normalize an all-zero spectrum")
    peak = y.max()
    if peak <= 0:
        raise PreprocessError("spectrum has no positive intensity to normalize by")
    return y / peak


def _process_spectrum(y: np.ndarray, cfg: PreprocessConfig) -> np.ndarray:
    if cfg.savgol_window is not None:
        y = savgol_smooth(y, cfg.savgol_window, cfg.savgol_polyorder)
    if cfg.baseline_lambda is not None:
        y, _ = baseline_correct(y, cfg.baseline_lambda, cfg.baseline_p, cfg.baseline_max_iter)
    if cfg.normalize == NormalizeMode.MAX_INTENSITY:
        y = normalize_max(y)
    return y


def run_chain(ds: SpectraDataset, cfg: PreprocessConfig, workers: int = 1) -> SpectraDataset:
    """Apply the configured steps to every spectrum independently"""
    if cfg.crop_min is not None or cfg.crop_max is not None:
        lo = cfg.crop_min if cfg.crop_min is not None else -np.inf
        hi = cfg.crop_max if cfg.crop_max is not None else np.inf
        ds = crop(ds, lo, hi)

    rows = Parallel(n_jobs=workers)(
        delayed(_process_spectrum)(ds.intensities[i], cfg) for i in range(ds.n_samples)
    )
    out = np.vstack(rows) if rows else np.empty((0, ds.n_features))
    logger.info(f"Preprocessed {ds.n_samples} spectra ({ds.n_features} points)")
    return ds.with_intensities(out)
