"""
Explainer dispatch, additivity checks and attribution files
"""
import logging
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from shapca.classifiers.models import ForestModel
from shapca.decomposition.models import ComponentValues
from shapca.explain.kernel_shap import default_n_coalitions, kernel_shap
from shapca.explain.models import AttributionTensor, BackgroundSet, ExplainerError
from shapca.explain.tree_shap import tree_shap
from shapca.utils.files import read_json, write_csv_atomic, write_json_atomic

logger = logging.getLogger(__name__)

AUTO = "auto"
EXHAUSTIVE = "exhaustive"


def resolve_coalitions(k: int, n_coalitions) -> Optional[int]:
    """'exhaustive' -> None; 'auto' enumerates when that is no more work than the sampled default"""
    if n_coalitions == EXHAUSTIVE or n_coalitions is None:
        return None
    if n_coalitions == AUTO:
        default = default_n_coalitions(k)
        return None if k < 31 and 2 ** k - 2 <= default else default
    return int(n_coalitions)


def explain(
    model,
    cv,
    background: Optional[BackgroundSet] = None,
    n_coalitions=AUTO,
    seed: int = 0,
    workers: int = 1,
    class_names: Optional[List[str]] = None,
) -> AttributionTensor:
    """TreeSHAP for forests, KernelSHAP for everything else"""
    if isinstance(model, ForestModel):
        tensor = tree_shap(model, cv, workers=workers)
    else:
        if background is None:
            raise ExplainerError("KernelSHAP needs a background set")
        k = cv.n_components if isinstance(cv, ComponentValues) else np.atleast_2d(cv).shape[1]
        tensor = kernel_shap(model, cv, background, resolve_coalitions(k, n_coalitions), seed=seed, workers=workers)
    if class_names is not None:
        tensor = AttributionTensor(phi=tensor.phi, phi0=tensor.phi0, explainer=tensor.explainer, class_names=class_names)
    return tensor


def check_additivity(tensor: AttributionTensor, probs: np.ndarray, tol: float) -> float:
    """Max |phi0 + sum(phi) - f(x)| over samples and classes; raises above tol"""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.shape != (tensor.n_samples, tensor.n_classes):
        raise ExplainerError(f"probabilities have shape {probs.shape}, expected {(tensor.n_samples, tensor.n_classes)}")
    deviation = float(np.max(np.abs(tensor.reconstructed() - probs))) if probs.size else 0.0
    if deviation > tol:
        raise ExplainerError(f"additivity violated: max deviation {deviation:.3e} > {tol:.1e}")
    return deviation


def write_attributions(tensor: AttributionTensor, json_path: Path, csv_path: Path) -> Tuple[Path, Path]:
    """JSON header (shape, phi0, classes) plus a long-format sample,component,class,value CSV"""
    header = {
        "format": "shapca.attributions/1",
        "explainer": tensor.explainer,
        "shape": list(tensor.phi.shape),
        "phi0": tensor.phi0.tolist(),
        "class_names": tensor.class_names,
        "values_file": Path(csv_path).name,
    }
    n, k, c = tensor.phi.shape
    rows = (
        [i, j, cls, float(tensor.phi[i, j, cls])]
        for i in range(n) for j in range(k) for cls in range(c)
    )
    write_csv_atomic(csv_path, ["sample", "component", "class", "value"], rows)
    write_json_atomic(json_path, header)
    return Path(json_path), Path(csv_path)


def read_attributions(json_path: Path) -> AttributionTensor:
    header = read_json(json_path)
    if header.get("format") != "shapca.attributions/1":
        raise ExplainerError(f"unknown attribution file {json_path}")
    phi = np.zeros(header["shape"])
    csv_path = Path(json_path).parent / header["values_file"]
    data = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    if data.size:
        idx = data[:, :3].astype(np.int64)
        phi[idx[:, 0], idx[:, 1], idx[:, 2]] = data[:, 3]
    return AttributionTensor(
        phi=phi,
        phi0=header["phi0"],
        explainer=header["explainer"],
        class_names=header["class_names"],
    )
