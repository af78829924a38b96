"""
Sparse PCA -> component scaling -> classifier pipelines and their evaluation
"""
import logging
from typing import Optional

import numpy as np
from scipy import stats
from sklearn.metrics import accuracy_score, f1_score

from shapca.classifiers.forest import fit_forest
from shapca.classifiers.linear import fit_linear
from shapca.classifiers.models import (
    FittedPipeline,
    ForestConfig,
    Metrics,
    PipelineConfig,
    RepeatedMetrics,
)
from shapca.classifiers.predict import predict, predict_proba
from shapca.decomposition import sparse_pca
from shapca.decomposition.models import ComponentValues
from shapca.spectra.models import SpectraDataset, SplitSpec
from shapca.spectra.splitting import split
from shapca.utils.files import derive_seed

logger = logging.getLogger(__name__)


def fit_pipeline(train: SpectraDataset, cfg: PipelineConfig, workers: int = 1) -> FittedPipeline:
    spca_model = None
    scaler = None
    if cfg.sparse_pca is not None:
        spca_model = sparse_pca.fit(train.intensities, cfg.sparse_pca)
        raw_cv = sparse_pca.transform(spca_model, train.intensities)
        scaler = sparse_pca.fit_scaler(raw_cv, clip=cfg.clip)
        features = sparse_pca.apply_scaler(scaler, raw_cv).values
    else:
        features = train.intensities

    if isinstance(cfg.classifier, ForestConfig):
        clf = fit_forest(features, train.labels, cfg.classifier, n_classes=train.n_classes, workers=workers)
    else:
        clf = fit_linear(features, train.labels, cfg.classifier, n_classes=train.n_classes)
    return FittedPipeline(sparse_pca=spca_model, scaler=scaler, classifier=clf, class_names=train.class_names)


def features(pipeline: FittedPipeline, ds: SpectraDataset) -> ComponentValues:
    """Classifier inputs: normalized component values, or the raw intensities"""
    if pipeline.sparse_pca is None:
        return ComponentValues(values=ds.intensities)
    raw_cv = sparse_pca.transform(pipeline.sparse_pca, ds.intensities)
    return sparse_pca.apply_scaler(pipeline.scaler, raw_cv)


def pipeline_proba(pipeline: FittedPipeline, ds: SpectraDataset) -> np.ndarray:
    return predict_proba(pipeline.classifier, features(pipeline, ds))


def pipeline_predict(pipeline: FittedPipeline, ds: SpectraDataset) -> np.ndarray:
    return predict(pipeline.classifier, features(pipeline, ds))


def evaluate(pipeline: FittedPipeline, ds: SpectraDataset) -> Metrics:
    yhat = pipeline_predict(pipeline, ds)
    labels = list(range(len(pipeline.class_names)))
    return Metrics(
        accuracy=float(accuracy_score(ds.labels, yhat)),
        macro_f1=float(f1_score(ds.labels, yhat, labels=labels, average="macro", zero_division=0)),
        n_samples=ds.n_samples,
    )


def _ci95(values: np.ndarray) -> float:
    if values.size < 2:
        return 0.0
    sem = np.std(values, ddof=1) / np.sqrt(values.size)
    return float(stats.t.ppf(0.975, values.size - 1) * sem)


def repeated_evaluation(
    ds: SpectraDataset,
    cfg: PipelineConfig,
    n_runs: int,
    split_spec: Optional[SplitSpec] = None,
    seed: int = 0,
    workers: int = 1,
) -> RepeatedMetrics:
    """Refit on n_runs independent resplits; mean and 95% t-interval half-width"""
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    split_spec = split_spec or SplitSpec()
    runs = []
    for r in range(n_runs):
        spec = SplitSpec(mode=split_spec.mode, test_fraction=split_spec.test_fraction, seed=derive_seed(seed, f"resplit-{r}"))
        train, test = split(ds, spec)
        runs.append(evaluate(fit_pipeline(train, cfg, workers=workers), test))
        logger.info(f"Resplit {r + 1}/{n_runs}: accuracy={runs[-1].accuracy:.3f} macro_f1={runs[-1].macro_f1:.3f}")
    acc = np.array([m.accuracy for m in runs])
    f1 = np.array([m.macro_f1 for m in runs])
    return RepeatedMetrics(
        runs=runs,
        accuracy_mean=float(acc.mean()),
        accuracy_ci95=_ci95(acc),
        macro_f1_mean=float(f1.mean()),
        macro_f1_ci95=_ci95(f1),
    )
