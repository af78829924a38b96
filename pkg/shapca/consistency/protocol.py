"""
Explanation consistency across independently retrained pipelines

f pipelines are trained on the k fold-training portions (or f identical copies of the
training data), each one explains the same held-out set, and every pair of models is
scored by cosine similarity and Pearson correlation on class-wise global vectors and on
per-sample local vectors.
"""
import logging
from itertools import combinations
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict

from shapca.classifiers.models import FittedPipeline, ForestConfig, ForestModel, PipelineConfig
from shapca.classifiers.pipeline import features, fit_pipeline
from shapca.classifiers.predict import predict
from shapca.consistency.metrics import cosine_sim, pearson_corr
from shapca.consistency.models import (
    ClassScores,
    ConsistencyConfig,
    ConsistencyReport,
    LocalScores,
    Method,
    Resampling,
    ScoreMatrix,
)
from shapca.explain.backproject import combined_local_vector, global_explain, local_explain_all
from shapca.explain.background import select_background
from shapca.explain.engine import explain
from shapca.spectra.errors import SplitError
from shapca.spectra.io import subset
from shapca.spectra.models import SpectraDataset
from shapca.spectra.splitting import default_fold_mode, kfold_indices
from shapca.utils.files import derive_seed, write_csv_atomic

logger = logging.getLogger(__name__)


class ModelExplanations(BaseModel):
    """One model's view of the held-out set; global vectors are None for empty classes"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    yhat: np.ndarray
    global_vectors: List[Optional[np.ndarray]]
    local_vectors: List[np.ndarray]


def classifier_label(cfg: PipelineConfig) -> str:
    return "forest" if isinstance(cfg.classifier, ForestConfig) else "linear"


def explain_holdout(
    pipeline: FittedPipeline,
    train: SpectraDataset,
    holdout: SpectraDataset,
    cfg: ConsistencyConfig,
    seed: int = 0,
) -> ModelExplanations:
    """Global and local back-projected vectors of one fitted pipeline on the holdout"""
    x_hold = features(pipeline, holdout)
    yhat = predict(pipeline.classifier, x_hold)
    background = None
    if not isinstance(pipeline.classifier, ForestModel):
        background = select_background(features(pipeline, train).values, cfg.background, seed=seed)
    tensor = explain(pipeline.classifier, x_hold, background, n_coalitions=cfg.n_coalitions, seed=seed)

    if pipeline.sparse_pca is not None:
        loadings = pipeline.sparse_pca.loadings
    else:
        loadings = np.eye(holdout.n_features)
    ge = global_explain(tensor, yhat, x_hold, loadings, pipeline.class_names)
    locals_ = local_explain_all(tensor, yhat, x_hold, loadings)
    return ModelExplanations(
        yhat=yhat,
        global_vectors=[None if ge[c].empty else ge[c].psi for c in range(len(pipeline.class_names))],
        local_vectors=[combined_local_vector(le) for le in locals_],
    )


def raw_shap_baseline(
    train: SpectraDataset,
    holdout: SpectraDataset,
    classifier_cfg,
    cfg: Optional[ConsistencyConfig] = None,
    seed: int = 0,
) -> ModelExplanations:
    """Classifier on the raw spectral features, explained per feature without projection"""
    pipeline = fit_pipeline(train, PipelineConfig(sparse_pca=None, classifier=classifier_cfg))
    return explain_holdout(pipeline, train, holdout, cfg or ConsistencyConfig(), seed=seed)


def _mean(values: Sequence[Optional[float]]) -> Optional[float]:
    defined = [v for v in values if v is not None]
    return float(np.mean(defined)) if defined else None


def _empty_matrix(f: int) -> ScoreMatrix:
    return [[None] * f for _ in range(f)]


def _score_pairs(views: List[ModelExplanations], class_names: Sequence[str]):
    f = len(views)
    pairs = list(combinations(range(f), 2))

    global_scores = []
    for c, name in enumerate(class_names):
        cos_m, pear_m = _empty_matrix(f), _empty_matrix(f)
        for a, b in pairs:
            va, vb = views[a].global_vectors[c], views[b].global_vectors[c]
            if va is None or vb is None:
                continue
            cos_m[a][b] = cos_m[b][a] = cosine_sim(va, vb)
            pear_m[a][b] = pear_m[b][a] = pearson_corr(va, vb)
        cos_vals = [cos_m[a][b] for a, b in pairs]
        pear_vals = [pear_m[a][b] for a, b in pairs]
        global_scores.append(ClassScores(
            class_name=name,
            cosine_mean=_mean(cos_vals),
            pearson_mean=_mean(pear_vals),
            n_defined_cosine=sum(v is not None for v in cos_vals),
            n_defined_pearson=sum(v is not None for v in pear_vals),
            cosine_matrix=cos_m,
            pearson_matrix=pear_m,
        ))

    all_cos, all_pear = [], []
    mismatch = total = 0
    cos_m, pear_m = _empty_matrix(f), _empty_matrix(f)
    for a, b in pairs:
        pair_cos, pair_pear = [], []
        for i in range(views[a].yhat.size):
            total += 1
            if views[a].yhat[i] != views[b].yhat[i]:
                mismatch += 1
                continue
            pair_cos.append(cosine_sim(views[a].local_vectors[i], views[b].local_vectors[i]))
            pair_pear.append(pearson_corr(views[a].local_vectors[i], views[b].local_vectors[i]))
        cos_m[a][b] = cos_m[b][a] = _mean(pair_cos)
        pear_m[a][b] = pear_m[b][a] = _mean(pair_pear)
        all_cos += pair_cos
        all_pear += pair_pear

    local = LocalScores(
        cosine_mean=_mean(all_cos),
        pearson_mean=_mean(all_pear),
        n_sample_pairs=total,
        n_class_mismatch=mismatch,
        exclusion_rate=mismatch / total if total else 0.0,
        n_undefined_cosine=sum(v is None for v in all_cos),
        n_undefined_pearson=sum(v is None for v in all_pear),
        cosine_matrix=cos_m,
        pearson_matrix=pear_m,
    )
    return global_scores, local


def _check_disjoint(ds: SpectraDataset, holdout: SpectraDataset):
    if ds.groups is not None and holdout.groups is not None:
        shared = set(ds.groups) & set(holdout.groups)
        if shared:
            raise SplitError(f"holdout shares {len(shared)} groups with the training data")


def run_protocol(
    ds: SpectraDataset,
    holdout: SpectraDataset,
    pipeline_cfg: PipelineConfig,
    method: Method,
    cfg: Optional[ConsistencyConfig] = None,
    seed: int = 0,
    workers: int = 1,
) -> ConsistencyReport:
    cfg = cfg or ConsistencyConfig()
    _check_disjoint(ds, holdout)
    if method == Method.RAW_SHAP:
        pipeline_cfg = PipelineConfig(sparse_pca=None, classifier=pipeline_cfg.classifier, clip=pipeline_cfg.clip)

    if cfg.resampling == Resampling.KFOLD:
        mode = cfg.fold_mode or default_fold_mode(ds)
        folds = kfold_indices(ds, cfg.k, mode, seed=derive_seed(seed, "consistency-folds"))
        trains = [subset(ds, fit_idx) for fit_idx, _ in folds]
    else:
        trains = [ds] * cfg.k

    pipelines = Parallel(n_jobs=workers)(delayed(fit_pipeline)(train, pipeline_cfg) for train in trains)
    views = Parallel(n_jobs=workers)(
        delayed(explain_holdout)(p, t, holdout, cfg, derive_seed(seed, "consistency-explain"))
        for p, t in zip(pipelines, trains)
    )
    global_scores, local = _score_pairs(views, ds.class_names)
    f = len(views)
    report = ConsistencyReport(
        method=method,
        classifier=classifier_label(pipeline_cfg),
        resampling=cfg.resampling,
        n_models=f,
        n_pairs=f * (f - 1) // 2,
        global_scores=global_scores,
        local=local,
    )
    undefined = sum(s.n_defined_cosine < report.n_pairs for s in global_scores)
    logger.info(
        f"Consistency {report.label}: {f} models, local exclusion rate {local.exclusion_rate:.3f}, "
        f"{undefined} classes with undefined pairs"
    )
    return report


def report_table(reports: Sequence[ConsistencyReport]) -> List[List]:
    """Rows = class names + 'Local'; two columns (cosine, pearson) per report"""
    if not reports:
        return []
    names = [s.class_name for s in reports[0].global_scores]
    rows = []
    for c, name in enumerate(names):
        row = [name]
        for r in reports:
            row += [r.global_scores[c].cosine_mean, r.global_scores[c].pearson_mean]
        rows.append(row)
    local_row = ["Local"]
    for r in reports:
        local_row += [r.local.cosine_mean, r.local.pearson_mean]
    rows.append(local_row)
    return [[("" if v is None else v) for v in row] for row in rows]


def write_report_csv(reports: Sequence[ConsistencyReport], path: Path) -> Path:
    header = ["row"]
    for r in reports:
        header += [f"{r.label}_cosine", f"{r.label}_pearson"]
    return write_csv_atomic(path, header, report_table(reports))
