"""
Two-stage hyperparameter search over Sparse PCA and classifier settings jointly

Stage 1 samples n_samples configurations from the declared distributions; stage 2
evaluates an explicit grid with every other key pinned to the stage-1 winner. Each
candidate is scored by mean cross-validated accuracy (or macro-F1). Among candidates
within comparable_within of the best score, the one with the sparsest loadings wins.
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from pydantic import ValidationError
from scipy import stats
from sklearn.model_selection import ParameterGrid, ParameterSampler

from shapca.classifiers.models import (
    CandidateScore,
    ModelError,
    PipelineConfig,
    Scoring,
    SearchResult,
    SearchSpec,
)
from shapca.classifiers.pipeline import evaluate, fit_pipeline
from shapca.spectra.io import subset
from shapca.spectra.models import SpectraDataset
from shapca.spectra.splitting import Fold, default_fold_mode, kfold_indices
from shapca.utils.files import write_csv_atomic

logger = logging.getLogger(__name__)

SCORE_COLUMNS = ["stage", "candidate", "params", "mean_accuracy", "std_accuracy", "mean_macro_f1", "mean_sparsity", "score"]


def to_distribution(key: str, spec: Any):
    """Map a config entry onto a scipy.stats distribution or a list of choices"""
    if isinstance(spec, list):
        if not spec:
            raise ModelError(f"{key}: empty choice list")
        return spec
    if isinstance(spec, dict) and len(spec) == 1:
        (kind, bounds), = spec.items()
        lo, hi = bounds
        if kind == "loguniform":
            return stats.loguniform(lo, hi)
        if kind == "uniform":
            return stats.uniform(loc=lo, scale=hi - lo)
        if kind == "randint":
            return stats.randint(lo, hi + 1)  # inclusive upper bound
    raise ModelError(f"{key}: unsupported distribution {spec!r}")


def _plain(value: Any) -> Any:
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def apply_params(base: PipelineConfig, params: Dict[str, Any]) -> PipelineConfig:
    """Pipeline config with spca__/clf__ overrides applied and re-validated"""
    spca_updates = {k[len("spca__"):]: v for k, v in params.items() if k.startswith("spca__")}
    clf_updates = {k[len("clf__"):]: v for k, v in params.items() if k.startswith("clf__")}
    if spca_updates and base.sparse_pca is None:
        raise ModelError("spca__ parameters given for a pipeline without Sparse PCA")
    try:
        spca = base.sparse_pca
        if spca_updates:
            spca = type(spca).model_validate({**spca.model_dump(), **spca_updates})
        clf = base.classifier
        if clf_updates:
            clf = type(clf).model_validate({**clf.model_dump(), **clf_updates})
    except ValidationError as e:
        raise ModelError(f"invalid search parameters {params}: {e}") from e
    return PipelineConfig(sparse_pca=spca, classifier=clf, clip=base.clip)


def _score_candidate(
    train: SpectraDataset,
    folds: Sequence[Fold],
    cfg: PipelineConfig,
    scoring: Scoring,
) -> Tuple[float, float, float, float, float]:
    acc, f1, sparsity = [], [], []
    for fit_idx, val_idx in folds:
        pipeline = fit_pipeline(subset(train, fit_idx), cfg)
        metrics = evaluate(pipeline, subset(train, val_idx))
        acc.append(metrics.accuracy)
        f1.append(metrics.macro_f1)
        sparsity.append(pipeline.sparse_pca.sparsity_fraction if pipeline.sparse_pca is not None else 0.0)
    mean_acc, mean_f1 = float(np.mean(acc)), float(np.mean(f1))
    score = mean_acc if scoring == Scoring.ACCURACY else mean_f1
    return mean_acc, float(np.std(acc)), mean_f1, float(np.mean(sparsity)), score


def select_best(table: Sequence[CandidateScore], comparable_within: float = 0.0) -> CandidateScore:
    """Highest score; within the comparable margin prefer higher sparsity, then score, then table order"""
    if not table:
        raise ModelError("no candidates were scored")
    top = max(row.score for row in table)
    comparable = [(i, row) for i, row in enumerate(table) if row.score >= top - comparable_within]
    _, best = min(comparable, key=lambda item: (-item[1].mean_sparsity, -item[1].score, item[0]))
    return best


def _run_stage(
    stage: str,
    candidates: List[Dict[str, Any]],
    start: int,
    train: SpectraDataset,
    folds: Sequence[Fold],
    base: PipelineConfig,
    spec: SearchSpec,
    workers: int,
) -> List[CandidateScore]:
    configs = [apply_params(base, params) for params in candidates]
    scores = Parallel(n_jobs=workers)(
        delayed(_score_candidate)(train, folds, cfg, spec.scoring) for cfg in configs
    )
    rows = []
    for offset, (params, (acc, acc_std, f1, sparsity, score)) in enumerate(zip(candidates, scores)):
        rows.append(CandidateScore(
            stage=stage,
            candidate=start + offset,
            params=params,
            mean_accuracy=acc,
            std_accuracy=acc_std,
            mean_macro_f1=f1,
            mean_sparsity=sparsity,
            score=score,
        ))
    best = select_best(rows, spec.comparable_within)
    logger.info(f"Search {stage}: {len(rows)} candidates, best score {best.score:.4f} with {best.params}")
    return rows


def hyperparam_search(
    train: SpectraDataset,
    base: PipelineConfig,
    spec: SearchSpec,
    workers: int = 1,
) -> SearchResult:
    """Randomized stage then grid stage under k-fold CV; returns the winner and the full table"""
    mode = spec.cv_mode or default_fold_mode(train)
    folds = kfold_indices(train, spec.k, mode, seed=spec.seed)

    if spec.distributions:
        dists = {k: to_distribution(k, v) for k, v in spec.distributions.items()}
        sampled = ParameterSampler(dists, n_iter=spec.n_samples, random_state=spec.seed)
        stage1 = [{k: _plain(v) for k, v in sorted(p.items())} for p in sampled]
    else:
        stage1 = [{}]
    table = _run_stage("random", stage1, 0, train, folds, base, spec, workers)
    stage1_best = select_best(table, spec.comparable_within)

    if spec.grids:
        stage2 = [
            {**stage1_best.params, **{k: _plain(v) for k, v in point.items()}}
            for point in ParameterGrid(spec.grids)
        ]
        table += _run_stage("grid", stage2, len(table), train, folds, base, spec, workers)

    best = select_best(table, spec.comparable_within)
    best_cfg = apply_params(base, best.params)
    return SearchResult(
        best_params=best.params,
        best_sparse_pca=best_cfg.sparse_pca,
        best_classifier=best_cfg.classifier,
        table=table,
    )


def write_search_report(result: SearchResult, path: Path) -> Path:
    rows = [
        [r.stage, r.candidate, json.dumps(r.params, sort_keys=True), r.mean_accuracy, r.std_accuracy,
         r.mean_macro_f1, r.mean_sparsity, r.score]
        for r in result.table
    ]
    return write_csv_atomic(path, SCORE_COLUMNS, rows)
