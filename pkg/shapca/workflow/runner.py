"""
CLI stages

Each stage reads the run config plus artifacts of earlier stages from the output
directory and writes its own artifacts atomically:

    synth           spectra.csv, latent_factors.csv
    fit             split.json, cache/train.json, cache/test.json, model.json,
                    metrics.json, search_report.csv (when searching)
    explain-global  explanations/attributions.{json,csv}, explanations/global.json,
                    explanations/global_<class>.{svg,csv}
    explain-local   explanations/local_<sample>.{json,svg,csv}
    consistency     consistency.json, report.csv
    render          figures/*.svg re-drawn from the explanation JSON
"""
import json
import logging
import time
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from shapca.classifiers.models import FittedPipeline, ForestModel, PipelineConfig
from shapca.classifiers.pipeline import evaluate, features, fit_pipeline
from shapca.classifiers.predict import predict, predict_proba
from shapca.classifiers.search import hyperparam_search, write_search_report
from shapca.consistency.protocol import run_protocol, write_report_csv
from shapca.decomposition.models import ComponentValues
from shapca.explain.backproject import global_explain, local_explain
from shapca.explain.background import select_background
from shapca.explain.engine import check_additivity, explain, write_attributions
from shapca.explain.models import AttributionTensor, GlobalExplanation, LocalExplanation
from shapca.render.figures import (
    export_tracks_csv,
    global_tracks,
    local_tracks,
    render_global,
    render_local,
    write_svg,
)
from shapca.spectra import io as spectra_io
from shapca.spectra.models import SpectraDataset, SpectralAxis
from shapca.spectra.preprocess import run_chain
from shapca.spectra.splitting import split_indices
from shapca.spectra.synth import make_synthetic, write_synthetic
from shapca.utils.files import read_json, write_json_atomic
from shapca.workflow import run_log
from shapca.workflow.models import ConfigError, OverwriteError, RunAction, RunConfig, StageError

logger = logging.getLogger(__name__)

ADDITIVITY_TOL = {"tree": 1e-8, "kernel": 1e-6, "kernel_sampled": 1e-6}

MODEL_FILE = "model.json"
METRICS_FILE = "metrics.json"
EXPLANATIONS_DIR = "explanations"
FIGURES_DIR = "figures"


class FitArtifacts(BaseModel):
    """What later stages need from fit"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    pipeline: FittedPipeline
    pipeline_config: PipelineConfig
    train: SpectraDataset
    test: SpectraDataset


def output_dir(cfg: RunConfig) -> Path:
    return Path(cfg.output_dir)


def _guard(stage: str, paths: List[Path], force: bool):
    existing = [p for p in paths if p.exists()]
    if existing and not force:
        raise OverwriteError(stage, f"{existing[0]} already exists; pass --force to overwrite")


def _safe_name(text: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in text)


def _load_dataset(cfg: RunConfig) -> SpectraDataset:
    path = Path(cfg.dataset.path) if cfg.dataset.path else output_dir(cfg) / "spectra.csv"
    if not path.exists():
        raise ConfigError(f"dataset not found: {path}")
    ds = spectra_io.load_csv(path, class_names=cfg.dataset.class_names)
    if cfg.dataset.drop_classes:
        ds = spectra_io.drop_classes(ds, cfg.dataset.drop_classes)
    return ds


def _write_dataset(ds: SpectraDataset, path: Path) -> Path:
    return write_json_atomic(path, spectra_io.to_json_dict(ds))


def _read_dataset(path: Path) -> SpectraDataset:
    return spectra_io.from_json_dict(read_json(path))


def load_fit(cfg: RunConfig, stage: str) -> FitArtifacts:
    out = output_dir(cfg)
    model_path = out / MODEL_FILE
    if not model_path.exists():
        raise StageError(stage, f"{model_path} not found; run fit first")
    data = read_json(model_path)
    if data.get("format") != "shapca.model/1":
        raise StageError(stage, f"unknown model file format {data.get('format')!r}")
    return FitArtifacts(
        pipeline=FittedPipeline.from_json_dict(data["pipeline"]),
        pipeline_config=PipelineConfig.from_json_dict(data["pipeline_config"]),
        train=_read_dataset(out / "cache" / "train.json"),
        test=_read_dataset(out / "cache" / "test.json"),
    )


# --- synth -------------------------------------------------------------------


def cmd_synth(cfg: RunConfig, force: bool = False) -> List[Path]:
    out = output_dir(cfg)
    _guard("synth", [out / "spectra.csv", out / "latent_factors.csv"], force)
    s = cfg.synth
    synth = make_synthetic(
        n_samples=s.n_samples,
        n_blocks=s.n_blocks,
        block_width=s.block_width,
        noise=s.noise,
        seed=cfg.stage_seed("synth"),
        n_points=s.n_points,
        n_classes=s.n_classes,
        n_informative=s.n_informative,
        spectra_per_group=s.spectra_per_group,
    )
    return list(write_synthetic(synth, out))


# --- fit ---------------------------------------------------------------------


def cmd_fit(cfg: RunConfig, force: bool = False) -> List[Path]:
    out = output_dir(cfg)
    _guard("fit", [out / MODEL_FILE, out / METRICS_FILE], force)
    ds = run_chain(_load_dataset(cfg), cfg.preprocess, workers=cfg.workers)

    split_spec = cfg.split.model_copy(update={"seed": cfg.stage_seed("split")})
    train_idx, test_idx = split_indices(ds, split_spec)
    train, test = spectra_io.subset(ds, train_idx), spectra_io.subset(ds, test_idx)
    written = [
        write_json_atomic(out / "split.json", {
            "mode": split_spec.mode.value,
            "seed": split_spec.seed,
            "train": list(train.sample_ids),
            "test": list(test.sample_ids),
        }),
        _write_dataset(train, out / "cache" / "train.json"),
        _write_dataset(test, out / "cache" / "test.json"),
    ]

    pipeline_cfg = cfg.pipeline_config()
    if cfg.search is not None:
        spec = cfg.search.model_copy(update={"seed": cfg.stage_seed("search")})
        result = hyperparam_search(train, pipeline_cfg, spec, workers=cfg.workers)
        written.append(write_search_report(result, out / "search_report.csv"))
        pipeline_cfg = PipelineConfig(
            sparse_pca=result.best_sparse_pca, classifier=result.best_classifier, clip=pipeline_cfg.clip
        )
        logger.info(f"Search winner: {result.best_params}")

    pipeline = fit_pipeline(train, pipeline_cfg, workers=cfg.workers)
    metrics = {"test": evaluate(pipeline, test).model_dump(), "train": evaluate(pipeline, train).model_dump()}
    if cfg.classifier.compare_raw and pipeline_cfg.sparse_pca is not None:
        raw_cfg = PipelineConfig(sparse_pca=None, classifier=pipeline_cfg.classifier, clip=pipeline_cfg.clip)
        raw = fit_pipeline(train, raw_cfg, workers=cfg.workers)
        metrics["raw_test"] = evaluate(raw, test).model_dump()

    written.append(write_json_atomic(out / MODEL_FILE, {
        "format": "shapca.model/1",
        "pipeline": pipeline.to_json_dict(),
        "pipeline_config": pipeline_cfg.to_json_dict(),
        "preprocess": cfg.preprocess.to_json_dict(),
        "axis": ds.axis.to_json_dict(),
    }))
    written.append(write_json_atomic(out / METRICS_FILE, metrics))
    logger.info(f"Test accuracy {metrics['test']['accuracy']:.3f}, macro F1 {metrics['test']['macro_f1']:.3f}")
    return written


# --- explain -----------------------------------------------------------------


class _Explained(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    tensor: AttributionTensor
    components: ComponentValues
    yhat: np.ndarray
    loadings: np.ndarray


def _explain_test(cfg: RunConfig, fit: FitArtifacts) -> _Explained:
    pipeline = fit.pipeline
    x_test = features(pipeline, fit.test)
    background = None
    if not isinstance(pipeline.classifier, ForestModel):
        background = select_background(
            features(pipeline, fit.train).values,
            cfg.explain.background,
            n_centroids=cfg.explain.n_centroids,
            seed=cfg.stage_seed("background"),
        )
    tensor = explain(
        pipeline.classifier,
        x_test,
        background,
        n_coalitions=cfg.explain.n_coalitions,
        seed=cfg.stage_seed("explain"),
        workers=cfg.workers,
        class_names=pipeline.class_names,
    )
    deviation = check_additivity(tensor, predict_proba(pipeline.classifier, x_test), ADDITIVITY_TOL[tensor.explainer])
    logger.info(f"Explained {tensor.n_samples} samples with {tensor.explainer}; additivity deviation {deviation:.2e}")
    loadings = pipeline.sparse_pca.loadings if pipeline.sparse_pca is not None else np.eye(fit.test.n_features)
    return _Explained(
        tensor=tensor,
        components=x_test,
        yhat=predict(pipeline.classifier, x_test),
        loadings=loadings,
    )


def predicted_class_means(ds: SpectraDataset, yhat: np.ndarray) -> List[Optional[List[float]]]:
    """Mean spectrum of the samples predicted as each class; None for classes nobody was assigned"""
    means = []
    for c in range(ds.n_classes):
        members = yhat == c
        means.append(ds.intensities[members].mean(axis=0).tolist() if members.any() else None)
    return means


def _means_matrix(means: List[Optional[List[float]]], n_features: int) -> np.ndarray:
    return np.array([m if m is not None else [np.nan] * n_features for m in means], dtype=np.float64)


def _write_global_figures(
    directory: Path,
    ge: Dict[int, GlobalExplanation],
    axis: SpectralAxis,
    class_means: np.ndarray,
    cfg: RunConfig,
) -> List[Path]:
    written = []
    for name, document in render_global(ge, axis, class_means, cfg.render).items():
        written.append(write_svg(directory / f"global_{_safe_name(name)}.svg", document))
    return written


def cmd_explain_global(cfg: RunConfig, force: bool = False) -> List[Path]:
    out = output_dir(cfg)
    exp_dir = out / EXPLANATIONS_DIR
    _guard("explain-global", [exp_dir / "global.json"], force)
    fit = load_fit(cfg, "explain-global")
    done = _explain_test(cfg, fit)

    written = list(write_attributions(done.tensor, exp_dir / "attributions.json", exp_dir / "attributions.csv"))
    ge = global_explain(done.tensor, done.yhat, done.components, done.loadings, fit.pipeline.class_names)
    means = predicted_class_means(fit.test, done.yhat)
    written.append(write_json_atomic(exp_dir / "global.json", {
        "format": "shapca.global/1",
        "explainer": done.tensor.explainer,
        "axis": fit.test.axis.to_json_dict(),
        "class_means": means,
        "classes": [ge[c].to_json_dict() for c in sorted(ge)],
    }))
    for c in sorted(ge):
        if not ge[c].empty:
            written.append(export_tracks_csv(
                exp_dir / f"global_{_safe_name(ge[c].class_name)}.csv", fit.test.axis, global_tracks(ge[c])
            ))
    written += _write_global_figures(exp_dir, ge, fit.test.axis, _means_matrix(means, fit.test.n_features), cfg)
    return written


def _local_rows(cfg: RunConfig, test: SpectraDataset) -> List[int]:
    if cfg.explain.local_samples is None:
        return list(range(min(cfg.explain.max_local, test.n_samples)))
    missing = [s for s in cfg.explain.local_samples if s not in test.sample_ids]
    if missing:
        raise ConfigError(f"explain.local_samples not in the held-out set: {missing}")
    return [test.sample_ids.index(s) for s in cfg.explain.local_samples]


def cmd_explain_local(cfg: RunConfig, force: bool = False) -> List[Path]:
    out = output_dir(cfg)
    exp_dir = out / EXPLANATIONS_DIR
    fit = load_fit(cfg, "explain-local")
    rows = _local_rows(cfg, fit.test)
    _guard("explain-local", [exp_dir / f"local_{_safe_name(fit.test.sample_ids[i])}.json" for i in rows], force)
    done = _explain_test(cfg, fit)

    written = []
    for i in rows:
        sid = fit.test.sample_ids[i]
        c = int(done.yhat[i])
        le = local_explain(done.tensor, i, c, done.components.values[i], done.loadings, sample_id=sid)
        stem = exp_dir / f"local_{_safe_name(sid)}"
        written.append(write_json_atomic(stem.with_suffix(".json"), {
            "format": "shapca.local/1",
            "explainer": done.tensor.explainer,
            "class_name": fit.pipeline.class_names[c],
            "axis": fit.test.axis.to_json_dict(),
            "spectrum": fit.test.intensities[i].tolist(),
            "explanation": le.to_json_dict(),
        }))
        written.append(export_tracks_csv(stem.with_suffix(".csv"), fit.test.axis, local_tracks(le)))
        written.append(write_svg(
            stem.with_suffix(".svg"),
            render_local(le, fit.test.axis, fit.test.intensities[i], cfg.render, fit.pipeline.class_names[c]),
        ))
    return written


# --- consistency -------------------------------------------------------------


def cmd_consistency(cfg: RunConfig, force: bool = False) -> List[Path]:
    out = output_dir(cfg)
    _guard("consistency", [out / "consistency.json", out / "report.csv"], force)
    fit = load_fit(cfg, "consistency")
    reports = [
        run_protocol(
            fit.train,
            fit.test,
            fit.pipeline_config,
            method,
            cfg.consistency,
            seed=cfg.stage_seed("consistency"),
            workers=cfg.workers,
        )
        for method in cfg.consistency.methods
    ]
    return [
        write_json_atomic(out / "consistency.json", [r.model_dump(mode="json") for r in reports]),
        write_report_csv(reports, out / "report.csv"),
    ]


# --- render ------------------------------------------------------------------


def cmd_render(cfg: RunConfig, force: bool = False) -> List[Path]:
    out = output_dir(cfg)
    exp_dir = out / EXPLANATIONS_DIR
    fig_dir = out / FIGURES_DIR
    global_path = exp_dir / "global.json"
    local_paths = sorted(exp_dir.glob("local_*.json"))
    if not global_path.exists() and not local_paths:
        raise StageError("render", f"no explanations under {exp_dir}; run explain-global or explain-local first")
    if fig_dir.exists() and any(fig_dir.iterdir()) and not force:
        raise OverwriteError("render", f"{fig_dir} is not empty; pass --force to overwrite")

    written = []
    if global_path.exists():
        data = read_json(global_path)
        axis = SpectralAxis.from_json_dict(data["axis"])
        ge = {g.class_index: g for g in (GlobalExplanation.from_json_dict(d) for d in data["classes"])}
        written += _write_global_figures(fig_dir, ge, axis, _means_matrix(data["class_means"], axis.size), cfg)
    for path in local_paths:
        data = read_json(path)
        le = LocalExplanation.from_json_dict(data["explanation"])
        axis = SpectralAxis.from_json_dict(data["axis"])
        document = render_local(le, axis, np.asarray(data["spectrum"]), cfg.render, data["class_name"])
        written.append(write_svg(fig_dir / f"{path.stem}.svg", document))
    return written


# --- dispatch ----------------------------------------------------------------


STAGES: Dict[RunAction, Callable[[RunConfig, bool], List[Path]]] = {
    RunAction.SYNTH: cmd_synth,
    RunAction.FIT: cmd_fit,
    RunAction.EXPLAIN_GLOBAL: cmd_explain_global,
    RunAction.EXPLAIN_LOCAL: cmd_explain_local,
    RunAction.CONSISTENCY: cmd_consistency,
    RunAction.RENDER: cmd_render,
}


def config_text(cfg: RunConfig) -> str:
    return json.dumps(cfg.model_dump(mode="json"), sort_keys=True)


def run_stage(action: RunAction, cfg: RunConfig, force: bool = False) -> List[Path]:
    """
    Run one stage and journal it. Library errors surface as StageError tagged with the
    stage name; ConfigError and OverwriteError pass through unchanged.
    """
    stage = action.value
    start = time.time()
    logger.info(f"[{stage}] starting (seed={cfg.seed}, workers={cfg.workers}, out={cfg.output_dir})")
    error: Optional[Exception] = None
    artifacts: List[Path] = []
    try:
        artifacts = STAGES[action](cfg, force)
    except (StageError, ConfigError) as e:
        error = e
    except (ValueError, OSError, KeyError) as e:
        error = StageError(stage, str(e))
        error.__cause__ = e
    elapsed_ms = int((time.time() - start) * 1000)

    if not isinstance(error, OverwriteError):
        out = output_dir(cfg)
        try:
            run_log.log_event(
                out,
                action,
                config_text=config_text(cfg),
                seed=cfg.seed,
                artifacts=artifacts,
                processing_time_ms=elapsed_ms,
                error=str(error) if error else None,
            )
        except OSError as e:
            logger.warning(f"[{stage}] could not write run journal: {e}")

    if error is not None:
        raise error
    logger.info(f"[{stage}] finished in {elapsed_ms} ms, {len(artifacts)} artifacts")
    return artifacts


def written_summary(paths: List[Path], out: Path) -> List[Tuple[str, int]]:
    return [(str(p.relative_to(out)) if p.is_relative_to(out) else str(p), p.stat().st_size) for p in paths]
