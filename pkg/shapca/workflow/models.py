"""
Run configuration and run-journal models
"""
from datetime import datetime, timezone
from enum import Enum
from typing import List, Literal, Optional, Union
from uuid import uuid4

from pydantic import BaseModel, ConfigDict, Field

from shapca.classifiers.models import ForestConfig, LinearConfig, PipelineConfig, SearchSpec
from shapca.config import settings
from shapca.consistency.models import ConsistencyConfig
from shapca.decomposition.models import SparsePcaConfig
from shapca.explain.models import BackgroundSelection
from shapca.render.models import RenderSpec
from shapca.spectra.models import PreprocessConfig, SplitSpec
from shapca.utils.files import derive_seed


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    """Failure inside a CLI stage; str() carries the stage tag"""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        self.message = message
        super().__init__(f"[{stage}] {message}")


class OverwriteError(StageError):
    pass


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DatasetSection(_Section):
    path: Optional[str] = None          # defaults to <output_dir>/spectra.csv
    class_names: Optional[List[str]] = None
    drop_classes: List[str] = []


class SynthSection(_Section):
    n_samples: int = Field(300, ge=4)
    n_blocks: int = Field(10, ge=1)
    block_width: int = Field(12, ge=1)
    noise: float = Field(0.01, ge=0.0)
    n_points: int = Field(200, ge=2)
    n_classes: int = Field(2, ge=2)
    n_informative: int = Field(3, ge=1)
    spectra_per_group: int = Field(5, ge=1)


class SparsePcaSection(SparsePcaConfig):
    enabled: bool = True


class ClassifierSection(_Section):
    kind: Literal["forest", "linear"] = "forest"
    forest: ForestConfig = ForestConfig()
    linear: LinearConfig = LinearConfig()
    compare_raw: bool = False

    def selected(self) -> Union[ForestConfig, LinearConfig]:
        return self.forest if self.kind == "forest" else self.linear


class ExplainSection(_Section):
    background: BackgroundSelection = BackgroundSelection.AUTO
    n_centroids: Optional[int] = Field(None, ge=1)
    n_coalitions: Union[int, str] = "auto"
    local_samples: Optional[List[str]] = None
    max_local: int = Field(3, ge=1)


class RunConfig(_Section):
    dataset: DatasetSection = DatasetSection()
    synth: SynthSection = SynthSection()
    split: SplitSpec = SplitSpec()
    preprocess: PreprocessConfig = PreprocessConfig()
    sparse_pca: SparsePcaSection = SparsePcaSection()
    classifier: ClassifierSection = ClassifierSection()
    search: Optional[SearchSpec] = None
    explain: ExplainSection = ExplainSection()
    render: RenderSpec = RenderSpec()
    consistency: ConsistencyConfig = ConsistencyConfig()
    output_dir: str = "out"
    seed: int = 0
    workers: int = Field(default_factory=lambda: settings.WORKERS, ge=1)

    def stage_seed(self, stage: str) -> int:
        return derive_seed(self.seed, stage)

    def pipeline_config(self) -> PipelineConfig:
        """Pipeline settings with stage seeds derived from the global seed"""
        spca = None
        if self.sparse_pca.enabled:
            fields = self.sparse_pca.model_dump(exclude={"enabled"})
            fields["seed"] = self.stage_seed("sparse_pca")
            spca = SparsePcaConfig.model_validate(fields)
        clf = self.classifier.selected()
        if isinstance(clf, ForestConfig):
            clf = ForestConfig.model_validate({**clf.model_dump(), "seed": self.stage_seed("classifier")})
        return PipelineConfig(sparse_pca=spca, classifier=clf)


class RunAction(str, Enum):
    SYNTH = "synth"
    FIT = "fit"
    EXPLAIN_GLOBAL = "explain-global"
    EXPLAIN_LOCAL = "explain-local"
    CONSISTENCY = "consistency"
    RENDER = "render"


class RunLogEntry(BaseModel):
    """Individual run journal entry"""
    id: str = Field(default_factory=lambda: str(uuid4()))
    timestamp: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))
    action: RunAction
    config_hash: Optional[str] = None   # SHA-256 of the effective run config
    seed: Optional[int] = None
    artifacts: List[str] = []
    processing_time_ms: Optional[int] = None
    error: Optional[str] = None
