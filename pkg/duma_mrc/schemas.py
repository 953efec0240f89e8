"""Shared Pydantic models: run configuration, manifests, checkpoint headers and log records."""
from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from duma_mrc import config


class TaskKind(str, Enum):
    DREAM = "DREAM"
    RACE = "RACE"
    SYNTHETIC = "SYNTHETIC"


# Option count fixed by each public dataset.
TASK_OPTION_COUNTS = {TaskKind.DREAM: 3, TaskKind.RACE: 4}


class ModelConfig(BaseModel):
    """Architecture hyperparameters for encoder, DUMA layer and classifier."""

    model_config = ConfigDict(extra="forbid")

    vocab_size: int = Field(30000, ge=5)
    hidden: int = Field(128, ge=1)
    encoder_layers: int = Field(4, ge=1)
    encoder_heads: int = Field(4, ge=1)
    ff_width: int = Field(512, ge=1)
    max_len: int = Field(128, ge=5)
    positional_table_size: Optional[int] = Field(None, ge=5)
    share_layers: bool = True
    duma_heads: int = Field(4, ge=1)
    duma_head_dim: int = Field(32, ge=1)
    duma_layers: int = Field(1, ge=1)
    share_directions: bool = False
    dropout: float = Field(0.0, ge=0.0, lt=1.0)
    seed: int = 0

    @model_validator(mode="after")
    def _check_shapes(self) -> "ModelConfig":
        if self.hidden % self.encoder_heads != 0:
            raise ValueError(
                f"hidden ({self.hidden}) must be divisible by encoder_heads ({self.encoder_heads})"
            )
        if self.positional_table_size is None:
            self.positional_table_size = self.max_len
        if self.max_len > self.positional_table_size:
            raise ValueError(
                f"max_len ({self.max_len}) exceeds positional_table_size ({self.positional_table_size})"
            )
        return self

    @property
    def duma_width(self) -> int:
        return self.duma_heads * self.duma_head_dim

    @classmethod
    def xxlarge_scale(cls, **overrides) -> "ModelConfig":
        """Published Albert-xxlarge + DUMA scale. Representable, not desk-trainable."""
        values = dict(
            hidden=4096,
            encoder_layers=12,
            encoder_heads=64,
            ff_width=16384,
            max_len=512,
            share_layers=True,
            duma_heads=64,
            duma_head_dim=64,
        )
        values.update(overrides)
        return cls(**values)


class SyntheticSpec(BaseModel):
    """Generator parameters for an offline synthetic multiple-choice task."""

    model_config = ConfigDict(extra="forbid")

    train_size: int = Field(50, ge=1)
    dev_size: int = Field(50, ge=1)
    test_size: int = Field(50, ge=1)
    num_options: int = Field(3, ge=2)
    separable: bool = True
    context_len: int = Field(8, ge=1)
    seed: int = 0


class TaskSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = Field(..., min_length=1)
    kind: TaskKind
    train_path: Optional[str] = None
    dev_path: Optional[str] = None
    test_path: Optional[str] = None
    synthetic: Optional[SyntheticSpec] = None

    @model_validator(mode="after")
    def _check_sources(self) -> "TaskSpec":
        if self.kind == TaskKind.SYNTHETIC:
            if self.synthetic is None:
                self.synthetic = SyntheticSpec()
        elif not self.train_path or not self.dev_path:
            raise ValueError(f"task '{self.name}' ({self.kind.value}) needs train_path and dev_path")
        return self


class TrainConfig(BaseModel):
    """Optimization recipe and task mixture."""

    model_config = ConfigDict(extra="forbid")

    batch_size: int = Field(24, ge=1)
    peak_lr: float = Field(1e-5, gt=0.0)
    weight_decay: float = Field(0.01, ge=0.0)
    clip_norm: float = Field(1.0, gt=0.0)
    epochs: int = Field(5, ge=1)
    warmup_fraction: float = Field(0.10, gt=0.0, lt=1.0)
    eval_every: Optional[int] = Field(None, ge=1)
    seed: int = 0
    tasks: List[TaskSpec] = Field(default_factory=list)
    primary_task: Optional[str] = "dream"
    runs: int = Field(1, ge=1)
    max_steps: Optional[int] = Field(None, ge=1)
    output_dir: str = config.RUNS_DIR
    record_wall_time: bool = False

    @model_validator(mode="after")
    def _check_tasks(self) -> "TrainConfig":
        names = [task.name for task in self.tasks]
        if len(names) != len(set(names)):
            raise ValueError(f"task names must be unique, got {names}")
        return self


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: ModelConfig = Field(default_factory=ModelConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)


class DatasetFingerprint(BaseModel):
    task: str
    split: str
    path: Optional[str] = None
    items: int
    content_hash: str


class RunManifest(BaseModel):
    format_version: int = 1
    run_config: RunConfig
    seed: int
    datasets: List[DatasetFingerprint] = Field(default_factory=list)
    artifacts: Dict[str, str] = Field(default_factory=dict)


class TensorEntry(BaseModel):
    name: str
    shape: List[int]
    offset: int
    nbytes: int


class CheckpointHeader(BaseModel):
    format_version: int
    model: ModelConfig
    train: TrainConfig
    step: int
    dev_accuracy: Dict[str, float] = Field(default_factory=dict)
    primary_task: str
    vocab_file: str = config.VOCAB_FILE
    tensors: List[TensorEntry] = Field(default_factory=list)


class MetricsRecord(BaseModel):
    step: int
    task: str
    lr: float
    train_loss: Optional[float]
    dev_accuracy: Dict[str, float]
    wall_time: Optional[float] = None


class PredictionRecord(BaseModel):
    example_id: str
    predicted: int
    gold: int
    probabilities: List[float]


class GradCheckReport(BaseModel):
    seed: int
    max_relative_error: float
    checked_scalars: int
    worst_parameter: Optional[str] = None
    threshold: float
    passed: bool
