from typing import Annotated, Any, Dict, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

NORMAL = "normal"
ANOMALY_PREFIX = "anomaly"
ANOMALY_LABELS = {1: "anomaly-1", 2: "anomaly-2", 3: "anomaly-3", 4: "anomaly-4"}


class TimeSeries(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: str
    values: List[float]
    interval: float = Field(default=60.0, gt=0)
    label: Optional[str] = None

    @field_validator("values")
    @classmethod
    def non_empty(cls, v: List[float]) -> List[float]:
        if not v:
            raise ValueError("series must contain at least one value")
        return v

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)

    @property
    def length(self) -> int:
        return len(self.values)

    @property
    def is_anomaly(self) -> bool:
        return self.label is not None and self.label.startswith(ANOMALY_PREFIX)

    def with_values(self, values: np.ndarray, **update: Any) -> "TimeSeries":
        return self.model_copy(update={"values": [float(v) for v in values], **update})


class EventSpec(BaseModel):
    kind: Literal["MTC", "HTC"]
    indicator: List[int]
    intensity: List[float]

    @model_validator(mode="after")
    def consistent(self) -> "EventSpec":
        if len(self.indicator) != len(self.intensity):
            raise ValueError("indicator and intensity must have the same length")
        if any(e not in (0, 1) for e in self.indicator):
            raise ValueError("indicator entries must be 0 or 1")
        if any(a < 0 for a in self.intensity):
            raise ValueError("intensity entries must be non-negative")
        return self


class ModelConfig(BaseModel):
    """Hyperparameters; the short names (N_E, N_L, N_N, K) are the JSON keys"""

    model_config = ConfigDict(populate_by_name=True, extra="forbid")

    n_tasks: int = Field(default=3, ge=1, alias="N_E")
    n_layers: int = Field(default=2, ge=1, alias="N_L")
    hidden_size: int = Field(default=18, ge=1, alias="N_N")
    n_components: int = Field(default=4, ge=1, alias="K")
    latent_size: int = Field(default=1, ge=1, alias="L_c")
    lambda_energy: float = Field(default=0.1, ge=0, alias="lambda")
    learning_rate: float = Field(default=1e-3, gt=0)
    epochs: int = Field(default=200, ge=1)
    patience: int = Field(default=20, ge=1)
    min_improvement: float = Field(default=1e-6, ge=0)
    seed: int = Field(default=0, ge=0)
    w_cell: Literal["lstm", "gru"] = "lstm"
    d_cell: Literal["lstm", "gru"] = "gru"
    reg: float = Field(default=1e-6, ge=0, alias="eps_reg")
    em_iterations: int = Field(default=1, ge=1)
    refit_iterations: int = Field(default=20, ge=1)
    membership_steps: int = Field(default=300, ge=0)
    standard_lstm_output: bool = False
    normalize_ensemble_energy: bool = False
    score_mode: Literal["ensemble", "w", "d"] = "ensemble"
    chunk_size: int = Field(default=128, ge=1)
    parallel_branches: bool = False

    def dump(self) -> Dict[str, Any]:
        return self.model_dump(by_alias=True)


class RunConfig(ModelConfig):
    train_path: Optional[str] = None
    test_path: Optional[str] = None
    window_length: int = Field(default=120, ge=2)
    train_fraction: float = Field(default=0.4, gt=0, lt=1)
    contamination: float = Field(default=0.0, ge=0, le=0.5)
    out_dir: str = "out"
    task: Literal["detect", "cluster"] = "detect"
    threshold_percentile: Optional[float] = Field(default=None, ge=0, le=100)
    workers: int = Field(default=1, ge=1)

    def model_settings(self) -> ModelConfig:
        fields = ModelConfig.model_fields
        return ModelConfig(**{k: getattr(self, k) for k in fields})


class ScoredSample(BaseModel):
    id: str
    score: float
    E_w: float
    E_d: float
    z_w: List[float]
    z_d: List[float]
    gamma_w: List[float]
    gamma_d: List[float]
    predicted_label: Optional[int] = None
    label: Optional[str] = None
    flag: Optional[bool] = None


class ClusterLabel(BaseModel):
    id: str
    predicted_label: int
    label: Optional[str] = None


class Reference(BaseModel):
    point: int
    id: str
    distance: float
    values: List[float]


class Explanation(BaseModel):
    id: str
    branch: Literal["w", "d"]
    values: List[float]
    center: List[float]
    references: List[Reference]


class MetricReport(BaseModel):
    metric: str
    value: float
    n: int
    params: Dict[str, Any] = Field(default_factory=dict)


class ErrorResponse(BaseModel):
    success: bool = False
    error: str
    error_type: Optional[str] = None
    details: Optional[Dict[str, Any]] = None


# ---------------------------------------------------------------------------
# synthetic corpus generation
# ---------------------------------------------------------------------------


class WaveDirective(BaseModel):
    model_config = ConfigDict(extra="forbid")

    type: Literal["wave"] = "wave"
    kind: Literal["sine", "square", "triangle"]
    count: int = Field(ge=1)
    period: float = Field(default=40.0, ge=2)
    amplitude: float = 1.0
    phase: float = 0.0
    phase_jitter: float = Field(default=0.0, ge=0)
    noise_sigma: float = Field(default=0.0, ge=0)
    offset: float = 0.0
    label: Optional[str] = None


class EventDirective(BaseModel):
    model_config = ConfigDict(extra="forbid")

    type: Literal["event"] = "event"
    count: int = Field(ge=1)
    mtc_period: int = Field(default=6, ge=1)
    mtc_intensity: float = Field(default=1.0, ge=0)
    htc_bursts: int = Field(default=2, ge=0)
    htc_burst_length: int = Field(default=5, ge=1)
    htc_intensity: float = Field(default=20.0, ge=0)
    label: Optional[str] = None


class AnomalyDirective(BaseModel):
    model_config = ConfigDict(extra="forbid")

    type: Literal["anomaly"] = "anomaly"
    anomaly_type: int = Field(ge=1, le=4)
    fraction: float = Field(ge=0, le=1)
    segment_length: int = Field(default=10, ge=1)
    sigma: float = Field(default=0.5, ge=0)
    height_factor: float = Field(default=5.0, ge=0)
    impulse_factor: float = Field(default=10.0, ge=0)


class NoiseDirective(BaseModel):
    model_config = ConfigDict(extra="forbid")

    type: Literal["noise"] = "noise"
    noise_type: int = Field(ge=1, le=4)
    level: float = Field(ge=0)
    fraction: float = Field(default=1.0, ge=0, le=1)


Directive = Union[WaveDirective, EventDirective, AnomalyDirective, NoiseDirective]


class SynthSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    seed: int = Field(default=0, ge=0)
    length: int = Field(default=120, ge=2)
    interval: float = Field(default=60.0, gt=0)
    directives: List[Annotated[Directive, Field(discriminator="type")]] = Field(min_length=1)


class StudyReport(BaseModel):
    study: str
    seed: int
    results: Dict[str, Any]
    params: Dict[str, Any] = Field(default_factory=dict)
