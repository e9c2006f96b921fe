"""
Validated configuration models for neurogate.

All user-facing configuration is a frozen pydantic model. Defaults come from
constants.py; scenario files are YAML documents validated by ScenarioSpec.
"""

import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Literal, Optional, Tuple, Type, TypeVar

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .constants import (
    ABLATION_TOGGLES,
    ARTIFACT_BAND_HZ,
    BENCH_STEPS,
    CONFIDENCE_ONLY_THRESHOLD,
    DEFAULT_ALPHA_M,
    DEFAULT_CONTEXT,
    DEFAULT_EEG_CHANNELS,
    DEFAULT_REPETITIONS,
    DEFAULT_SEED,
    DEFAULT_SNR_BINS,
    DEFAULT_TRIALS,
    DWELL_FRAMES,
    FILTER_ORDER,
    HISTORY_K,
    N_ACTIONS,
    PLAN_CACHE_SIZE,
    PLANNER_MAX_DEPTH,
    PLANNER_MAX_STATES,
    PREPROCESS_BAND_HZ,
    STRIDE_MS,
    TAU_A,
    TAU_H,
    TAU_OMEGA,
    WINDOW_MS,
)
from .errors import ConfigError, InputFileError

logger = logging.getLogger(__name__)

ModelT = TypeVar('ModelT', bound=BaseModel)


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid')


# ============================================================================
# SIGNAL PROCESSING
# ============================================================================

class PreprocessConfig(_Frozen):
    """Band-pass, referencing and windowing parameters."""

    band_hz: Tuple[float, float] = PREPROCESS_BAND_HZ
    artifact_band_hz: Tuple[float, float] = ARTIFACT_BAND_HZ
    filter_order: int = Field(FILTER_ORDER, ge=1, le=10)
    window_ms: float = Field(WINDOW_MS, gt=0)
    stride_ms: float = Field(STRIDE_MS, gt=0)
    crop_s: Optional[Tuple[float, float]] = None
    zero_phase: bool = True

    @field_validator('band_hz', 'artifact_band_hz')
    @classmethod
    def _band_ordered(cls, band):
        lo, hi = band
        if not 0 < lo < hi:
            raise ValueError(f"band edges must satisfy 0 < lo < hi, got {band}")
        return band

    @field_validator('crop_s')
    @classmethod
    def _crop_ordered(cls, crop):
        if crop is not None and not 0 <= crop[0] < crop[1]:
            raise ValueError(f"crop must satisfy 0 <= start < end, got {crop}")
        return crop


# ============================================================================
# MONITOR
# ============================================================================

class MonitorConfig(_Frozen):
    """
    Thresholds and toggles for the runtime gate.

    Disabled checks are still measured and traced but never cause a HALT.
    Turning calibration_adjustment off evaluates entropy on the raw posterior.
    """

    tau_h: float = Field(TAU_H, ge=0.0, le=1.0)
    tau_a: float = TAU_A
    tau_omega: float = Field(TAU_OMEGA, ge=0.0, le=1.0)
    alpha_m: float = Field(DEFAULT_ALPHA_M, ge=0.0, le=1.0)
    k_frames: int = Field(HISTORY_K, ge=2)
    warmup_halt: bool = True

    entropy_check: bool = True
    artifact_check: bool = True
    oscillation_check: bool = True
    calibration_adjustment: bool = True
    logical_check: bool = True

    artifact_aggregation: Literal['mean', 'max'] = 'mean'
    planner_max_depth: int = Field(PLANNER_MAX_DEPTH, ge=0)
    planner_max_states: int = Field(PLANNER_MAX_STATES, ge=1)
    plan_cache_size: int = Field(PLAN_CACHE_SIZE, ge=1)

    @field_validator('tau_a')
    @classmethod
    def _finite(cls, value):
        if value != value or value in (float('inf'), float('-inf')):
            raise ValueError('tau_a must be finite')
        return value

    @property
    def effective_alpha(self) -> float:
        """Mixing weight actually applied (1.0 when calibration is ablated)."""
        return self.alpha_m if self.calibration_adjustment else 1.0

    def with_ablations(self, toggles: Iterable[str]) -> 'MonitorConfig':
        """Return a copy with the named check toggles switched off."""
        update = {}
        for toggle in toggles:
            if toggle not in ABLATION_TOGGLES:
                raise ConfigError(
                    f"Invalid ablation '{toggle}'. Valid options: {list(ABLATION_TOGGLES)}"
                )
            update[toggle] = False
        return self.model_copy(update=update)

    def with_overrides(self, **overrides: Any) -> 'MonitorConfig':
        """Validated copy with the non-None overrides applied."""
        data = self.model_dump()
        data.update({k: v for k, v in overrides.items() if v is not None})
        return build_model(MonitorConfig, data)


class TaskContext(_Frozen):
    """Objects an intent is grounded against."""

    robot: Optional[str] = None
    item: Optional[str] = None
    location: Optional[str] = None
    orientation: Optional[str] = None

    @classmethod
    def from_string(cls, text: str) -> 'TaskContext':
        """Parse 'robot=r1,item=cup,...' into a context."""
        data: Dict[str, str] = {}
        for part in filter(None, (p.strip() for p in text.split(','))):
            key, sep, value = part.partition('=')
            if not sep or not value:
                raise ConfigError(f"Invalid context entry '{part}'. Expected key=value")
            data[key.strip()] = value.strip()
        return build_model(cls, data)

    @classmethod
    def default(cls) -> 'TaskContext':
        return cls(**DEFAULT_CONTEXT)


# ============================================================================
# SYNTHETIC DECODER AND SCENARIOS
# ============================================================================

class SyntheticDecoderModel(_Frozen):
    """
    Stand-in decoder producing posteriors of controlled quality.

    Accuracy falls linearly by noise_sensitivity per dB below reference_snr_db,
    never under chance. Correct trials draw confidence from a Beta with mean
    correct_confidence; wrong trials split into error modes:

        diffuse     low confidence, caught by the entropy check
        artifact    confident, coincides with an EMG burst in the EEG window
        unstable    confident, argmax flickers frame to frame
        infeasible  confident, target is logically unreachable

    The diffuse-error confidence is solved so that mean confidence exceeds
    base_accuracy by confidence_gap at the reference SNR.
    """

    base_accuracy: float = Field(0.7, gt=0.0, le=1.0)
    reference_snr_db: float = 20.0
    noise_sensitivity: float = Field(0.0225, ge=0.0)
    chance_floor: float = Field(1.0 / N_ACTIONS, ge=0.0, le=1.0)
    correct_confidence: float = Field(0.92, gt=0.35, lt=1.0)
    confidence_gap: float = Field(0.125, ge=0.0, lt=1.0)
    concentration: float = Field(60.0, gt=2.0)
    error_modes: Dict[str, float] = Field(
        default_factory=lambda: {'diffuse': 0.4, 'artifact': 0.3, 'unstable': 0.05, 'infeasible': 0.25}
    )
    artifact_burst_snr_db: float = -10.0
    rng_seed: Optional[int] = None

    @field_validator('error_modes')
    @classmethod
    def _modes_valid(cls, modes):
        valid = ('diffuse', 'artifact', 'unstable', 'infeasible')
        for name, share in modes.items():
            if name not in valid:
                raise ValueError(f"Invalid error mode '{name}'. Valid options: {list(valid)}")
            if share < 0:
                raise ValueError(f"error mode share must be nonnegative, got {name}={share}")
        total = sum(modes.values())
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"error mode shares must sum to 1, got {total}")
        return modes

    def accuracy(self, snr_db: float) -> float:
        """Expected decoder accuracy at the given SNR."""
        loss = self.noise_sensitivity * max(0.0, self.reference_snr_db - snr_db)
        return float(min(1.0, max(self.chance_floor, self.base_accuracy - loss)))

    @property
    def error_confidence(self) -> float:
        """Mean confidence of diffuse errors."""
        a0 = self.base_accuracy
        if a0 >= 1.0:
            return 0.5
        target = min(a0 + self.confidence_gap, 0.99)
        mean = (target - a0 * self.correct_confidence) / (1.0 - a0)
        return float(min(max(mean, 0.35), self.correct_confidence))


class ScenarioSpec(_Frozen):
    """One experiment: SNR ramp, trial structure, config under test."""

    name: str = 'default'
    trials: int = Field(DEFAULT_TRIALS, ge=1)
    snr_start_db: float = 20.0
    snr_end_db: float = -5.0
    snr_bins: int = Field(DEFAULT_SNR_BINS, ge=1)
    dwell_frames: int = Field(DWELL_FRAMES, ge=1)
    seed: int = DEFAULT_SEED
    repetitions: int = Field(DEFAULT_REPETITIONS, ge=1)
    include_eeg: bool = True
    eeg_channels: int = Field(DEFAULT_EEG_CHANNELS, ge=1)
    config: MonitorConfig = Field(default_factory=MonitorConfig)
    ablations: List[str] = Field(default_factory=list)
    decoder: SyntheticDecoderModel = Field(default_factory=SyntheticDecoderModel)
    preprocess: PreprocessConfig = Field(default_factory=PreprocessConfig)
    context: TaskContext = Field(default_factory=TaskContext.default)
    confidence_only_threshold: float = Field(CONFIDENCE_ONLY_THRESHOLD, ge=0.0, le=1.0)
    bench_steps: int = Field(BENCH_STEPS, ge=1)

    @field_validator('ablations')
    @classmethod
    def _known_ablations(cls, ablations):
        for toggle in ablations:
            if toggle not in ABLATION_TOGGLES:
                raise ValueError(
                    f"Invalid ablation '{toggle}'. Valid options: {list(ABLATION_TOGGLES)}"
                )
        return ablations

    @model_validator(mode='after')
    def _bins_fit(self):
        if self.snr_bins > self.trials:
            raise ValueError(f"snr_bins ({self.snr_bins}) exceeds trials ({self.trials})")
        return self

    def monitor_config(self) -> MonitorConfig:
        """Config under test with this scenario's ablations applied."""
        return self.config.with_ablations(self.ablations)


# ============================================================================
# LOADING
# ============================================================================

def build_model(model_cls: Type[ModelT], data: Dict[str, Any]) -> ModelT:
    """
    Validate a mapping into a config model.

    Args:
        model_cls: Target pydantic model class
        data: Raw values

    Returns:
        Validated model instance

    Raises:
        ConfigError: If any field fails validation
    """
    try:
        return model_cls.model_validate(data)
    except ValidationError as e:
        problems = '; '.join(
            f"{'.'.join(str(p) for p in err['loc']) or model_cls.__name__}: {err['msg']}"
            for err in e.errors()
        )
        raise ConfigError(f"Invalid {model_cls.__name__}: {problems}") from None


def load_scenario(path: str) -> ScenarioSpec:
    """
    Load and validate a YAML scenario file.

    Args:
        path: Scenario file path

    Returns:
        ScenarioSpec
    """
    file_path = Path(path)
    if not file_path.is_file():
        raise InputFileError('scenario file not found', path=str(path))
    try:
        data = yaml.safe_load(file_path.read_text()) or {}
    except yaml.YAMLError as e:
        line = getattr(getattr(e, 'problem_mark', None), 'line', None)
        raise InputFileError(f"invalid YAML: {e}", path=str(path),
                             line=None if line is None else line + 1) from None
    if not isinstance(data, dict):
        raise InputFileError('scenario must be a mapping', path=str(path))
    spec = build_model(ScenarioSpec, data)
    logger.info(f"Loaded scenario '{spec.name}' from {path} ({spec.trials} trials)")
    return spec

