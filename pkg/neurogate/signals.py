"""
EEG signal representation and preprocessing.

Band-pass filtering, common average referencing, windowing and per-window
z-scoring; band-limited RMS and the artifact score against a subject
baseline; SNR-controlled noise injection for robustness experiments.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np
from scipy import signal as sp_signal

from .config import PreprocessConfig
from .constants import (
    ARTIFACT_BAND_HZ,
    BASELINE_SECONDS,
    FILTER_ORDER,
    NOISE_WEIGHTS,
    VARIANCE_FLOOR,
)
from .errors import SignalError

logger = logging.getLogger(__name__)

STD_FLOOR = float(np.sqrt(VARIANCE_FLOOR))


def _finite_matrix(samples, name: str) -> np.ndarray:
    """Copy samples into a read-only C x T float64 matrix."""
    matrix = np.array(samples, dtype=np.float64)
    if matrix.ndim == 1:
        matrix = matrix[np.newaxis, :]
    if matrix.ndim != 2 or matrix.shape[0] < 1 or matrix.shape[1] < 1:
        raise SignalError(f"{name} must be a nonempty channels x samples matrix, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise SignalError(f"{name} contains non-finite samples")
    matrix.setflags(write=False)
    return matrix


def _positive_rate(rate: float) -> float:
    rate = float(rate)
    if not np.isfinite(rate) or rate <= 0:
        raise SignalError(f"Invalid sample rate '{rate}'. Must be a positive finite number")
    return rate


# ============================================================================
# DATA TYPES
# ============================================================================

@dataclass(frozen=True, eq=False)
class RawEeg:
    """Continuous multichannel recording (microvolts)."""

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        object.__setattr__(self, 'samples', _finite_matrix(self.samples, 'RawEeg'))
        object.__setattr__(self, 'sample_rate_hz', _positive_rate(self.sample_rate_hz))

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate_hz


@dataclass(frozen=True, eq=False)
class EegWindow:
    """One preprocessed analysis window (dimensionless, z-scored)."""

    samples: np.ndarray
    sample_rate_hz: float
    t_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'samples', _finite_matrix(self.samples, 'EegWindow'))
        object.__setattr__(self, 'sample_rate_hz', _positive_rate(self.sample_rate_hz))
        if self.t_index < 0:
            raise SignalError(f"t_index must be nonnegative, got {self.t_index}")

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]


@dataclass(frozen=True, eq=False)
class BaselineStats:
    """
    Per-channel mean and std of band-limited RMS over a clean segment.

    The band and filter mode the statistics were measured with travel with
    them; frames are scored the same way.
    """

    mean: np.ndarray
    std: np.ndarray
    band_hz: Tuple[float, float] = ARTIFACT_BAND_HZ
    zero_phase: bool = True

    def __post_init__(self):
        mean = np.array(self.mean, dtype=np.float64).ravel()
        std = np.array(self.std, dtype=np.float64).ravel()
        if mean.shape != std.shape or mean.size == 0:
            raise SignalError(f"baseline mean/std shapes differ or are empty: {mean.shape} vs {std.shape}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(std))):
            raise SignalError('baseline statistics must be finite')
        std = np.maximum(std, STD_FLOOR)
        mean.setflags(write=False)
        std.setflags(write=False)
        object.__setattr__(self, 'mean', mean)
        object.__setattr__(self, 'std', std)
        object.__setattr__(self, 'band_hz', (float(self.band_hz[0]), float(self.band_hz[1])))

    @property
    def n_channels(self) -> int:
        return self.mean.size


@dataclass(frozen=True)
class NoiseSpec:
    """Target SNR, component weights (white, pink, EMG) and seed."""

    target_snr_db: float
    weights: Tuple[float, float, float] = NOISE_WEIGHTS
    rng_seed: int = 0

    def __post_init__(self):
        if not np.isfinite(self.target_snr_db):
            raise SignalError(f"target SNR must be finite, got {self.target_snr_db}")
        weights = tuple(float(w) for w in self.weights)
        if len(weights) != 3 or not all(np.isfinite(w) and w >= 0 for w in weights):
            raise SignalError(f"noise weights must be three nonnegative finite values, got {self.weights}")
        object.__setattr__(self, 'weights', weights)


# ============================================================================
# FILTERING
# ============================================================================

@lru_cache(maxsize=64)
def design_bandpass(order: int, lo_hz: float, hi_hz: float, sample_rate_hz: float) -> np.ndarray:
    """
    Butterworth band-pass as second-order sections.

    Args:
        order: Filter order
        lo_hz: Lower edge in Hz
        hi_hz: Upper edge in Hz
        sample_rate_hz: Sampling rate

    Returns:
        Read-only SOS array of shape (n_sections, 6)
    """
    nyquist = sample_rate_hz / 2.0
    if not 0 < lo_hz < hi_hz < nyquist:
        raise SignalError(
            f"Invalid band [{lo_hz}, {hi_hz}] Hz. Must satisfy 0 < lo < hi < {nyquist} Hz"
        )
    sos = sp_signal.butter(order, [lo_hz, hi_hz], btype='bandpass', fs=sample_rate_hz, output='sos')
    sos.setflags(write=False)
    return sos


def apply_filter(sos: np.ndarray, samples: np.ndarray, zero_phase: bool = True) -> np.ndarray:
    """Filter along the last axis, forward-backward or single-pass causal."""
    sos = np.array(sos)  # scipy < 1.16 rejects read-only SOS buffers
    if not zero_phase:
        return sp_signal.sosfilt(sos, samples, axis=-1)
    padlen = min(3 * (2 * len(sos) + 1), samples.shape[-1] - 1)
    return sp_signal.sosfiltfilt(sos, samples, axis=-1, padlen=padlen)


# ============================================================================
# PREPROCESSING
# ============================================================================

def window_geometry(cfg: PreprocessConfig, sample_rate_hz: float) -> Tuple[int, int]:
    """Window and stride lengths in samples."""
    width = int(round(cfg.window_ms / 1000.0 * sample_rate_hz))
    stride = max(1, int(round(cfg.stride_ms / 1000.0 * sample_rate_hz)))
    if width < 2:
        raise SignalError(f"window of {cfg.window_ms} ms is under two samples at {sample_rate_hz} Hz")
    return width, stride


def preprocess(raw: RawEeg, cfg: Optional[PreprocessConfig] = None, start_index: int = 0) -> List[EegWindow]:
    """
    Turn a raw recording into z-scored analysis windows.

    Steps: band-pass (Butterworth, SOS), optional crop, common average
    reference, segmentation at the configured stride, per-window per-channel
    z-scoring with a variance floor.

    Args:
        raw: Raw recording
        cfg: Preprocessing parameters (defaults if None)
        start_index: t_index of the first window

    Returns:
        List of EegWindow in chronological order
    """
    cfg = cfg or PreprocessConfig()
    rate = raw.sample_rate_hz
    width, stride = window_geometry(cfg, rate)

    start, stop = 0, raw.n_samples
    if cfg.crop_s is not None:
        start = int(round(cfg.crop_s[0] * rate))
        stop = min(raw.n_samples, int(round(cfg.crop_s[1] * rate)))
    if stop - start < width:
        raise SignalError(
            f"insufficient samples: {max(0, stop - start)} available after crop, "
            f"one window needs {width}"
        )

    sos = design_bandpass(cfg.filter_order, cfg.band_hz[0], cfg.band_hz[1], rate)
    filtered = apply_filter(sos, raw.samples, cfg.zero_phase)[:, start:stop]

    referenced = filtered - filtered.mean(axis=0, keepdims=True)

    segments = np.lib.stride_tricks.sliding_window_view(referenced, width, axis=1)[:, ::stride, :]
    segments = np.transpose(segments, (1, 0, 2))

    mean = segments.mean(axis=-1, keepdims=True)
    var = np.maximum(segments.var(axis=-1, keepdims=True), VARIANCE_FLOOR)
    normalized = (segments - mean) / np.sqrt(var)

    return [
        EegWindow(samples=normalized[i], sample_rate_hz=rate, t_index=start_index + i)
        for i in range(normalized.shape[0])
    ]


# ============================================================================
# ARTIFACT SCORING
# ============================================================================

def band_rms(window: EegWindow, band_lo_hz: float, band_hi_hz: float, zero_phase: bool = True) -> np.ndarray:
    """
    Per-channel RMS of the band-filtered window.

    Args:
        window: Analysis window
        band_lo_hz: Lower band edge
        band_hi_hz: Upper band edge
        zero_phase: Forward-backward filtering when True

    Returns:
        Vector of C nonnegative values
    """
    sos = design_bandpass(FILTER_ORDER, float(band_lo_hz), float(band_hi_hz), window.sample_rate_hz)
    filtered = apply_filter(sos, window.samples, zero_phase)
    return np.sqrt(np.mean(filtered * filtered, axis=-1))


def artifact_score(
    window: EegWindow,
    baseline: BaselineStats,
    band_hz: Optional[Tuple[float, float]] = None,
    aggregation: str = 'mean',
) -> float:
    """
    Artifact score A_t: channel-aggregated z-score of band RMS vs baseline.

    Args:
        window: Analysis window
        baseline: Subject baseline statistics for the same channels
        band_hz: EMG-contaminated band; the baseline's band when None
        aggregation: 'mean' (default) or 'max' over channels

    Returns:
        A_t in baseline z-units
    """
    if baseline.n_channels != window.n_channels:
        raise SignalError(
            f"channel mismatch: window has {window.n_channels}, baseline has {baseline.n_channels}"
        )
    lo, hi = band_hz or baseline.band_hz
    # Scored with the filter mode the baseline was measured with
    z = (band_rms(window, lo, hi, baseline.zero_phase) - baseline.mean) / baseline.std
    if aggregation == 'mean':
        return float(np.mean(z))
    if aggregation == 'max':
        return float(np.max(z))
    raise SignalError(f"Invalid aggregation '{aggregation}'. Valid options: ['mean', 'max']")


def compute_baseline(
    raw: RawEeg,
    cfg: Optional[PreprocessConfig] = None,
    seconds: float = BASELINE_SECONDS,
) -> BaselineStats:
    """
    Baseline band-RMS statistics from the leading clean segment.

    Args:
        raw: Clean recording; the first `seconds` are used
        cfg: Preprocessing parameters (crop is ignored here)
        seconds: Baseline segment length

    Returns:
        BaselineStats with floored standard deviations
    """
    cfg = (cfg or PreprocessConfig()).model_copy(update={'crop_s': None})
    n = min(raw.n_samples, int(round(seconds * raw.sample_rate_hz)))
    if raw.duration_s < seconds:
        logger.warning(
            f"Baseline segment is {raw.duration_s:.2f} s, shorter than the requested {seconds:.2f} s"
        )
    segment = RawEeg(raw.samples[:, :n], raw.sample_rate_hz)
    windows = preprocess(segment, cfg)
    lo, hi = cfg.artifact_band_hz
    rms = np.stack([band_rms(w, lo, hi, cfg.zero_phase) for w in windows])
    if len(windows) < 2:
        logger.warning('Baseline spans a single window; standard deviations fall back to the floor')
    return BaselineStats(mean=rms.mean(axis=0), std=rms.std(axis=0), band_hz=(lo, hi), zero_phase=cfg.zero_phase)


# ============================================================================
# NOISE INJECTION
# ============================================================================

def pink_shape(noise: np.ndarray, sample_rate_hz: float) -> np.ndarray:
    """Shape noise by 1/f in the frequency domain, DC bin zeroed."""
    n_samples = noise.shape[-1]
    spectrum = np.fft.rfft(noise, axis=-1)
    freqs = np.fft.rfftfreq(n_samples, d=1.0 / sample_rate_hz)
    scale = np.zeros_like(freqs)
    scale[1:] = 1.0 / freqs[1:]
    return np.fft.irfft(spectrum * scale, n=n_samples, axis=-1)


def inject_noise(clean: RawEeg, spec: NoiseSpec) -> RawEeg:
    """
    Add white, pink and EMG-band noise at a target SNR.

    White noise power is set from the clean signal power so that
    P_n = P_s / 10^(SNR/10); the pink and EMG components are derived from the
    same white draw and mixed by the spec weights.

    Args:
        clean: Clean recording
        spec: Noise parameters

    Returns:
        Noisy recording (the input itself when all weights are zero)
    """
    w_white, w_pink, w_emg = spec.weights
    if w_white == 0 and w_pink == 0 and w_emg == 0:
        return clean

    x = clean.samples
    rate = clean.sample_rate_hz
    signal_power = float(np.mean(x * x))
    noise_power = signal_power / 10.0 ** (spec.target_snr_db / 10.0)

    rng = np.random.default_rng(spec.rng_seed)
    white = rng.normal(0.0, np.sqrt(noise_power), size=x.shape)

    noisy = x + w_white * white
    if w_pink:
        noisy = noisy + w_pink * pink_shape(white, rate)
    if w_emg:
        lo, hi = ARTIFACT_BAND_HZ
        if x.shape[1] < 2:
            raise SignalError('EMG-band noise needs at least two samples')
        noisy = noisy + w_emg * apply_filter(design_bandpass(FILTER_ORDER, lo, hi, rate), white)
    return RawEeg(noisy, rate)


def synthesize_clean_eeg(
    n_channels: int,
    n_samples: int,
    sample_rate_hz: float,
    rng: np.random.Generator,
    rhythm_amplitude: float = 1.0,
    background_std: float = 1.0,
) -> RawEeg:
    """
    Sensorimotor-rhythm-like test signal.

    Each channel carries a 9-12 Hz rhythm with random phase and gain plus
    independent white background activity.
    """
    t = np.arange(n_samples) / sample_rate_hz
    freqs = rng.uniform(9.0, 12.0, size=(n_channels, 1))
    phases = rng.uniform(0.0, 2 * np.pi, size=(n_channels, 1))
    gains = rhythm_amplitude * rng.uniform(0.8, 1.2, size=(n_channels, 1))
    rhythm = gains * np.sin(2 * np.pi * freqs * t + phases)
    background = rng.normal(0.0, background_std, size=(n_channels, n_samples))
    return RawEeg(rhythm + background, sample_rate_hz)
