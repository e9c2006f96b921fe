"""
Intent posteriors and the physiological measurements derived from them.

A posterior is a point on the simplex over the four manipulation primitives.
Calibration mixes it with the uniform distribution; normalized entropy and
the oscillation index over a short history feed the confidence and
stability checks of the monitor.
"""

from collections import deque
from dataclasses import dataclass
from enum import IntEnum
from itertools import pairwise
from typing import Deque, Iterable, Tuple, Union

import numpy as np
from scipy.special import entr

from .constants import ACTIONS, HISTORY_K, N_ACTIONS, RENORMALIZE_TOLERANCE
from .errors import ConfigError, PosteriorError

_LOG_N = float(np.log(N_ACTIONS))
_UNIFORM = 1.0 / N_ACTIONS

# Below this deviation a posterior is taken as already normalized, which keeps
# reconstruction from recorded values bit-stable.
_EXACT_SUM = 1e-12


class Action(IntEnum):
    """Manipulation primitives; the integer value is the tie-break order."""

    GRASP = 0
    RELEASE = 1
    MOVE_TO = 2
    ROTATE = 3

    @property
    def label(self) -> str:
        return self.name

    @classmethod
    def from_label(cls, label: str) -> 'Action':
        """Case-insensitive lookup; accepts 'move-to' and 'move_to'."""
        key = label.strip().upper().replace('-', '_')
        if key not in ACTIONS:
            raise PosteriorError(f"Invalid action '{label}'. Valid options: {list(ACTIONS)}")
        return cls[key]


def _read_only(values: np.ndarray) -> np.ndarray:
    values.setflags(write=False)
    return values


# ============================================================================
# POSTERIORS
# ============================================================================

@dataclass(frozen=True, eq=False)
class IntentPosterior:
    """Decoder output over (GRASP, RELEASE, MOVE_TO, ROTATE)."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=np.float64).ravel()
        if probs.shape != (N_ACTIONS,):
            raise PosteriorError(f"posterior needs {N_ACTIONS} entries, got {probs.size}")
        if not np.all(np.isfinite(probs)) or np.any(probs < 0):
            raise PosteriorError(f"posterior entries must be finite and nonnegative, got {probs.tolist()}")
        total = float(probs.sum())
        if abs(total - 1.0) > RENORMALIZE_TOLERANCE:
            raise PosteriorError(f"posterior sums to {total!r}, outside tolerance {RENORMALIZE_TOLERANCE}")
        if abs(total - 1.0) > _EXACT_SUM:
            probs = probs / total
        object.__setattr__(self, 'probs', _read_only(probs))

    @property
    def argmax(self) -> Action:
        """Most probable action; ties go to the lowest index."""
        return Action(int(np.argmax(self.probs)))

    @property
    def confidence(self) -> float:
        return float(self.probs.max())

    def as_list(self):
        return self.probs.tolist()


@dataclass(frozen=True, eq=False)
class CalibratedPosterior:
    """Posterior after convex mixing with the uniform distribution."""

    probs: np.ndarray
    alpha_m: float

    def __post_init__(self):
        object.__setattr__(self, 'probs', _read_only(np.array(self.probs, dtype=np.float64).ravel()))

    @property
    def argmax(self) -> Action:
        return Action(int(np.argmax(self.probs)))

    @property
    def confidence(self) -> float:
        return float(self.probs.max())

    def as_list(self):
        return self.probs.tolist()


def calibrate(p: IntentPosterior, alpha_m: float) -> CalibratedPosterior:
    """
    Mix a posterior with the uniform distribution.

    Args:
        p: Decoder posterior
        alpha_m: Weight on the decoder posterior, in [0, 1]

    Returns:
        CalibratedPosterior alpha_m * p + (1 - alpha_m) / 4
    """
    if not 0.0 <= alpha_m <= 1.0:
        raise ConfigError(f"Invalid alpha_m '{alpha_m}'. Must lie in [0, 1]")
    mixed = alpha_m * p.probs + (1.0 - alpha_m) * _UNIFORM
    return CalibratedPosterior(probs=mixed, alpha_m=float(alpha_m))


def normalized_entropy(p: Union[CalibratedPosterior, IntentPosterior]) -> float:
    """Shannon entropy (natural log) divided by log 4, with 0 log 0 = 0."""
    value = float(np.sum(entr(p.probs))) / _LOG_N
    return min(1.0, max(0.0, value))


# ============================================================================
# HISTORY AND OSCILLATION
# ============================================================================

class IntentHistory:
    """
    Ring buffer of the last K decoded frames.

    Holds the argmax label and the posterior of each frame in chronological
    order; the oldest frame is evicted once K frames are buffered.
    """

    def __init__(self, capacity: int = HISTORY_K, frames: Iterable = ()):
        if capacity < 2:
            raise ConfigError(f"history length K must be at least 2, got {capacity}")
        self.capacity = capacity
        self._labels: Deque[Action] = deque(maxlen=capacity)
        self._posteriors: Deque[np.ndarray] = deque(maxlen=capacity)
        for p in frames:
            self.push(p)

    def push(self, p) -> 'IntentHistory':
        """Append a frame (any posterior with `probs`), evicting at capacity."""
        self._labels.append(Action(int(np.argmax(p.probs))))
        self._posteriors.append(p.probs)
        return self

    @property
    def labels(self) -> Tuple[Action, ...]:
        return tuple(self._labels)

    @property
    def posteriors(self) -> Tuple[np.ndarray, ...]:
        return tuple(self._posteriors)

    @property
    def is_full(self) -> bool:
        return len(self._labels) == self.capacity

    def __len__(self) -> int:
        return len(self._labels)

    def copy(self) -> 'IntentHistory':
        clone = IntentHistory(self.capacity)
        clone._labels.extend(self._labels)
        clone._posteriors.extend(self._posteriors)
        return clone


def push_frame(h: IntentHistory, p: CalibratedPosterior) -> IntentHistory:
    """Append a calibrated frame to the history and return it."""
    return h.push(p)


def oscillation_index(h: IntentHistory) -> float:
    """
    Fraction of consecutive argmax flips in the buffered frames.

    Normalized by K - 1 regardless of fill level; fewer than two buffered
    frames give 0.
    """
    if len(h) < 2:
        return 0.0
    flips = sum(1 for a, b in pairwise(h._labels) if a != b)
    return flips / (h.capacity - 1)
