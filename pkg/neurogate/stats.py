"""
Statistical summaries for experiment results.

Handles paired t-tests with Cohen's d across repetitions and latency
percentile summaries against the frame-period budget.
"""

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats as scipy_stats

from .constants import FRAME_RATE_HZ, LATENCY_BUDGET_MS
from .errors import ConfigError


# ============================================================================
# PAIRED T-TEST
# ============================================================================

@dataclass(frozen=True)
class PairedTest:
    n: int
    mean: float
    sd: float
    t: float
    p_two_tailed: float
    cohens_d: float


def paired_t_and_effect(deltas: Sequence[float]) -> PairedTest:
    """
    Paired t-test on per-pair differences.

    t = mean / (sd / sqrt(n)) with n - 1 degrees of freedom, sd the sample
    standard deviation; Cohen's d = mean / sd.

    Args:
        deltas: Per-subject (or per-repetition) differences

    Returns:
        PairedTest
    """
    values = np.asarray(deltas, dtype=np.float64)
    n = values.size
    if n < 2:
        raise ConfigError(f"paired t-test needs at least 2 differences, got {n}")
    if not np.all(np.isfinite(values)):
        raise ConfigError('differences must be finite')

    mean = float(values.mean())
    sd = float(values.std(ddof=1))

    if sd == 0.0:
        # Constant differences: the statistic degenerates
        if mean == 0.0:
            return PairedTest(n, 0.0, 0.0, 0.0, 1.0, 0.0)
        t = math.copysign(math.inf, mean)
        return PairedTest(n, mean, 0.0, t, 0.0, t)

    t = mean / (sd / math.sqrt(n))
    p = float(2.0 * scipy_stats.t.sf(abs(t), df=n - 1))
    return PairedTest(n, mean, sd, float(t), p, mean / sd)


def paired_t_from_summary(mean: float, sd: float, n: int) -> float:
    """t statistic from a reported mean difference, its SD and the pair count."""
    if n < 2 or sd <= 0:
        raise ConfigError(f"need n >= 2 and sd > 0, got n={n}, sd={sd}")
    return mean / (sd / math.sqrt(n))


# ============================================================================
# LATENCY
# ============================================================================

@dataclass(frozen=True)
class LatencySummary:
    steps: int
    p50_us: float
    p95_us: float
    p99_us: float
    mean_us: float
    max_us: float

    @property
    def decisions_per_sec(self) -> float:
        return 1e6 / self.mean_us if self.mean_us > 0 else math.inf

    @property
    def frame_period_us(self) -> float:
        return 1e6 / FRAME_RATE_HZ

    @property
    def safety_margin(self) -> float:
        """How many times over the frame rate the monitor can sustain."""
        return self.decisions_per_sec / FRAME_RATE_HZ

    @property
    def within_budget(self) -> bool:
        return self.p99_us < LATENCY_BUDGET_MS * 1000.0


def latency_summary(latencies_us: Sequence[float]) -> LatencySummary:
    values = np.asarray(latencies_us, dtype=np.float64)
    if values.size == 0:
        raise ConfigError('no latency samples')
    p50, p95, p99 = np.percentile(values, [50, 95, 99])
    return LatencySummary(
        steps=int(values.size),
        p50_us=float(p50),
        p95_us=float(p95),
        p99_us=float(p99),
        mean_us=float(values.mean()),
        max_us=float(values.max()),
    )
