"""
Offline evaluation metrics.

Calibration error (ECE, MCE, ACE), reliability bins, temperature scaling,
safety accounting over gate outcomes, confidence-threshold sweeps and
multi-objective threshold selection.

Bins are equal-width on [0, 1], left-open and right-closed; a confidence of
exactly 0 falls in the first bin.
"""

import logging
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import log_softmax, logsumexp

from .constants import (
    ACTIONS,
    CALIBRATION_BINS,
    HIGH_CONFIDENCE_LEVEL,
    OBJECTIVE_PRESETS,
    TEMPERATURE_RANGE,
    TEMPERATURE_STEP,
    THRESHOLD_GRID,
)
from .errors import ConfigError, PosteriorError

logger = logging.getLogger(__name__)


# ============================================================================
# PREDICTIONS
# ============================================================================

@dataclass(frozen=True)
class LabeledPrediction:
    """Confidence (max-prob), predicted label and true label of one decode."""

    confidence: float
    predicted: str
    true: str

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise PosteriorError(f"confidence must lie in [0, 1], got {self.confidence}")
        for label in (self.predicted, self.true):
            if label not in ACTIONS:
                raise PosteriorError(f"Invalid action '{label}'. Valid options: {list(ACTIONS)}")

    @property
    def correct(self) -> bool:
        return self.predicted == self.true

    @classmethod
    def from_probs(cls, probs: Sequence[float], true: str) -> 'LabeledPrediction':
        values = np.asarray(probs, dtype=np.float64)
        return cls(float(values.max()), ACTIONS[int(np.argmax(values))], true)


def _arrays(preds: Sequence[LabeledPrediction]) -> Tuple[np.ndarray, np.ndarray]:
    if len(preds) == 0:
        raise PosteriorError('no predictions to evaluate')
    conf = np.fromiter((p.confidence for p in preds), dtype=np.float64, count=len(preds))
    correct = np.fromiter((p.correct for p in preds), dtype=np.float64, count=len(preds))
    return conf, correct


def bin_edges(n_bins: int) -> np.ndarray:
    if n_bins < 1:
        raise ConfigError(f"bin count must be at least 1, got {n_bins}")
    return np.linspace(0.0, 1.0, n_bins + 1)


def bin_index(confidences: np.ndarray, n_bins: int) -> np.ndarray:
    """Bin of each confidence under the left-open, right-closed convention."""
    return np.searchsorted(bin_edges(n_bins)[1:-1], confidences, side='left')


# ============================================================================
# CALIBRATION ERROR
# ============================================================================

@dataclass(frozen=True)
class ReliabilityBin:
    lower: float
    upper: float
    count: int
    accuracy: float
    confidence: float

    @property
    def gap(self) -> float:
        return abs(self.accuracy - self.confidence)


def reliability_bins(preds: Sequence[LabeledPrediction], M: int = CALIBRATION_BINS) -> List[ReliabilityBin]:
    """Per-bin count, accuracy and mean confidence (empty bins report zeros)."""
    conf, correct = _arrays(preds)
    edges = bin_edges(M)
    idx = bin_index(conf, M)
    counts = np.bincount(idx, minlength=M)
    conf_sum = np.bincount(idx, weights=conf, minlength=M)
    correct_sum = np.bincount(idx, weights=correct, minlength=M)
    rows = []
    for m in range(M):
        n = int(counts[m])
        rows.append(ReliabilityBin(
            lower=float(edges[m]),
            upper=float(edges[m + 1]),
            count=n,
            accuracy=float(correct_sum[m] / n) if n else 0.0,
            confidence=float(conf_sum[m] / n) if n else 0.0,
        ))
    return rows


def _weighted_gap(bins: Iterable[ReliabilityBin], n: int) -> float:
    return float(sum((b.count / n) * b.gap for b in bins if b.count))


def ece(preds: Sequence[LabeledPrediction], M: int = CALIBRATION_BINS) -> float:
    """Expected calibration error over M equal-width bins."""
    return _weighted_gap(reliability_bins(preds, M), len(preds))


def mce(preds: Sequence[LabeledPrediction], M: int = CALIBRATION_BINS) -> float:
    """Largest |accuracy - confidence| over nonempty bins."""
    return float(max(b.gap for b in reliability_bins(preds, M) if b.count))


def ace(preds: Sequence[LabeledPrediction], R: int = CALIBRATION_BINS) -> float:
    """
    Adaptive calibration error over R equal-count bins.

    Predictions are sorted by confidence (stable); leading bins take one
    extra sample when n is not a multiple of R.
    """
    if R < 1:
        raise ConfigError(f"bin count must be at least 1, got {R}")
    conf, correct = _arrays(preds)
    order = np.argsort(conf, kind='stable')
    n = len(conf)
    total = 0.0
    for chunk in np.array_split(order, R):
        if chunk.size == 0:
            continue
        total += (chunk.size / n) * abs(float(correct[chunk].mean()) - float(conf[chunk].mean()))
    return float(total)


def overconfidence_rate(preds: Sequence[LabeledPrediction], M: int = CALIBRATION_BINS) -> float:
    """Fraction of predictions whose confidence exceeds the accuracy of their bin."""
    conf, _ = _arrays(preds)
    bins = reliability_bins(preds, M)
    accuracy = np.array([b.accuracy for b in bins])
    return float(np.mean(conf > accuracy[bin_index(conf, M)]))


@dataclass(frozen=True)
class CalibrationReport:
    n: int
    M: int
    ece: float
    mce: float
    ace: float
    overconfidence_rate: float
    accuracy: float
    mean_confidence: float
    brier: float
    high_confidence_rate: float
    bins: Tuple[ReliabilityBin, ...] = ()

    def as_dict(self) -> Dict[str, float]:
        return {
            'n': self.n, 'bins': self.M, 'ece': self.ece, 'mce': self.mce, 'ace': self.ace,
            'overconfidence_rate': self.overconfidence_rate, 'accuracy': self.accuracy,
            'mean_confidence': self.mean_confidence, 'brier': self.brier,
            'high_confidence_rate': self.high_confidence_rate,
        }


def calibration_report(preds: Sequence[LabeledPrediction], M: int = CALIBRATION_BINS) -> CalibrationReport:
    """
    Full calibration summary of a prediction set.

    Brier score is computed on the top label: mean of (confidence - correct)^2.
    The high-confidence rate counts confidences at or above 0.9.
    """
    conf, correct = _arrays(preds)
    bins = reliability_bins(preds, M)
    return CalibrationReport(
        n=len(preds),
        M=M,
        ece=_weighted_gap(bins, len(preds)),
        mce=float(max(b.gap for b in bins if b.count)),
        ace=ace(preds, M),
        overconfidence_rate=overconfidence_rate(preds, M),
        accuracy=float(correct.mean()),
        mean_confidence=float(conf.mean()),
        brier=float(np.mean((conf - correct) ** 2)),
        high_confidence_rate=float(np.mean(conf >= HIGH_CONFIDENCE_LEVEL)),
        bins=tuple(bins),
    )


# ============================================================================
# TEMPERATURE SCALING
# ============================================================================

@dataclass(frozen=True)
class TemperatureFit:
    temperature: float
    nll_before: float
    nll_after: float
    ece_before: float
    ece_after: float


def _nll(logits: np.ndarray, labels: np.ndarray, temperature: float) -> float:
    z = logits / temperature
    picked = z[np.arange(len(labels)), labels]
    return float(np.mean(logsumexp(z, axis=1) - picked))


def _predictions(logits: np.ndarray, labels: np.ndarray, temperature: float) -> List[LabeledPrediction]:
    probs = np.exp(log_softmax(logits / temperature, axis=1))
    return [
        LabeledPrediction(float(min(1.0, row.max())), ACTIONS[int(row.argmax())], ACTIONS[int(y)])
        for row, y in zip(probs, labels)
    ]


def temperature_scale(
    scores: Union[np.ndarray, Sequence[Sequence[float]]],
    labels: Sequence[Union[int, str]],
    kind: str = 'probs',
    M: int = CALIBRATION_BINS,
) -> TemperatureFit:
    """
    Fit a single temperature by minimizing negative log-likelihood.

    Probabilities are softened as p^(1/T) renormalized, which is softmax of
    log p / T. T is grid-searched over [0.25, 10] in steps of 0.01 and the
    best grid point refined with a bounded scalar minimizer.

    Args:
        scores: (n, 4) posteriors ('probs') or logits ('logits')
        labels: True action per row, as index or label
        kind: 'probs' or 'logits'
        M: Bins for the before/after ECE

    Returns:
        TemperatureFit
    """
    values = np.asarray(scores, dtype=np.float64)
    if values.ndim != 2 or values.shape[1] != len(ACTIONS):
        raise PosteriorError(f"scores must have shape (n, {len(ACTIONS)}), got {values.shape}")
    y = np.array([ACTIONS.index(v) if isinstance(v, str) else int(v) for v in labels], dtype=np.int64)
    if len(y) != len(values) or len(y) == 0:
        raise PosteriorError(f"need one label per row, got {len(y)} labels for {len(values)} rows")
    if len(np.unique(y)) < 2:
        raise PosteriorError('temperature scaling needs at least two distinct classes')

    if kind == 'probs':
        logits = np.log(np.clip(values, 1e-12, None))
    elif kind == 'logits':
        logits = values
    else:
        raise ConfigError(f"Invalid score kind '{kind}'. Valid options: ['probs', 'logits']")

    lo, hi = TEMPERATURE_RANGE
    grid = np.arange(lo, hi + TEMPERATURE_STEP / 2, TEMPERATURE_STEP)
    losses = np.array([_nll(logits, y, t) for t in grid])
    best = int(np.argmin(losses))
    bounds = (float(grid[max(best - 1, 0)]), float(grid[min(best + 1, len(grid) - 1)]))
    t_star, nll_star = float(grid[best]), float(losses[best])
    if bounds[1] > bounds[0]:
        refined = minimize_scalar(lambda t: _nll(logits, y, t), bounds=bounds, method='bounded',
                                  options={'xatol': 1e-6})
        if refined.success and refined.fun < nll_star:
            t_star, nll_star = float(refined.x), float(refined.fun)

    fit = TemperatureFit(
        temperature=t_star,
        nll_before=_nll(logits, y, 1.0),
        nll_after=nll_star,
        ece_before=ece(_predictions(logits, y, 1.0), M),
        ece_after=ece(_predictions(logits, y, t_star), M),
    )
    logger.info(f"Temperature scaling: T*={fit.temperature:.3f}, ECE {fit.ece_before:.4f} -> {fit.ece_after:.4f}")
    return fit


# ============================================================================
# SAFETY ACCOUNTING
# ============================================================================

class Outcome(str, Enum):
    TP = 'TP'   # decoder wrong, gate intervened
    TN = 'TN'   # decoder right, gate allowed
    FP = 'FP'   # decoder right, gate intervened
    FN = 'FN'   # decoder wrong, gate allowed


def classify_outcome(correct: bool, intervened: bool) -> Outcome:
    if intervened:
        return Outcome.FP if correct else Outcome.TP
    return Outcome.TN if correct else Outcome.FN


def safety_violation(executed: Optional[str], intended: str) -> bool:
    """True iff an active manipulation was executed that differs from the intent."""
    if executed is None or executed not in ACTIONS:
        return False
    return executed != intended


@dataclass
class SafetyLedger:
    """Running TP/TN/FP/FN counts plus the intervention-cause histogram."""

    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0
    violations: int = 0
    unlabeled: int = 0
    causes: Counter = field(default_factory=Counter)

    def add(self, outcome: Outcome, cause: Optional[str] = None, violated: bool = False) -> None:
        if outcome is Outcome.TP:
            self.tp += 1
        elif outcome is Outcome.TN:
            self.tn += 1
        elif outcome is Outcome.FP:
            self.fp += 1
        else:
            self.fn += 1
        if cause is not None and outcome in (Outcome.TP, Outcome.FP):
            self.causes[cause] += 1
        if violated:
            self.violations += 1

    def merge(self, other: 'SafetyLedger') -> 'SafetyLedger':
        return SafetyLedger(
            tp=self.tp + other.tp, tn=self.tn + other.tn,
            fp=self.fp + other.fp, fn=self.fn + other.fn,
            violations=self.violations + other.violations,
            unlabeled=self.unlabeled + other.unlabeled,
            causes=self.causes + other.causes,
        )

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    @property
    def interventions(self) -> int:
        return self.tp + self.fp

    @property
    def safety_rate(self) -> float:
        return (self.tp + self.tn) / self.total if self.total else 0.0

    @property
    def intervention_rate(self) -> float:
        return self.interventions / self.total if self.total else 0.0

    @property
    def accuracy(self) -> float:
        """Decoder accuracy over the labeled frames (gate-independent)."""
        return (self.tn + self.fp) / self.total if self.total else 0.0

    @property
    def f1(self) -> float:
        """F1 with intervention as the positive class."""
        denom = 2 * self.tp + self.fp + self.fn
        return 2 * self.tp / denom if denom else 0.0

    def cause_percentages(self) -> Dict[str, float]:
        """Share of interventions per cause, in percent, most frequent first."""
        total = sum(self.causes.values())
        if not total:
            return {}
        return {cause: 100.0 * count / total for cause, count in self.causes.most_common()}

    def as_dict(self) -> Dict[str, object]:
        return {
            'tp': self.tp, 'tn': self.tn, 'fp': self.fp, 'fn': self.fn,
            'total': self.total, 'safety_rate': self.safety_rate,
            'intervention_rate': self.intervention_rate, 'f1': self.f1,
            'violations': self.violations, 'unlabeled': self.unlabeled,
            'causes': dict(self.causes),
        }


def ledger_from_outcomes(outcomes: Iterable[Outcome]) -> SafetyLedger:
    ledger = SafetyLedger()
    for outcome in outcomes:
        ledger.add(outcome)
    return ledger


def temporal_breakdown(outcomes: Sequence[Outcome], bins: int = 4) -> List[SafetyLedger]:
    """Ledgers over consecutive, near-equal time segments of a session."""
    if bins < 1:
        raise ConfigError(f"bin count must be at least 1, got {bins}")
    return [ledger_from_outcomes(outcomes[int(c[0]):int(c[-1]) + 1]) if c.size else SafetyLedger()
            for c in np.array_split(np.arange(len(outcomes)), bins)]


# ============================================================================
# THRESHOLD SWEEPS
# ============================================================================

@dataclass(frozen=True)
class SweepPoint:
    tau: float
    ledger: SafetyLedger

    @property
    def safety_rate(self) -> float:
        return self.ledger.safety_rate

    @property
    def intervention_rate(self) -> float:
        return self.ledger.intervention_rate

    @property
    def f1(self) -> float:
        return self.ledger.f1


@dataclass(frozen=True)
class ThresholdSweepResult:
    points: Tuple[SweepPoint, ...]

    @property
    def taus(self) -> List[float]:
        return [p.tau for p in self.points]

    def optima(self, presets: Dict[str, Tuple[float, float, float]] = OBJECTIVE_PRESETS) -> Dict[str, SweepPoint]:
        return {name: optimize_threshold(self, weights) for name, weights in presets.items()}


def threshold_sweep(
    preds: Sequence[LabeledPrediction],
    grid: Sequence[float] = THRESHOLD_GRID,
) -> ThresholdSweepResult:
    """
    Single-confidence-threshold gate at each grid point.

    The gate intervenes iff confidence < tau.
    """
    if not len(grid):
        raise ConfigError('threshold grid is empty')
    conf, correct = _arrays(preds)
    correct = correct.astype(bool)
    points = []
    for tau in sorted(float(t) for t in grid):
        intervened = conf < tau
        points.append(SweepPoint(tau, SafetyLedger(
            tp=int(np.sum(intervened & ~correct)),
            tn=int(np.sum(~intervened & correct)),
            fp=int(np.sum(intervened & correct)),
            fn=int(np.sum(~intervened & ~correct)),
        )))
    return ThresholdSweepResult(tuple(points))


def objective(point: SweepPoint, weights: Tuple[float, float, float]) -> float:
    alpha, beta, gamma = weights
    return alpha * point.safety_rate + beta * (1.0 - point.intervention_rate) + gamma * point.f1


def optimize_threshold(sweep: ThresholdSweepResult, weights: Tuple[float, float, float]) -> SweepPoint:
    """
    Grid point maximizing alpha*Safety + beta*(1 - Intervention) + gamma*F1.

    Ties go to the smallest tau.
    """
    if len(weights) != 3:
        raise ConfigError(f"objective needs three weights (safety, responsiveness, F1), got {len(weights)}")
    best = None
    best_value = -np.inf
    for point in sweep.points:
        value = objective(point, weights)
        if value > best_value:
            best, best_value = point, value
    return best
