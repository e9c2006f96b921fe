"""
Tests for calibration metrics, temperature scaling, safety accounting and threshold sweeps.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neurogate.constants import OBJECTIVE_PRESETS
from neurogate.errors import ConfigError, PosteriorError
from neurogate.metrics import (
    LabeledPrediction,
    Outcome,
    SafetyLedger,
    ace,
    calibration_report,
    classify_outcome,
    ece,
    mce,
    optimize_threshold,
    overconfidence_rate,
    reliability_bins,
    safety_violation,
    temperature_scale,
    temporal_breakdown,
    threshold_sweep,
)


def pred(confidence, correct):
    return LabeledPrediction(confidence, 'GRASP', 'GRASP' if correct else 'ROTATE')


def preds_from(pairs):
    return [pred(c, ok) for c, ok in pairs]


prediction_sets = st.lists(
    st.tuples(st.floats(0.0, 1.0), st.booleans()), min_size=1, max_size=200,
).map(preds_from)


def ece_oracle(preds, M):
    """Per-sample loop over (lo, hi] bins, confidence 0 in the first bin."""
    edges = np.linspace(0.0, 1.0, M + 1)
    members = [[] for _ in range(M)]
    for p in preds:
        for m in range(M):
            if edges[m] < p.confidence <= edges[m + 1] or (m == 0 and p.confidence == 0.0):
                members[m].append(p)
                break
    total = 0.0
    for group in members:
        if group:
            acc = sum(p.correct for p in group) / len(group)
            conf = sum(p.confidence for p in group) / len(group)
            total += len(group) / len(preds) * abs(acc - conf)
    return total


# 0.95 x4 (half right) and 0.35 x4 (one right)
TWO_BINS = preds_from([(0.95, True), (0.95, True), (0.95, False), (0.95, False),
                       (0.35, True), (0.35, False), (0.35, False), (0.35, False)])


class TestLabeledPrediction:
    """Validation and construction."""

    def test_rejects_out_of_range(self):
        with pytest.raises(PosteriorError):
            LabeledPrediction(1.2, 'GRASP', 'GRASP')

    def test_rejects_unknown_label(self):
        with pytest.raises(PosteriorError, match="Invalid action 'LIFT'"):
            LabeledPrediction(0.5, 'LIFT', 'GRASP')

    def test_from_probs(self):
        p = LabeledPrediction.from_probs([0.1, 0.2, 0.6, 0.1], 'MOVE_TO')
        assert (p.confidence, p.predicted, p.correct) == (0.6, 'MOVE_TO', True)


class TestCalibrationError:
    """ECE, MCE, ACE and overconfidence."""

    def test_worked_example(self):
        assert ece(TWO_BINS) == pytest.approx(0.5 * 0.45 + 0.5 * 0.10)
        assert mce(TWO_BINS) == pytest.approx(0.45)
        assert ace(TWO_BINS, 2) == pytest.approx(0.275)
        assert overconfidence_rate(TWO_BINS) == 1.0

    def test_perfectly_calibrated(self):
        preds = preds_from([(0.75, True)] * 3 + [(0.75, False)])
        assert ece(preds) == pytest.approx(0.0, abs=1e-15)
        assert overconfidence_rate(preds) == 0.0

    def test_bin_edges(self):
        bins = reliability_bins(preds_from([(0.0, True), (0.1, True), (1.0, True), (0.55, False)]), 10)
        assert [b.count for b in bins] == [2, 0, 0, 0, 0, 1, 0, 0, 0, 1]
        assert bins[0].lower == 0.0 and bins[-1].upper == 1.0

    def test_empty(self):
        with pytest.raises(PosteriorError):
            ece([])

    def test_bad_bin_count(self):
        with pytest.raises(ConfigError):
            ece(TWO_BINS, 0)

    @pytest.mark.property
    @settings(max_examples=300)
    @given(prediction_sets, st.integers(1, 20))
    def test_matches_per_sample_oracle(self, preds, M):
        assert ece(preds, M) == pytest.approx(ece_oracle(preds, M), abs=1e-12)

    @pytest.mark.property
    @settings(max_examples=300)
    @given(prediction_sets, st.integers(1, 20))
    def test_ece_bounded_by_mce(self, preds, M):
        assert 0.0 <= ece(preds, M) <= mce(preds, M) + 1e-12 <= 1.0 + 1e-12

    @pytest.mark.property
    @given(prediction_sets)
    def test_single_bin_is_global_gap(self, preds):
        acc = np.mean([p.correct for p in preds])
        conf = np.mean([p.confidence for p in preds])
        assert ece(preds, 1) == pytest.approx(abs(acc - conf), abs=1e-12)
        assert ace(preds, 1) == pytest.approx(abs(acc - conf), abs=1e-12)


class TestCalibrationReport:
    """Aggregate report."""

    def test_fields(self):
        report = calibration_report(TWO_BINS)
        assert report.n == 8
        assert report.accuracy == pytest.approx(3 / 8)
        assert report.mean_confidence == pytest.approx(0.65)
        assert report.high_confidence_rate == 0.5
        # (0.05^2 * 2 + 0.95^2 * 2 + 0.65^2 + 0.35^2 * 3) / 8
        expected = (2 * 0.05 ** 2 + 2 * 0.95 ** 2 + 0.65 ** 2 + 3 * 0.35 ** 2) / 8
        assert report.brier == pytest.approx(expected)
        assert report.as_dict()['bins'] == 10
        assert len(report.bins) == 10


class TestTemperatureScaling:
    """Single-parameter recalibration."""

    @staticmethod
    def sample(n, true_temperature, seed=0):
        rng = np.random.default_rng(seed)
        logits = rng.normal(0.0, 2.0, size=(n, 4))
        z = logits / true_temperature
        probs = np.exp(z - z.max(axis=1, keepdims=True))
        probs /= probs.sum(axis=1, keepdims=True)
        # Inverse-CDF draw per row
        u = rng.random(n)
        labels = np.minimum((probs.cumsum(axis=1) < u[:, None]).sum(axis=1), 3)
        return logits, labels

    @pytest.mark.slow
    def test_calibrated_logits_keep_unit_temperature(self):
        logits, labels = self.sample(100_000, 1.0)
        fit = temperature_scale(logits, labels, kind='logits')
        assert fit.temperature == pytest.approx(1.0, abs=0.01)

    def test_overconfident_logits_are_softened(self):
        logits, labels = self.sample(20000, 2.0, seed=1)
        fit = temperature_scale(logits, labels, kind='logits')
        assert fit.temperature == pytest.approx(2.0, abs=0.2)
        assert fit.nll_after < fit.nll_before
        assert fit.ece_after < fit.ece_before

    def test_probability_input(self):
        logits, labels = self.sample(5000, 2.0, seed=2)
        probs = np.exp(logits) / np.exp(logits).sum(axis=1, keepdims=True)
        by_probs = temperature_scale(probs, labels, kind='probs')
        by_logits = temperature_scale(logits, labels, kind='logits')
        assert by_probs.temperature == pytest.approx(by_logits.temperature, abs=1e-3)

    def test_string_labels(self):
        fit = temperature_scale([[0.7, 0.1, 0.1, 0.1], [0.1, 0.7, 0.1, 0.1]], ['GRASP', 'RELEASE'])
        assert 0.25 <= fit.temperature <= 10.0

    def test_errors(self):
        with pytest.raises(PosteriorError, match='shape'):
            temperature_scale([[0.5, 0.5]], [0])
        with pytest.raises(PosteriorError, match='two distinct classes'):
            temperature_scale([[0.7, 0.1, 0.1, 0.1]] * 3, [0, 0, 0])
        with pytest.raises(ConfigError, match="Invalid score kind 'odds'"):
            temperature_scale([[0.7, 0.1, 0.1, 0.1]] * 2, [0, 1], kind='odds')


class TestSafetyLedger:
    """Outcome accounting."""

    @pytest.mark.parametrize('correct,intervened,outcome', [
        (False, True, Outcome.TP),
        (True, False, Outcome.TN),
        (True, True, Outcome.FP),
        (False, False, Outcome.FN),
    ])
    def test_classify(self, correct, intervened, outcome):
        assert classify_outcome(correct, intervened) is outcome

    def test_safety_violation(self):
        assert safety_violation('GRASP', 'RELEASE')
        assert not safety_violation('GRASP', 'GRASP')
        assert not safety_violation(None, 'GRASP')

    def test_rates(self):
        ledger = SafetyLedger(tp=30, tn=50, fp=10, fn=10)
        assert ledger.safety_rate == 0.8
        assert ledger.intervention_rate == 0.4
        assert ledger.accuracy == 0.6
        assert ledger.f1 == pytest.approx(60 / 80)

    def test_empty_ledger(self):
        ledger = SafetyLedger()
        assert (ledger.safety_rate, ledger.intervention_rate, ledger.f1) == (0.0, 0.0, 0.0)
        assert ledger.cause_percentages() == {}

    def test_causes_and_merge(self):
        a = SafetyLedger()
        a.add(Outcome.TP, cause='LOW_CONFIDENCE')
        a.add(Outcome.FP, cause='WARMUP')
        a.add(Outcome.TN, cause='ignored')
        b = SafetyLedger()
        b.add(Outcome.TP, cause='LOW_CONFIDENCE')
        b.add(Outcome.FN, violated=True)
        merged = a.merge(b)
        assert (merged.tp, merged.tn, merged.fp, merged.fn, merged.violations) == (2, 1, 1, 1, 1)
        assert merged.cause_percentages() == {'LOW_CONFIDENCE': pytest.approx(200 / 3), 'WARMUP': pytest.approx(100 / 3)}

    def test_temporal_breakdown(self):
        outcomes = [Outcome.TN] * 6 + [Outcome.TP] * 4
        parts = temporal_breakdown(outcomes, 4)
        assert [p.total for p in parts] == [3, 3, 2, 2]
        assert [p.tp for p in parts] == [0, 0, 2, 2]
        assert sum(p.total for p in temporal_breakdown(outcomes[:2], 4)) == 2


class TestThresholdSweep:
    """Single-threshold gate and objective selection."""

    def test_endpoints(self):
        sweep = threshold_sweep(TWO_BINS, [0.1, 1.0])
        low, high = sweep.points
        assert low.intervention_rate == 0.0
        assert high.intervention_rate == 1.0
        assert high.ledger.tp == 5 and high.ledger.fp == 3

    def test_midpoint(self):
        (point,) = threshold_sweep(TWO_BINS, [0.5]).points
        assert (point.ledger.tp, point.ledger.fp, point.ledger.tn, point.ledger.fn) == (3, 1, 2, 2)

    def test_grid_is_sorted(self):
        assert threshold_sweep(TWO_BINS, [0.9, 0.2, 0.5]).taus == [0.2, 0.5, 0.9]

    def test_empty_grid(self):
        with pytest.raises(ConfigError):
            threshold_sweep(TWO_BINS, [])

    @pytest.mark.property
    @settings(max_examples=200)
    @given(prediction_sets)
    def test_intervention_rate_is_monotone(self, preds):
        rates = [p.intervention_rate for p in threshold_sweep(preds).points]
        assert all(a <= b for a, b in zip(rates, rates[1:]))

    def test_safety_first_choice(self):
        sweep = threshold_sweep(TWO_BINS, [0.1, 0.5, 1.0])
        best = optimize_threshold(sweep, OBJECTIVE_PRESETS['safety_first'])
        # Safety: 0.1 -> 3/8, 0.5 -> 5/8, 1.0 -> 5/8; first maximum wins
        assert best.tau == 0.5

    def test_responsiveness_prefers_no_intervention(self):
        sweep = threshold_sweep(TWO_BINS, [0.1, 0.5, 1.0])
        assert optimize_threshold(sweep, (0.0, 1.0, 0.0)).tau == 0.1

    def test_optima_cover_presets(self):
        assert set(threshold_sweep(TWO_BINS).optima()) == set(OBJECTIVE_PRESETS)

    def test_weight_count(self):
        with pytest.raises(ConfigError, match='three weights'):
            optimize_threshold(threshold_sweep(TWO_BINS), (1.0, 0.0))
