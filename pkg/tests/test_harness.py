"""
Tests for synthetic sessions, experiments, ablations and the latency bench.
"""

from pathlib import Path

import numpy as np
import pytest

from neurogate.config import ScenarioSpec, SyntheticDecoderModel, load_scenario
from neurogate.constants import ABLATION_TOGGLES, TAU_A
from neurogate.harness import (
    CONFIDENCE_ONLY,
    FULL_SYSTEM,
    bench_latency,
    confidence_only_ledger,
    default_world,
    generate_session,
    run_ablation_suite,
    run_experiment,
    run_monitored,
    run_threshold_sensitivity,
)

SCENARIOS = Path(__file__).resolve().parent.parent / 'scenarios'


def small_spec(**kw):
    base = dict(name='small', trials=200, snr_bins=5, repetitions=2, include_eeg=False, seed=5)
    base.update(kw)
    return ScenarioSpec(**base)


class TestWorld:
    """Feasible and blocked objects of the tabletop scene."""

    def test_default_world(self):
        world = default_world()
        assert world.robot == 'r1'
        assert world.items == ('cup',) and world.blocked_items == ('vase',)
        assert world.locations == ('bin', 'counter', 'table')
        assert world.blocked_locations == ('shelf',)
        assert world.orientations == ('east', 'north', 'south', 'west')
        assert world.blocked_orientations == ('inverted',)


class TestGenerateSession:
    """Synthetic trial generation."""

    def test_shape(self):
        spec = small_spec(trials=30, dwell_frames=4)
        session = generate_session(spec.decoder, spec)
        frames = list(session.frames())
        assert session.n_frames == len(frames) == 120
        assert [f.index for f in frames] == list(range(120))
        assert session.trial_of(7).index == 1
        assert all(f.window is None for f in frames)
        assert session.baseline is None

    def test_seeded(self):
        spec = small_spec(trials=50)
        a = generate_session(spec.decoder, spec, seed=11)
        b = generate_session(spec.decoder, spec, seed=11)
        c = generate_session(spec.decoder, spec, seed=12)
        assert a.trials == b.trials
        assert a.trials != c.trials

    def test_snr_ramp_and_bins(self):
        spec = small_spec(trials=100)
        trials = generate_session(spec.decoder, spec).trials
        assert trials[0].snr_db == 20.0 and trials[-1].snr_db == -5.0
        assert [t.snr_bin for t in trials[::20]] == [0, 1, 2, 3, 4]
        assert all(a.snr_db > b.snr_db for a, b in zip(trials, trials[1:]))

    def test_error_signatures(self):
        spec = small_spec(trials=400, decoder=SyntheticDecoderModel(base_accuracy=0.3))
        session = generate_session(spec.decoder, spec)
        world = session.world
        modes = {t.mode for t in session.trials}
        assert modes == {'correct', 'diffuse', 'artifact', 'unstable', 'infeasible'}
        for trial in session.trials:
            argmaxes = [int(np.argmax(p)) for p in trial.posteriors]
            assert all(abs(sum(p) - 1.0) < 1e-9 for p in trial.posteriors)
            if trial.correct:
                assert trial.decoded is trial.truth
                assert trial.context.item in world.items
            else:
                assert trial.decoded is not trial.truth
            if trial.mode == 'unstable':
                assert len(set(argmaxes)) == 2
            else:
                assert set(argmaxes) == {int(trial.decoded)}
            if trial.mode == 'infeasible':
                blocked = (trial.context.item in world.blocked_items
                           or trial.context.location in world.blocked_locations
                           or trial.context.orientation in world.blocked_orientations)
                assert blocked

    def test_confidence_only_ledger_counts_every_frame(self):
        spec = small_spec(trials=40)
        session = generate_session(spec.decoder, spec)
        ledger = confidence_only_ledger(session, 0.75)
        assert ledger.total == session.n_frames
        assert set(ledger.causes) <= {'LOW_CONFIDENCE'}


class TestEegSessions:
    """Sessions with rendered EEG windows."""

    def test_artifact_trials_score_high(self):
        decoder = SyntheticDecoderModel(base_accuracy=0.5, error_modes={'artifact': 1.0})
        spec = small_spec(trials=40, snr_bins=1, snr_end_db=20.0, include_eeg=True, decoder=decoder)
        session = generate_session(spec.decoder, spec)
        assert session.baseline is not None and session.baseline.n_channels == 8
        result = run_monitored(session, spec.monitor_config())
        by_mode = {'artifact': [], 'correct': []}
        for record in result.trace:
            by_mode[session.trial_of(record.frame).mode].append(record.artifact)
        assert by_mode['artifact'] and by_mode['correct']
        assert np.median(by_mode['artifact']) > TAU_A > np.median(by_mode['correct'])


class TestExperiments:
    """Experiment drivers on small scenarios."""

    def test_run_experiment(self):
        spec = small_spec()
        result = run_experiment(spec)
        assert result.ledger.total == 2 * 200 * 10
        assert len(result.snr_bins) == 5
        assert sum(b.ledger.total for b in result.snr_bins) == result.ledger.total
        assert result.snr_bins[0].snr_high_db == 20.0
        assert result.ledger.safety_rate > result.ledger.accuracy
        assert result.snr_bins[-1].ledger.intervention_rate > result.snr_bins[0].ledger.intervention_rate
        assert result.paired is not None and result.paired.n == 2
        assert result.calibration.n == result.ledger.total
        assert result.latency is not None

    def test_experiment_is_deterministic(self):
        spec = small_spec(trials=60, repetitions=1)
        first = run_experiment(spec).as_dict()
        second = run_experiment(spec).as_dict()
        assert first == second
        assert 'latency' not in first
        assert first['paired'] is None

    def test_ablation_suite_rows(self):
        rows = run_ablation_suite(small_spec(trials=100))
        assert [r.name for r in rows] == [FULL_SYSTEM, *ABLATION_TOGGLES.values(), CONFIDENCE_ONLY]
        assert len({r.ledger.total for r in rows}) == 1
        by_name = {r.name: r for r in rows}
        assert by_name['No Entropy Check'].ledger.causes['LOW_CONFIDENCE'] == 0

    def test_threshold_sensitivity(self):
        rows = run_threshold_sensitivity(small_spec(trials=60), [1.0, 0.0, 0.5])
        assert [tau for tau, _ in rows] == [0.0, 0.5, 1.0]
        assert rows[0][1].intervention_rate == 1.0
        assert rows[-1][1].intervention_rate < 1.0

    def test_bench_latency(self):
        summary = bench_latency(small_spec(trials=20), steps=500)
        assert summary.steps == 500
        assert 0.0 < summary.p50_us <= summary.p99_us <= summary.max_us


@pytest.mark.slow
class TestDefaultScenario:
    """Full-size SNR-degradation experiment."""

    @pytest.fixture(scope='class')
    def spec(self):
        return load_scenario(SCENARIOS / 'default.yaml')

    def test_safety_and_intervention_trend(self, spec):
        result = run_experiment(spec)
        assert result.ledger.safety_rate > 0.9
        assert result.ledger.safety_rate > result.confidence_only.safety_rate
        rates = [b.ledger.intervention_rate for b in result.snr_bins]
        assert all(a <= b for a, b in zip(rates, rates[1:]))
        assert result.paired.mean > 0

    def test_ablation_ordering(self, spec):
        rows = {r.name: r.safety_rate for r in run_ablation_suite(spec)}
        full = rows[FULL_SYSTEM]
        assert full > rows['No Entropy Check']
        assert full > rows['No Logical Check']
        assert full > rows['No Artifact Check']
        assert full > rows[CONFIDENCE_ONLY]

    def test_latency_budget(self):
        summary = bench_latency(load_scenario(SCENARIOS / 'bench.yaml'), steps=100_000)
        assert summary.within_budget
