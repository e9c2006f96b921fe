"""
Tests for configuration models and scenario loading.
"""

from pathlib import Path

import pytest

from neurogate.config import (
    MonitorConfig,
    PreprocessConfig,
    ScenarioSpec,
    SyntheticDecoderModel,
    TaskContext,
    build_model,
    load_scenario,
)
from neurogate.errors import ConfigError, InputFileError

SCENARIOS = Path(__file__).resolve().parent.parent / 'scenarios'


class TestMonitorConfig:
    """Thresholds, toggles and copies."""

    def test_defaults(self):
        cfg = MonitorConfig()
        assert (cfg.tau_h, cfg.tau_a, cfg.tau_omega, cfg.alpha_m, cfg.k_frames) == (0.75, 2.5, 0.3, 0.8, 10)
        assert cfg.effective_alpha == 0.8

    @pytest.mark.parametrize('field,value', [
        ('tau_h', 1.5), ('tau_omega', -0.1), ('alpha_m', 2.0), ('k_frames', 1), ('tau_a', float('nan')),
    ])
    def test_out_of_range(self, field, value):
        with pytest.raises(ConfigError, match=field):
            build_model(MonitorConfig, {field: value})

    def test_zero_entropy_threshold_is_allowed(self):
        assert build_model(MonitorConfig, {'tau_h': 0.0}).tau_h == 0.0

    def test_unknown_field(self):
        with pytest.raises(ConfigError, match='tau_x'):
            build_model(MonitorConfig, {'tau_x': 1.0})

    def test_frozen(self):
        with pytest.raises(Exception):
            MonitorConfig().tau_h = 0.5

    def test_with_ablations(self):
        cfg = MonitorConfig().with_ablations(['entropy_check', 'calibration_adjustment'])
        assert not cfg.entropy_check and not cfg.calibration_adjustment
        assert cfg.artifact_check
        assert cfg.effective_alpha == 1.0

    def test_with_unknown_ablation(self):
        with pytest.raises(ConfigError, match="Invalid ablation 'speed_check'"):
            MonitorConfig().with_ablations(['speed_check'])

    def test_with_overrides(self):
        cfg = MonitorConfig().with_overrides(tau_h=0.5, tau_a=None)
        assert cfg.tau_h == 0.5 and cfg.tau_a == 2.5
        with pytest.raises(ConfigError):
            MonitorConfig().with_overrides(k_frames=0)


class TestTaskContext:
    """Context parsing."""

    def test_from_string(self):
        ctx = TaskContext.from_string('robot=r1, item=vase,location=shelf')
        assert (ctx.robot, ctx.item, ctx.location, ctx.orientation) == ('r1', 'vase', 'shelf', None)

    def test_bad_entry(self):
        with pytest.raises(ConfigError, match="Invalid context entry 'item'"):
            TaskContext.from_string('robot=r1,item')

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            TaskContext.from_string('colour=red')

    def test_default(self):
        assert TaskContext.default() == TaskContext(robot='r1', item='cup', location='table', orientation='north')


class TestSyntheticDecoderModel:
    """Accuracy curve and error-mode validation."""

    def test_accuracy_curve(self):
        model = SyntheticDecoderModel()
        assert model.accuracy(20.0) == pytest.approx(0.7)
        assert model.accuracy(30.0) == pytest.approx(0.7)
        assert model.accuracy(10.0) == pytest.approx(0.475)
        assert model.accuracy(-5.0) == 0.25

    def test_error_confidence(self):
        # (0.825 - 0.7 * 0.92) / 0.3
        assert SyntheticDecoderModel().error_confidence == pytest.approx(0.60333, abs=1e-4)

    def test_shares_must_sum_to_one(self):
        with pytest.raises(ConfigError, match='sum to 1'):
            build_model(SyntheticDecoderModel, {'error_modes': {'diffuse': 0.5, 'artifact': 0.2}})

    def test_unknown_mode(self):
        with pytest.raises(ConfigError, match="Invalid error mode 'drift'"):
            build_model(SyntheticDecoderModel, {'error_modes': {'drift': 1.0}})


class TestScenarioSpec:
    """Scenario validation and YAML loading."""

    def test_bundled_default(self):
        spec = load_scenario(SCENARIOS / 'default.yaml')
        assert (spec.trials, spec.snr_bins, spec.repetitions, spec.seed) == (5000, 5, 3, 42)
        assert spec.decoder.error_modes['infeasible'] == 0.25
        assert spec.config == MonitorConfig()

    def test_bundled_bench(self):
        spec = load_scenario(SCENARIOS / 'bench.yaml')
        assert not spec.include_eeg
        assert spec.bench_steps == 100000

    def test_monitor_config_applies_ablations(self):
        spec = ScenarioSpec(ablations=['logical_check'])
        assert not spec.monitor_config().logical_check

    def test_bins_exceed_trials(self):
        with pytest.raises(ConfigError, match='exceeds trials'):
            build_model(ScenarioSpec, {'trials': 3, 'snr_bins': 5})

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputFileError, match='not found'):
            load_scenario(tmp_path / 'none.yaml')

    def test_invalid_yaml(self, tmp_path):
        path = tmp_path / 'bad.yaml'
        path.write_text('name: x\ntrials: [1, 2\n')
        with pytest.raises(InputFileError, match='invalid YAML'):
            load_scenario(path)

    def test_not_a_mapping(self, tmp_path):
        path = tmp_path / 'list.yaml'
        path.write_text('- 1\n- 2\n')
        with pytest.raises(InputFileError, match='mapping'):
            load_scenario(path)

    def test_nested_error_names_field(self, tmp_path):
        path = tmp_path / 'bad.yaml'
        path.write_text('config:\n  tau_h: 3.0\n')
        with pytest.raises(ConfigError, match='config.tau_h'):
            load_scenario(path)

    def test_empty_file_gives_defaults(self, tmp_path):
        path = tmp_path / 'empty.yaml'
        path.write_text('')
        assert load_scenario(path) == ScenarioSpec()


class TestPreprocessConfig:
    """Band and crop validation."""

    def test_reversed_band(self):
        with pytest.raises(ConfigError):
            build_model(PreprocessConfig, {'band_hz': [30.0, 8.0]})

    def test_bad_crop(self):
        with pytest.raises(ConfigError):
            build_model(PreprocessConfig, {'crop_s': [6.0, 2.0]})
