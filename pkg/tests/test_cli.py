"""
Tests for the command-line entry point.
"""

import json

import pytest

from neurogate.cli import main
from neurogate.constants import EXIT_INPUT_ERROR, EXIT_OK, EXIT_VERIFY_FAILED


@pytest.fixture
def stream(tmp_path):
    path = tmp_path / 'stream.csv'
    assert main(['generate', '--seed', '42', '--trials', '10', '--out', str(path), '-q']) == EXIT_OK
    return path


@pytest.fixture
def small_scenario(tmp_path):
    path = tmp_path / 'small.yaml'
    path.write_text('name: small\ntrials: 50\nrepetitions: 2\ninclude_eeg: false\nseed: 3\n')
    return path


def read_rows(path):
    return [json.loads(line) for line in path.read_text().splitlines()]


class TestGenerate:
    """Synthetic stream generation."""

    def test_writes_frames(self, stream, capsys):
        lines = stream.read_text().splitlines()
        data = [line for line in lines if line and not line.startswith('#') and not line.startswith('frame')]
        assert len(data) == 100

    def test_needs_out(self, capsys):
        assert main(['generate', '--seed', '1']) == EXIT_INPUT_ERROR
        assert 'needs --out' in capsys.readouterr().err

    def test_unseeded_prints_seed(self, tmp_path, capsys):
        assert main(['generate', '--trials', '5', '--out', str(tmp_path / 's.csv'), '-q']) == EXIT_OK
        assert 'No seed given; using seed' in capsys.readouterr().out


class TestMonitorAndReplay:
    """Gating a stream, then auditing its trace."""

    def test_monitor_writes_trace(self, stream, tmp_path, capsys):
        trace = tmp_path / 'trace.jsonl'
        code = main(['monitor', '--posteriors', str(stream), '--trace-out', str(trace), '-q'])
        assert code == EXIT_OK
        rows = read_rows(trace)
        assert rows[0]['kind'] == 'header'
        assert sum(1 for r in rows if r['kind'] == 'frame') == 100
        out = capsys.readouterr().out
        assert 'MONITOR SESSION' in out and 'Safety rate' in out

    def test_zero_entropy_threshold_halts_everything(self, stream, tmp_path):
        trace = tmp_path / 'trace.jsonl'
        code = main(['monitor', '--posteriors', str(stream), '--trace-out', str(trace), '--tau-h', '0.0', '-q'])
        assert code == EXIT_OK
        frames = [r for r in read_rows(trace) if r['kind'] == 'frame']
        assert frames and all(r['verdict'] == 'HALT' for r in frames)

    def test_replay_matches(self, stream, tmp_path, capsys):
        trace = tmp_path / 'trace.jsonl'
        main(['monitor', '--posteriors', str(stream), '--trace-out', str(trace), '-q'])
        assert main(['replay-verify', str(trace), '-q']) == EXIT_OK
        assert 'MATCH' in capsys.readouterr().out

    def test_replay_detects_tampering(self, stream, tmp_path, capsys):
        trace = tmp_path / 'trace.jsonl'
        main(['monitor', '--posteriors', str(stream), '--trace-out', str(trace), '-q'])
        lines = trace.read_text().splitlines()
        record = json.loads(lines[20])
        record['verdict'] = 'EXECUTE' if record['verdict'] == 'HALT' else 'HALT'
        lines[20] = json.dumps(record)
        trace.write_text('\n'.join(lines) + '\n')
        assert main(['replay-verify', str(trace), '-q']) == EXIT_VERIFY_FAILED
        assert 'DIVERGED' in capsys.readouterr().out

    def test_missing_domain_is_input_error(self, stream, tmp_path, capsys):
        missing = tmp_path / 'missing.pddl'
        code = main(['monitor', '--posteriors', str(stream), '--domain', str(missing), '-q'])
        assert code == EXIT_INPUT_ERROR
        assert str(missing) in capsys.readouterr().err

    def test_bad_threshold_is_input_error(self, stream, capsys):
        assert main(['monitor', '--posteriors', str(stream), '--tau-h', '2.0', '-q']) == EXIT_INPUT_ERROR
        assert 'tau_h' in capsys.readouterr().err

    def test_help_states_posteriors_are_required(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(['monitor', '--help'])
        assert exc.value.code == 0
        text = ' '.join(capsys.readouterr().out.split())
        assert 'required: an EEG recording alone carries no decoder output' in text
        assert 'adds the artifact check' in text

    def test_signal_without_posteriors_is_usage_error(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as exc:
            main(['monitor', '--signal', str(tmp_path / 'session.csv')])
        assert exc.value.code == 2
        assert '--posteriors' in capsys.readouterr().err


class TestOfflineCommands:
    """Calibration, sweeps and experiments."""

    def test_calibrate(self, stream, tmp_path, capsys):
        out = tmp_path / 'cal.jsonl'
        code = main(['calibrate', str(stream), '--bins', '5', '--temperature', '--out', str(out), '-q'])
        assert code == EXIT_OK
        rows = read_rows(out)
        assert rows[0]['kind'] == 'calibration' and 'temperature' in rows[0]
        assert [r['kind'] for r in rows[1:]] == ['reliability_bin'] * 5

    def test_sweep(self, stream, tmp_path):
        out = tmp_path / 'sweep.jsonl'
        assert main(['sweep', str(stream), '--grid', '0.1:1.0:0.1', '--weights', 'balanced',
                     '--out', str(out), '-q']) == EXIT_OK
        rows = read_rows(out)
        points = [r for r in rows if r['kind'] == 'sweep_point']
        assert len(points) == 10
        assert points[-1]['intervention_rate'] == 1.0
        assert 'custom' in {r['objective'] for r in rows if r['kind'] == 'optimum'}

    def test_noise_test(self, small_scenario, tmp_path):
        out = tmp_path / 'noise.jsonl'
        assert main(['noise-test', '--scenario', str(small_scenario), '--out', str(out), '-q']) == EXIT_OK
        rows = read_rows(out)
        assert rows[0]['kind'] == 'summary'
        assert [r['kind'] for r in rows[1:]] == ['snr_bin'] * 5

    def test_ablate_with_fuzzy_name(self, small_scenario, capsys):
        assert main(['ablate', '--scenario', str(small_scenario), '--ablate', 'entropy', '-q']) == EXIT_OK
        assert 'No Logical Check' in capsys.readouterr().out

    def test_unknown_ablation(self, small_scenario, capsys):
        assert main(['ablate', '--scenario', str(small_scenario), '--ablate', 'warp', '-q']) == EXIT_INPUT_ERROR
        assert "Invalid ablation 'warp'" in capsys.readouterr().err
