"""
Tests for the trace file writer and reader.
"""

import json

import pytest

from neurogate.config import MonitorConfig, TaskContext
from neurogate.errors import TraceFormatError
from neurogate.fileio import read_domain, read_problem
from neurogate.monitor import make_header
from neurogate.planner import WorldState
from neurogate.trace import RejectedRecord, TraceRecord, TraceWriter, domain_fingerprint, read_trace, record_fields

DOMAIN = read_domain()
STATE = WorldState.from_problem(read_problem(DOMAIN))


def record(frame, verdict='HALT', cause='WARMUP'):
    return TraceRecord(
        frame=frame,
        timestamp=frame / 100,
        raw_posterior=[0.7, 0.1, 0.1, 0.1],
        calibrated=[0.61, 0.13, 0.13, 0.13],
        entropy=0.8,
        oscillation=0.0,
        argmax='GRASP',
        max_prob=0.61,
        verdict=verdict,
        cause=cause,
        context=TaskContext.default(),
    )


@pytest.fixture
def header():
    return make_header(MonitorConfig(tau_h=0.6), DOMAIN, STATE, seed=9)


class TestTraceWriter:
    """Background writer thread."""

    def test_header_then_records(self, tmp_path, header):
        path = tmp_path / 'nested' / 'trace.jsonl'
        with TraceWriter(path, header, maxsize=2) as writer:
            for k in range(50):
                writer.write(record(k))
            writer.write(RejectedRecord(frame=50, reason='bad row'))
        lines = path.read_text().splitlines()
        assert len(lines) == 52
        assert json.loads(lines[0])['kind'] == 'header'
        assert [json.loads(line)['frame'] for line in lines[1:]] == list(range(51))
        assert writer.written == 51

    def test_close_twice(self, tmp_path, header):
        writer = TraceWriter(tmp_path / 't.jsonl', header)
        writer.open()
        writer.close()
        writer.close()


class TestReadTrace:
    """Decoding and error reporting."""

    def test_round_trip(self, tmp_path, header):
        path = tmp_path / 'trace.jsonl'
        with TraceWriter(path, header) as writer:
            writer.write(record(0))
            writer.write(RejectedRecord(frame=1, reason='bad row'))
            writer.write(record(2, 'EXECUTE', 'NONE'))
        loaded, records, rejected = read_trace(path)
        assert loaded == header
        assert loaded.config.tau_h == 0.6
        assert records == [record(0), record(2, 'EXECUTE', 'NONE')]
        assert rejected == [RejectedRecord(frame=1, reason='bad row')]

    def test_missing(self, tmp_path):
        with pytest.raises(TraceFormatError, match='not found'):
            read_trace(tmp_path / 'absent.jsonl')

    def test_empty(self, tmp_path):
        path = tmp_path / 'empty.jsonl'
        path.write_text('')
        with pytest.raises(TraceFormatError, match='empty'):
            read_trace(path)

    def test_bad_header(self, tmp_path):
        path = tmp_path / 'bad.jsonl'
        path.write_text(record(0).model_dump_json() + '\n')
        with pytest.raises(TraceFormatError, match='invalid header') as info:
            read_trace(path)
        assert info.value.line == 1

    def test_bad_record_reports_line(self, tmp_path, header):
        path = tmp_path / 'bad.jsonl'
        broken = record(1).model_dump(mode='json')
        del broken['entropy']
        path.write_text('\n'.join([header.model_dump_json(), record(0).model_dump_json(), json.dumps(broken)]))
        with pytest.raises(TraceFormatError, match='entropy') as info:
            read_trace(path)
        assert info.value.line == 3
        assert str(path) in str(info.value)

    def test_unsupported_version(self, tmp_path, header):
        path = tmp_path / 'v2.jsonl'
        path.write_text(header.model_copy(update={'version': 2}).model_dump_json() + '\n')
        with pytest.raises(TraceFormatError, match='unsupported trace version 2'):
            read_trace(path)


class TestHelpers:
    """Fingerprint and field selection."""

    def test_fingerprint_is_stable(self):
        assert domain_fingerprint(DOMAIN) == domain_fingerprint(read_domain())
        assert len(domain_fingerprint(DOMAIN)) == 64

    def test_record_fields(self):
        fields = record_fields(record(4), ('frame', 'verdict', 'context'))
        assert fields == {'frame': 4, 'verdict': 'HALT', 'context': TaskContext.default().model_dump()}
