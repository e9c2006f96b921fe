"""
Audit trace records and the line-delimited JSON trace file.

A trace file starts with one header line (format version, monitor config,
domain fingerprint, initial world state) followed by one record per frame.
Records are written by a background thread fed through a bounded queue:
when the queue is full the producing session blocks, so nothing is dropped.
"""

import hashlib
import logging
import queue
import threading
from pathlib import Path
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError

from .config import MonitorConfig, TaskContext
from .constants import TRACE_QUEUE_SIZE, TRACE_VERSION
from .errors import TraceFormatError
from .pddl import DomainDef, format_domain

logger = logging.getLogger(__name__)


class _Record(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid')


class TraceHeader(_Record):
    kind: Literal['header'] = 'header'
    version: int = TRACE_VERSION
    config: MonitorConfig
    domain_name: str
    domain_sha256: str
    objects: List[Tuple[str, str]]
    initial_state: List[List[str]]
    seed: Optional[int] = None


class TraceRecord(_Record):
    """Everything needed to audit and replay one monitor step."""

    kind: Literal['frame'] = 'frame'
    frame: int
    timestamp: float
    raw_posterior: List[float]
    calibrated: List[float]
    entropy: float
    artifact: Optional[float] = None
    oscillation: float
    argmax: str
    max_prob: float
    verdict: str
    cause: str
    action: Optional[str] = None
    plan: Optional[List[str]] = None
    budget_exceeded: bool = False
    violations: List[str] = Field(default_factory=list)
    context: TaskContext
    true_label: Optional[str] = None
    latency_us: float = 0.0


class RejectedRecord(_Record):
    """Input frame the session could not process."""

    kind: Literal['rejected'] = 'rejected'
    frame: Optional[int] = None
    reason: str


TraceLine = Union[TraceRecord, RejectedRecord]

_LINE_ADAPTER = TypeAdapter(Annotated[TraceLine, Field(discriminator='kind')])


def domain_fingerprint(domain: DomainDef) -> str:
    """sha256 of the canonical printed domain."""
    return hashlib.sha256(format_domain(domain).encode('utf-8')).hexdigest()


# ============================================================================
# WRITING
# ============================================================================

class TraceWriter:
    """
    Append-only trace file fed by a background writer thread.

    Usage:
        with TraceWriter(path, header) as writer:
            writer.write(record)
    """

    _STOP = object()

    def __init__(self, path: Union[str, Path], header: TraceHeader, maxsize: int = TRACE_QUEUE_SIZE):
        self.path = Path(path)
        self.header = header
        self._queue: 'queue.Queue[Any]' = queue.Queue(maxsize=maxsize)
        self._thread = threading.Thread(target=self._run, name='trace-writer', daemon=True)
        self._error: Optional[BaseException] = None
        self._handle = None
        self.written = 0

    def __enter__(self) -> 'TraceWriter':
        self.open()
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        self.close()

    def open(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._handle = self.path.open('w', encoding='utf-8')
        self._handle.write(self.header.model_dump_json() + '\n')
        self._thread.start()

    def write(self, record: TraceLine) -> None:
        """Queue a record; blocks while the queue is full."""
        if self._error is not None:
            raise self._error
        self._queue.put(record)

    def close(self) -> None:
        """Flush queued records and close the file."""
        if self._handle is None:
            return
        self._queue.put(self._STOP)
        self._thread.join()
        self._handle.close()
        self._handle = None
        logger.info(f"Wrote {self.written} trace records to {self.path}")
        if self._error is not None:
            raise self._error

    def _run(self) -> None:
        while True:
            item = self._queue.get()
            if item is self._STOP:
                break
            try:
                self._handle.write(item.model_dump_json() + '\n')
                self.written += 1
            except Exception as e:  # surfaced to the producer on next write/close
                self._error = e
        self._handle.flush()


# ============================================================================
# READING
# ============================================================================

def read_trace(path: Union[str, Path]) -> Tuple[TraceHeader, List[TraceRecord], List[RejectedRecord]]:
    """
    Load a trace file.

    Returns:
        (header, frame records, rejected records)

    Raises:
        TraceFormatError: Missing file, bad header or undecodable line
    """
    file_path = Path(path)
    if not file_path.is_file():
        raise TraceFormatError('trace file not found', path=str(path))
    lines = file_path.read_text(encoding='utf-8').splitlines()
    if not lines:
        raise TraceFormatError('trace file is empty', path=str(path))
    try:
        header = TraceHeader.model_validate_json(lines[0])
    except ValidationError as e:
        raise TraceFormatError(f"invalid header: {e.errors()[0]['msg']}", path=str(path), line=1) from None
    if header.version != TRACE_VERSION:
        raise TraceFormatError(f"unsupported trace version {header.version}", path=str(path), line=1)

    records: List[TraceRecord] = []
    rejected: List[RejectedRecord] = []
    for number, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            item = _LINE_ADAPTER.validate_json(line)
        except ValidationError as e:
            err = e.errors()[0]
            where = '.'.join(str(p) for p in err['loc'])
            raise TraceFormatError(f"invalid record ({where}): {err['msg']}", path=str(path), line=number) from None
        (rejected if isinstance(item, RejectedRecord) else records).append(item)
    logger.debug(f"Read {len(records)} records and {len(rejected)} rejected frames from {path}")
    return header, records, rejected


def record_fields(record: TraceRecord, names) -> Dict[str, Any]:
    """Subset of a record's fields, as dumped to JSON."""
    data = record.model_dump(mode='json')
    return {name: data[name] for name in names}
