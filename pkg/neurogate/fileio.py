"""
File formats: PDDL assets, raw EEG matrices, posterior streams and
line-delimited JSON results.

Raw EEG comes as CSV (a '# channels=C samples=T sample_rate_hz=F' header,
then one comma-separated row per channel) or as flat little-endian binary
('NGEEG1' magic, uint32 C, uint32 T, float64 rate, float64 samples
row-major). Posterior streams are CSV rows
'frame,p_grasp,p_release,p_move_to,p_rotate[,label]' with '#' comments.
"""

import json
import logging
import struct
from importlib import resources
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .constants import ACTIONS, DEFAULT_DOMAIN_ASSET, DEFAULT_PROBLEM_ASSET, POSTERIOR_COLUMNS
from .errors import InputFileError, NeurogateError
from .monitor import Frame
from .pddl import DomainDef, ProblemDef, parse_domain, parse_problem
from .signals import RawEeg

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

EEG_MAGIC = b'NGEEG1'
_EEG_HEADER = struct.Struct('<IId')


def _read_text(path: PathLike, what: str) -> str:
    file_path = Path(path)
    if not file_path.is_file():
        raise InputFileError(f"{what} file not found", path=str(path))
    return file_path.read_text(encoding='utf-8')


# ============================================================================
# PDDL
# ============================================================================

def _asset_text(name: str) -> str:
    return resources.files(__package__).joinpath('assets', name).read_text(encoding='utf-8')


def read_domain(path: Optional[PathLike] = None) -> DomainDef:
    """Parse a domain file, or the bundled assistive-robot domain when path is None."""
    text = _asset_text(DEFAULT_DOMAIN_ASSET) if path is None else _read_text(path, 'domain')
    try:
        domain = parse_domain(text)
    except NeurogateError as e:
        raise InputFileError(str(e), path=str(path or DEFAULT_DOMAIN_ASSET)) from None
    logger.debug(f"Loaded domain '{domain.name}' ({len(domain.actions)} actions)")
    return domain


def read_problem(domain: DomainDef, path: Optional[PathLike] = None) -> ProblemDef:
    """Parse a problem file, or the bundled tabletop problem when path is None."""
    text = _asset_text(DEFAULT_PROBLEM_ASSET) if path is None else _read_text(path, 'problem')
    try:
        return parse_problem(text, domain)
    except NeurogateError as e:
        raise InputFileError(str(e), path=str(path or DEFAULT_PROBLEM_ASSET)) from None


# ============================================================================
# RAW EEG
# ============================================================================

def read_raw_eeg(path: PathLike) -> RawEeg:
    """Read a raw recording; '.csv' selects the text format, anything else binary."""
    file_path = Path(path)
    if file_path.suffix.lower() == '.csv':
        return _read_eeg_csv(file_path)
    if not file_path.is_file():
        raise InputFileError('signal file not found', path=str(path))
    data = file_path.read_bytes()
    if not data.startswith(EEG_MAGIC):
        raise InputFileError('not an NGEEG1 signal file', path=str(path))
    offset = len(EEG_MAGIC)
    if len(data) < offset + _EEG_HEADER.size:
        raise InputFileError('truncated header', path=str(path))
    channels, samples, rate = _EEG_HEADER.unpack_from(data, offset)
    offset += _EEG_HEADER.size
    expected = channels * samples * 8
    if len(data) - offset != expected:
        raise InputFileError(f"expected {expected} sample bytes, found {len(data) - offset}", path=str(path))
    matrix = np.frombuffer(data, dtype='<f8', offset=offset).reshape(channels, samples)
    try:
        return RawEeg(matrix, rate)
    except NeurogateError as e:
        raise InputFileError(str(e), path=str(path)) from None


def _read_eeg_csv(path: Path) -> RawEeg:
    lines = _read_text(path, 'signal').splitlines()
    meta: Dict[str, str] = {}
    rows: List[np.ndarray] = []
    for number, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith('#'):
            for part in stripped.lstrip('#').split():
                key, _, value = part.partition('=')
                meta[key] = value
            continue
        try:
            rows.append(np.array([float(v) for v in stripped.split(',')]))
        except ValueError:
            raise InputFileError('non-numeric sample value', path=str(path), line=number) from None
        if rows[-1].size != rows[0].size:
            raise InputFileError(f"row has {rows[-1].size} samples, expected {rows[0].size}",
                                 path=str(path), line=number)
    if 'sample_rate_hz' not in meta:
        raise InputFileError("header lacks 'sample_rate_hz'", path=str(path), line=1)
    if not rows:
        raise InputFileError('no sample rows', path=str(path))
    matrix = np.vstack(rows)
    if 'channels' in meta and int(meta['channels']) != matrix.shape[0]:
        raise InputFileError(f"header declares {meta['channels']} channels, found {matrix.shape[0]}", path=str(path))
    if 'samples' in meta and int(meta['samples']) != matrix.shape[1]:
        raise InputFileError(f"header declares {meta['samples']} samples, found {matrix.shape[1]}", path=str(path))
    try:
        return RawEeg(matrix, float(meta['sample_rate_hz']))
    except (NeurogateError, ValueError) as e:
        raise InputFileError(str(e), path=str(path)) from None


def write_raw_eeg(raw: RawEeg, path: PathLike) -> None:
    file_path = Path(path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    if file_path.suffix.lower() == '.csv':
        with file_path.open('w', encoding='utf-8') as f:
            f.write(f"# channels={raw.n_channels} samples={raw.n_samples} sample_rate_hz={raw.sample_rate_hz!r}\n")
            for row in raw.samples:
                f.write(','.join(repr(float(v)) for v in row) + '\n')
        return
    header = EEG_MAGIC + _EEG_HEADER.pack(raw.n_channels, raw.n_samples, raw.sample_rate_hz)
    file_path.write_bytes(header + raw.samples.astype('<f8').tobytes())


# ============================================================================
# POSTERIOR STREAMS
# ============================================================================

def _rows(path: PathLike) -> Iterable[Tuple[int, List[str]]]:
    for number, line in enumerate(_read_text(path, 'posterior').splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith('#') or stripped.lower().startswith('frame'):
            continue
        yield number, [cell.strip() for cell in stripped.split(',')]


def _parse_row(cells: List[str]) -> Tuple[int, List[float], Optional[str]]:
    if len(cells) not in (5, 6):
        raise ValueError(f"expected 5 or 6 columns, found {len(cells)}")
    index = int(cells[0])
    probs = [float(v) for v in cells[1:5]]
    label = cells[5].upper().replace('-', '_') if len(cells) == 6 and cells[5] else None
    if label is not None and label not in ACTIONS:
        raise ValueError(f"Invalid action '{cells[5]}'. Valid options: {list(ACTIONS)}")
    return index, probs, label


def read_posterior_stream(path: PathLike) -> List[Frame]:
    """
    Read a posterior stream into monitor frames.

    Malformed lines become frames carrying an error (rejected by the session)
    with the line number in the reason.
    """
    frames: List[Frame] = []
    for number, cells in _rows(path):
        try:
            index, probs, label = _parse_row(cells)
        except ValueError as e:
            fallback = frames[-1].index if frames else -1
            frames.append(Frame(index=fallback, probs=(), error=f"{path}:{number}: {e}"))
            continue
        frames.append(Frame(index=index, probs=probs, true_label=label))
    logger.info(f"Read {len(frames)} frames from {path}")
    return frames


def write_posterior_stream(path: PathLike, rows: Iterable[Tuple[int, Sequence[float], Optional[str]]]) -> int:
    """Write (frame, probs, label) rows; returns the number written."""
    file_path = Path(path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with file_path.open('w', encoding='utf-8') as f:
        f.write(','.join(('frame',) + POSTERIOR_COLUMNS + ('label',)) + '\n')
        for index, probs, label in rows:
            f.write(f"{index}," + ','.join(repr(float(p)) for p in probs) + f",{label or ''}\n")
            count += 1
    return count


def read_labeled_posteriors(path: PathLike) -> Tuple[np.ndarray, List[str]]:
    """
    Read a posterior stream whose rows all carry labels.

    Returns:
        (n x 4 probability matrix, true labels)

    Raises:
        InputFileError: On the first malformed or unlabeled line
    """
    probs: List[List[float]] = []
    labels: List[str] = []
    for number, cells in _rows(path):
        try:
            _, row, label = _parse_row(cells)
        except ValueError as e:
            raise InputFileError(str(e), path=str(path), line=number) from None
        if label is None:
            raise InputFileError('row has no label', path=str(path), line=number)
        values = np.asarray(row)
        if np.any(values < 0) or not np.all(np.isfinite(values)) or abs(values.sum() - 1.0) > 1e-6:
            raise InputFileError(f"row is not a probability vector: {row}", path=str(path), line=number)
        probs.append(row)
        labels.append(label)
    if not probs:
        raise InputFileError('no prediction rows', path=str(path))
    return np.asarray(probs, dtype=np.float64), labels


# ============================================================================
# RESULTS
# ============================================================================

def write_jsonl(path: PathLike, rows: Iterable[Dict[str, Any]]) -> int:
    file_path = Path(path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with file_path.open('w', encoding='utf-8') as f:
        for row in rows:
            f.write(json.dumps(row, sort_keys=True) + '\n')
            count += 1
    logger.info(f"Wrote {count} result rows to {path}")
    return count
