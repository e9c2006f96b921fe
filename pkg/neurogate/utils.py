"""
Utility functions for neurogate.

Includes fuzzy name resolution for ablations, presets and objectives, and
parsers for command-line grid and weight values.
"""

import logging
import difflib
import secrets
from typing import Iterable, List, Optional, Tuple

import numpy as np

from .constants import ABLATION_TOGGLES, ALPHA_M_PRESETS, OBJECTIVE_PRESETS
from .errors import ConfigError

logger = logging.getLogger(__name__)


def resolve_name(name: str, valid: Iterable[str], what: str = 'name') -> str:
    """
    Resolve a user-supplied name against a closed set.

    Tries an exact (case-insensitive, '-' == '_') match first, then fuzzy
    matching.

    Args:
        name: Name to resolve
        valid: Valid names
        what: Noun used in messages

    Returns:
        The matching valid name

    Raises:
        ConfigError: If nothing matches closely enough
    """
    options = list(valid)
    key = name.strip().lower().replace('-', '_').replace(' ', '_')
    for option in options:
        if option.lower().replace(' ', '_') == key:
            return option

    matches = difflib.get_close_matches(key, options, n=1, cutoff=0.6)
    if matches:
        logger.info(f"Fuzzy matched {what} '{name}' to '{matches[0]}'")
        return matches[0]

    raise ConfigError(f"Invalid {what} '{name}'. Valid options: {options}")


def resolve_ablations(text: Optional[str]) -> List[str]:
    """
    Parse a comma-separated ablation list into check toggle names.

    Accepts toggle names ('entropy_check'), short forms ('entropy') and
    table labels ('No Entropy Check').
    """
    if not text:
        return []
    aliases = {}
    for toggle, label in ABLATION_TOGGLES.items():
        aliases[toggle] = toggle
        aliases[toggle.replace('_check', '')] = toggle
        aliases[label.lower().replace(' ', '_')] = toggle
    resolved = []
    for part in filter(None, (p.strip() for p in text.split(','))):
        toggle = aliases[resolve_name(part, aliases, 'ablation')]
        if toggle not in resolved:
            resolved.append(toggle)
    return resolved


def resolve_alpha(value: str) -> float:
    """Mixing weight from a number or a decoder preset name ('eegnet', 'riemannian', ...)."""
    try:
        return float(value)
    except ValueError:
        return ALPHA_M_PRESETS[resolve_name(value, ALPHA_M_PRESETS, 'decoder preset')]


def parse_grid(text: str) -> List[float]:
    """
    Threshold grid from 'start:stop:step' (inclusive) or a comma list.

    Examples:
        '0.1:1.0:0.1' -> [0.1, 0.2, ..., 1.0]
        '0.5,0.75,0.9' -> [0.5, 0.75, 0.9]
    """
    try:
        if ':' not in text:
            return [float(v) for v in text.split(',') if v.strip()]
        start, stop, step = (float(v) for v in text.split(':'))
    except ValueError:
        raise ConfigError(f"Invalid grid '{text}'. Expected start:stop:step or a comma list") from None
    if step <= 0:
        raise ConfigError(f"grid step must be positive, got {step}")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, 10) for k in range(max(count, 0))]


def parse_weights(text: str) -> Tuple[float, float, float]:
    """Objective weights from 'a,b,c' or a preset name ('balanced', 'safety_first', ...)."""
    parts = [p.strip() for p in text.split(',')]
    if len(parts) == 1:
        return OBJECTIVE_PRESETS[resolve_name(parts[0], OBJECTIVE_PRESETS, 'objective')]
    if len(parts) != 3:
        raise ConfigError(f"Invalid weights '{text}'. Expected a,b,c or one of {list(OBJECTIVE_PRESETS)}")
    try:
        weights = tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"Invalid weights '{text}'. Values must be numbers") from None
    if any(w < 0 for w in weights):
        raise ConfigError(f"Invalid weights '{text}'. Values must be nonnegative")
    return weights


def choose_seed(seed: Optional[int]) -> Tuple[int, bool]:
    """Return (seed, was_chosen); draws a fresh 32-bit seed when none is given."""
    if seed is not None:
        return seed, False
    return secrets.randbits(32), True
