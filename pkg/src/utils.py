"""Utility functions shared by the solver, diagnostics and reporting layers"""

import math
from typing import Any, Dict, Mapping


def format_float(value: float) -> str:
    """
    Format a float with the shortest representation that round-trips.

    Golden files depend on this being stable across platforms, so it relies
    on Python's repr (shortest round-trip since 3.1) instead of a fixed
    precision.

    Args:
        value: Number to format

    Returns:
        Decimal string, "inf", "-inf" or "nan"

    Examples:
        >>> format_float(0.1)
        '0.1'
        >>> format_float(1.0)
        '1.0'
    """
    return repr(float(value))


def problem_scale(q0: float) -> float:
    """Scale used by every relative tolerance: max(1, |q(x0)|)"""
    if not math.isfinite(q0):
        return 1.0
    return max(1.0, abs(q0))


def deep_merge(base: Mapping[str, Any], override: Mapping[str, Any]) -> Dict[str, Any]:
    """
    Merge nested dictionaries, values from override winning.

    Args:
        base: Lower-priority mapping (e.g. a config file)
        override: Higher-priority mapping (e.g. command-line flags)

    Returns:
        New merged dictionary; inputs are left untouched
    """
    merged: Dict[str, Any] = dict(base)
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged
