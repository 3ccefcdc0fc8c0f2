#!/usr/bin/env python3
"""
Unit-suffixed quantities for scenario files
Converts text such as "7000 km" or "(-80, 90, 0) m" into SI floats
"""

import math
import re
from typing import Dict, List, Tuple

from utils.errors import UnitError

# unit symbol -> (dimension, factor to SI)
UNITS: Dict[str, Tuple[str, float]] = {
    "m": ("length", 1.0),
    "km": ("length", 1.0e3),
    "s": ("time", 1.0),
    "min": ("time", 60.0),
    "h": ("time", 3600.0),
    "kg": ("mass", 1.0),
    "m/s": ("velocity", 1.0),
    "km/s": ("velocity", 1.0e3),
    "N": ("force", 1.0),
    "m^3/s^2": ("gravitational_parameter", 1.0),
    "km^3/s^2": ("gravitational_parameter", 1.0e9),
    "rad": ("angle", 1.0),
    "deg": ("angle", math.pi / 180.0),
    "rad/m": ("angle_per_length", 1.0),
    "deg/m": ("angle_per_length", math.pi / 180.0),
}

DIMENSIONLESS = "dimensionless"

_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_SCALAR_RE = re.compile(rf"^\s*({_NUMBER})\s*([^\s()]*)\s*$")
_VECTOR_RE = re.compile(r"^\s*\(([^()]*)\)\s*([^\s()]*)\s*$")


def _factor(unit: str, dimension: str, key_path: str) -> float:
    if dimension == DIMENSIONLESS:
        if unit:
            raise UnitError(f"expected a plain number, got unit '{unit}'", key_path)
        return 1.0
    if not unit:
        raise UnitError(f"missing unit, expected a {dimension} unit", key_path)
    if unit not in UNITS:
        raise UnitError(f"unknown unit '{unit}'", key_path)
    unit_dimension, factor = UNITS[unit]
    if unit_dimension != dimension:
        raise UnitError(f"unit '{unit}' is a {unit_dimension}, expected {dimension}", key_path)
    return factor


def parse_quantity(text: str, dimension: str, key_path: str = "") -> float:
    """Parse '<number> <unit>' into an SI float"""
    match = _SCALAR_RE.match(text)
    if not match:
        raise UnitError(f"cannot read quantity '{text.strip()}'", key_path)
    return float(match.group(1)) * _factor(match.group(2), dimension, key_path)


def parse_quantity_list(text: str, dimension: str, key_path: str = "") -> List[float]:
    """Comma separated scalars; a trailing unit applies to every item without one"""
    items = [item.strip() for item in text.split(",") if item.strip()]
    if not items:
        raise UnitError("empty list", key_path)
    last = _SCALAR_RE.match(items[-1])
    shared_unit = last.group(2) if last else ""
    values = []
    for item in items:
        match = _SCALAR_RE.match(item)
        if not match:
            raise UnitError(f"cannot read quantity '{item}'", key_path)
        unit = match.group(2) or shared_unit
        values.append(float(match.group(1)) * _factor(unit, dimension, key_path))
    return values


def parse_vector(text: str, dimension: str, key_path: str = "") -> Tuple[float, ...]:
    """Parse '(x, y, z) <unit>' into an SI tuple"""
    match = _VECTOR_RE.match(text)
    if not match:
        raise UnitError(f"cannot read vector '{text.strip()}'", key_path)
    factor = _factor(match.group(2), dimension, key_path)
    try:
        components = [float(part) for part in match.group(1).split(",")]
    except ValueError as e:
        raise UnitError(f"bad vector component in '{text.strip()}': {e}", key_path) from e
    return tuple(component * factor for component in components)


def parse_vector_list(text: str, dimension: str, key_path: str = "") -> List[Tuple[float, ...]]:
    """Semicolon separated vectors; a unit after the last vector applies to all"""
    items = [item.strip() for item in text.split(";") if item.strip()]
    if not items:
        raise UnitError("empty vector list", key_path)
    tail = _VECTOR_RE.match(items[-1])
    shared_unit = tail.group(2) if tail else ""
    vectors = []
    for item in items:
        match = _VECTOR_RE.match(item)
        if match and not match.group(2) and shared_unit:
            item = f"{item} {shared_unit}"
        vectors.append(parse_vector(item, dimension, key_path))
    return vectors
