"""
Input resolution utilities for run configuration

This module turns the human-friendly values accepted in config files and on
the command line into numbers:
- Angles with a `pi` literal ("pi/6", "-pi/2", "2*pi/3")
- Energies in units of the model scales ("0.86*xi0", "0.1xi_so", "-xi0")
- Millisecond time lists into seconds
"""

import math
import re

_EXPR = re.compile(
    r"""^\s*
    (?P<sign>[+-])?\s*
    (?P<coef>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)?\s*
    \*?\s*
    (?P<unit>pi|xi0|xi_so)?\s*
    (?:/\s*(?P<den>\d+(?:\.\d*)?))?
    \s*$""",
    re.VERBOSE,
)


def _parse_scaled(text: str, units: dict[str, float], what: str) -> float:
    match = _EXPR.match(text)
    if match is None or (match.group("coef") is None and match.group("unit") is None):
        raise ValueError(f"Cannot parse {what} expression: {text!r}")

    unit = match.group("unit")
    if unit is not None and unit not in units:
        raise ValueError(f"Unit '{unit}' is not allowed in {what} expression {text!r}")

    value = float(match.group("coef")) if match.group("coef") is not None else 1.0
    if unit is not None:
        value *= units[unit]
    if match.group("den") is not None:
        denominator = float(match.group("den"))
        if denominator == 0:
            raise ValueError(f"Division by zero in {what} expression {text!r}")
        value /= denominator
    if match.group("sign") == "-":
        value = -value

    if not math.isfinite(value):
        raise ValueError(f"{what.capitalize()} expression {text!r} is not finite")
    return value


def parse_angle(value: float | int | str) -> float:
    """
    Resolve an angle given as a number or a `pi` expression.

    Args:
        value: Radians as a number, or a string such as "pi/6"

    Returns:
        Angle in radians

    Examples:
        >>> parse_angle("pi/6")
        0.5235987755982988

        >>> parse_angle("-2*pi/3")
        -2.0943951023931953
    """
    if isinstance(value, bool):
        raise ValueError("Angle cannot be a boolean")
    if isinstance(value, (int, float)):
        return float(value)
    return _parse_scaled(value, {"pi": math.pi}, "angle")


def parse_energy(value: float | int | str, xi0: float, xi_so: float) -> float:
    """
    Resolve an energy given in rad/s or in units of xi0 / xi_so.

    Examples:
        >>> parse_energy("0.86*xi0", 1600.0, 400.0)
        1376.0

        >>> parse_energy("-xi0", 1600.0, 400.0)
        -1600.0
    """
    if isinstance(value, bool):
        raise ValueError("Energy cannot be a boolean")
    if isinstance(value, (int, float)):
        return float(value)
    return _parse_scaled(value, {"xi0": xi0, "xi_so": xi_so}, "energy")


def ms_to_seconds(values_ms: list[float] | tuple[float, ...]) -> tuple[float, ...]:
    """Convert milliseconds to seconds, rounding off binary noise at 1e-12 s."""
    return tuple(round(v * 1e-3, 12) for v in values_ms)
