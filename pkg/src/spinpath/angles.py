"""Small angle helpers shared across the package.

All angles are radians. The canonical interval is [0, 2*pi); comparisons are
circular so that values just below 2*pi match 0.
"""

from __future__ import annotations

import math

from .errors import DomainError

TWO_PI = 2.0 * math.pi


def canonical_angle(value: float) -> float:
    """Map an angle onto [0, 2*pi), rejecting non-finite input."""
    value = float(value)
    if not math.isfinite(value):
        raise DomainError(f"angle must be finite, got {value!r}")
    out = math.fmod(value, TWO_PI)
    if out < 0.0:
        out += TWO_PI
    if out >= TWO_PI:  # fmod can land exactly on the boundary
        out -= TWO_PI
    return out


def circular_distance(a: float, b: float) -> float:
    """Shortest distance between two angles around the circle."""
    d = abs(canonical_angle(a) - canonical_angle(b))
    return min(d, TWO_PI - d)


def angles_close(a: float, b: float, tol: float = 1e-9) -> bool:
    return circular_distance(a, b) <= tol
