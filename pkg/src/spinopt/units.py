"""dB/linear conversions.

All internal math works on linear power ratios with noise power normalized
to 1; decibels appear only in configuration values and reports.
"""

import math


def db_to_linear(x_db: float) -> float:
    """Convert a dB value to a linear power ratio."""
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    """Convert a linear power ratio to dB. Requires x > 0."""
    if x <= 0.0:
        raise ValueError(f"cannot express non-positive ratio {x} in dB")
    return 10.0 * math.log10(x)
