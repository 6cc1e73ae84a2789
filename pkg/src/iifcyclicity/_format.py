"""Deterministic text formatting of exact and float values for reports."""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from .algebra import BiPoly
from .algebra.numbers import ParamPoly, QuadraticNumber

FLOAT_FORMAT = ".12g"


def format_value(v):
    """JSON-friendly, byte-stable rendering of ``v``.

    Exact numbers and polynomials become strings, floats are rounded to 12
    significant digits, containers are converted recursively.
    """
    if v is None or isinstance(v, (bool, str)):
        return v
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return format(float(v), FLOAT_FORMAT)
    if isinstance(v, (Fraction, QuadraticNumber, ParamPoly, BiPoly)):
        return str(v)
    if isinstance(v, dict):
        return {str(k): format_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [format_value(x) for x in v]
    if hasattr(v, "to_record"):
        return v.to_record()
    return str(v)
