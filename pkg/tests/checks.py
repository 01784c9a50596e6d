"""Shared helpers for comparing computed values against printed references."""

from __future__ import annotations


def half_ulp(literal: str) -> float:
    """Half of the last printed decimal place of a numeric literal.

    A reference table printed as "0.215" or "1.04e6" carries rounding of
    up to half its last digit; comparisons against such values widen the
    band by this amount.
    """
    text = literal.strip().lower().lstrip("+-")
    if "e" in text:
        mantissa, exponent = text.split("e")
        exp = int(exponent)
    else:
        mantissa, exp = text, 0
    decimals = len(mantissa.split(".")[1]) if "." in mantissa else 0
    return 0.5 * 10.0 ** (exp - decimals)


def within_printed(computed: float, literal: str, rel: float) -> bool:
    """True when computed matches the printed literal within max(rel
    relative, half a printed ulp)."""
    ref = float(literal)
    tol = max(rel * abs(ref), half_ulp(literal))
    return abs(computed - ref) <= tol


def printed_deviation(computed: float, literal: str) -> float:
    """Signed relative deviation of computed from the printed literal."""
    ref = float(literal)
    return (computed - ref) / ref
