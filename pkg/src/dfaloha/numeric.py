"""Arithmetic modes and number formatting shared by every module.

Two modes exist. ``exact`` keeps every probability and length as a GMP
rational (``gmpy2.mpq``); ``float:BITS`` rounds them to ``gmpy2.mpfr`` at the
given binary precision. Irrational constants (e, ln) are always evaluated
in ``mpfr`` at the mode's precision, or at the default precision for exact
mode.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import gmpy2
from gmpy2 import mpfr, mpq

DEFAULT_BITS = 256
PRECISION_ENV = "DFA_PRECISION_BITS"


def default_bits() -> int:
    raw = os.environ.get(PRECISION_ENV)
    if raw is None or raw == "":
        return DEFAULT_BITS
    bits = int(raw)
    if bits < 53:
        raise ValueError(f"{PRECISION_ENV} must be at least 53, got {bits}")
    return bits


@dataclass(frozen=True)
class Mode:
    """Arithmetic mode; ``bits is None`` means exact rationals."""

    bits: int | None = None

    @property
    def exact(self) -> bool:
        return self.bits is None

    @property
    def precision(self) -> int:
        """Precision used for irrational constants under this mode."""
        return default_bits() if self.bits is None else self.bits

    @classmethod
    def parse(cls, text: str | Mode | None) -> Mode:
        if isinstance(text, Mode):
            return text
        if text is None or text == "exact":
            return EXACT
        if text == "float":
            return cls(default_bits())
        if text.startswith("float:"):
            bits = int(text.split(":", 1)[1])
            if bits < 53:
                raise ValueError(f"float precision must be >= 53 bits, got {bits}")
            return cls(bits)
        raise ValueError(f"unknown arithmetic mode {text!r}")

    def context(self):
        """Context manager setting the gmpy2 working precision."""
        return gmpy2.context(gmpy2.get_context(), precision=self.precision)

    def convert(self, value):
        """Bring an int/rational into this mode's number type."""
        if self.exact:
            return mpq(value)
        return mpfr(value)

    def ratio(self, num, den):
        if self.exact:
            return mpq(num, den)
        return mpfr(num) / mpfr(den)

    def __str__(self) -> str:
        return "exact" if self.exact else f"float:{self.bits}"


EXACT = Mode(None)


def float_mode(bits: int | None = None) -> Mode:
    return Mode(default_bits() if bits is None else bits)


def e_const():
    """e at the current context precision."""
    return gmpy2.exp(1)


def inv_e():
    return gmpy2.exp(-1)


def zeta_const():
    """Log-growth coefficient of the optimality gap: -0.5 / ln(1 - 1/e)."""
    return mpfr(-0.5) / gmpy2.log(1 - gmpy2.exp(-1))


def rational_str(value) -> str:
    """Serialize a rational as ``p/q`` (always with a denominator)."""
    q = mpq(value)
    return f"{q.numerator}/{q.denominator}"


def decimal_str(value, digits: int = 17) -> str:
    """Locale-independent decimal rendering with ``digits`` significant digits."""
    kind = type(value).__name__
    if isinstance(value, int) or kind == "mpz":
        return str(int(value))
    x = value if kind == "mpfr" else mpfr(value, 4 * digits + 16)
    return f"{x:.{digits}g}"


def json_value(value):
    """JSON-friendly view: rationals as ``p/q``, floats as decimal strings."""
    if value is None:
        return None
    if isinstance(value, bool):
        return value
    kind = type(value).__name__
    if isinstance(value, int) or kind == "mpz":
        return int(value)
    if kind == "mpq":
        return rational_str(value)
    if kind == "mpfr":
        return decimal_str(value)
    return value
