"""
Exact combinatorial helpers shared by the operator and bracket code.
"""
from fractions import Fraction
from functools import lru_cache
from typing import Union

Scalar = Union[int, Fraction]


@lru_cache(maxsize=None)
def binomial(n: Scalar, k: int) -> Fraction:
    """
    Generalized binomial coefficient n(n-1)...(n-k+1)/k! over the rationals.

    Args:
        n: Any rational upper argument (negative and fractional allowed)
        k: Lower argument; zero is returned for k < 0

    Returns:
        Exact value as a Fraction
    """
    if k < 0:
        return Fraction(0)
    value = Fraction(1)
    top = Fraction(n)
    for t in range(k):
        value = value * (top - t) / (t + 1)
    return value


def kronecker(a: int, b: int) -> int:
    """Kronecker delta"""
    return 1 if a == b else 0


def parse_rational(text: str) -> Fraction:
    """Parse 'p/q' or an integer literal into a Fraction"""
    return Fraction(text.strip())


def format_rational(value: Fraction) -> str:
    """Render a Fraction as 'p/q' (or 'p' when integral)"""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"
