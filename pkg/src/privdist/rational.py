"""Exact rational helpers.

Every probability, distance and LP coefficient in the package is a
:class:`fractions.Fraction`.  Floats only show up when formatting output.
"""

from __future__ import annotations

import operator
from fractions import Fraction
from typing import Union

Rational = Fraction
RationalLike = Union[Fraction, int, str]

EPS_SERIES_TOLERANCE = Fraction(1, 10**12)

_ARITH = {
    "add": operator.add,
    "sub": operator.sub,
    "mul": operator.mul,
    "div": operator.truediv,
}


def as_rational(value: RationalLike) -> Fraction:
    """Coerce ints, Fractions and rational strings; reject floats."""
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return parse_rational(value)
    # gmpy2.mpq and friends expose numerator/denominator
    if hasattr(value, "numerator") and hasattr(value, "denominator") and not isinstance(value, float):
        return Fraction(int(value.numerator), int(value.denominator))
    raise TypeError(f"cannot interpret {value!r} as an exact rational")


def parse_rational(text: str) -> Fraction:
    """Parse ``"num/den"``, an integer, or a terminating decimal such as ``"0.49"``."""
    s = text.strip()
    if not s:
        raise ValueError("empty rational literal")
    try:
        return Fraction(s)
    except ZeroDivisionError:
        raise ValueError(f"zero denominator in {text!r}") from None
    except ValueError:
        raise ValueError(f"not a rational literal: {text!r}") from None


def format_rational(q: Fraction) -> str:
    q = as_rational(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def format_decimal(q: Fraction, digits: int = 12) -> str:
    """Human-readable approximation; never fed back into computation."""
    return f"{float(q):.{digits}g}"


def rat_arith(a: Fraction, b: Fraction, op: str):
    """Exact binary operation; ``cmp`` returns -1, 0 or 1.

    Raises ZeroDivisionError for ``div`` by zero.
    """
    a, b = as_rational(a), as_rational(b)
    if op == "cmp":
        return (a > b) - (a < b)
    try:
        fn = _ARITH[op]
    except KeyError:
        raise ValueError(f"unknown operation {op!r}") from None
    if op == "div" and b == 0:
        raise ZeroDivisionError(f"division of {format_rational(a)} by zero")
    return fn(a, b)


def _simplest_positive(lo: Fraction, hi: Fraction) -> Fraction:
    # Stern-Brocot descent for 0 < lo <= hi, iterative continued-fraction form.
    # Builds the answer as a list of partial quotients, then folds it back.
    quotients: list[int] = []
    while True:
        fl = lo.numerator // lo.denominator
        if fl == lo:
            quotients.append(fl)
            break
        if fl + 1 <= hi:
            quotients.append(fl + 1)
            break
        quotients.append(fl)
        lo, hi = 1 / (hi - fl), 1 / (lo - fl)
    result = Fraction(quotients[-1])
    for a in reversed(quotients[:-1]):
        result = a + 1 / result
    return result


def best_rational_in_interval(lo: RationalLike, hi: RationalLike) -> Fraction:
    """Simplest rational in the closed interval ``[lo, hi]``.

    Smallest denominator, ties broken by smallest absolute numerator.
    """
    lo, hi = as_rational(lo), as_rational(hi)
    if lo > hi:
        raise ValueError(f"empty interval [{format_rational(lo)}, {format_rational(hi)}]")
    if lo <= 0 <= hi:
        return Fraction(0)
    if hi < 0:
        return -_simplest_positive(-hi, -lo)
    return _simplest_positive(lo, hi)


def taylor_terms_needed(eps: Fraction, tol: Fraction = EPS_SERIES_TOLERANCE) -> int:
    """Smallest term count whose last added term of the exp series is below ``tol``."""
    eps = as_rational(eps)
    term, k = Fraction(1), 0
    while term >= tol:
        k += 1
        term = term * eps / k
    return k + 1


def taylor_lower_bound_exp(eps: RationalLike, terms: int | None = None) -> Fraction:
    """Partial sum of the exponential series at ``eps`` (a rational under-approximation of e**eps)."""
    eps = as_rational(eps)
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if terms is None:
        terms = taylor_terms_needed(eps)
    if terms < 1:
        raise ValueError("terms must be >= 1")
    total, term = Fraction(0), Fraction(1)
    for k in range(terms):
        if k:
            term = term * eps / k
        total += term
    return total

