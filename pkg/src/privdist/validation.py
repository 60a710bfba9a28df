"""Input validation in the style of ``sklearn.utils.validation``."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np

from privdist.rational import as_rational, format_rational


def check_alpha(alpha) -> Fraction:
    """Skew parameter as an exact rational >= 1."""
    a = as_rational(alpha)
    if a < 1:
        raise ValueError(f"alpha must be >= 1, got {format_rational(a)}")
    return a


def check_distance_matrix(d, n: int | None = None, symmetric: bool = True) -> np.ndarray:
    """Square object array of Fractions in [0, 1].

    Nested sequences are converted; entries may be ints or rational strings.
    """
    if isinstance(d, np.ndarray) and d.dtype == object and d.ndim == 2:
        arr = d
        if not all(isinstance(v, Fraction) for v in arr.flat):
            arr = _convert(arr.tolist())
    else:
        arr = _convert(d)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"distance matrix must be square, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise ValueError(f"distance matrix has dimension {arr.shape[0]}, chain has {n} states")
    for v in arr.flat:
        if not 0 <= v <= 1:
            raise ValueError(f"distance entry {format_rational(v)} outside [0, 1]")
    if symmetric and not (arr == arr.T).all():
        raise ValueError("distance matrix must be symmetric")
    return arr


def _convert(rows) -> np.ndarray:
    rows = [list(r) for r in rows]
    n = len(rows)
    arr = np.empty((n, len(rows[0]) if rows else 0), dtype=object)
    for i, r in enumerate(rows):
        if len(r) != arr.shape[1]:
            raise ValueError("ragged distance matrix")
        for j, v in enumerate(r):
            arr[i, j] = as_rational(v)
    return arr


def check_distribution(mu: Sequence, n: int | None = None) -> list[Fraction]:
    """Dense probability vector with exact entries summing to 1."""
    out = [as_rational(v) for v in mu]
    if n is not None and len(out) != n:
        raise ValueError(f"distribution has {len(out)} entries, expected {n}")
    if any(v < 0 for v in out):
        raise ValueError("negative probability")
    if sum(out, Fraction(0)) != 1:
        raise ValueError("probabilities must sum to exactly 1")
    return out


def check_pair(m, pair) -> tuple[int, int]:
    """Resolve a ``(state, state)`` pair of names or indices."""
    try:
        s, t = pair
    except (TypeError, ValueError):
        raise ValueError(f"expected a pair of states, got {pair!r}") from None
    return m.index(s), m.index(t)
