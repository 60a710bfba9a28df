"""Text format for distance certificates.

::

    cert v1
    alpha 3/2
    d s0 s0 0
    d s0 s1 1/5
    ...

One ``d`` line per unordered pair (the diagonal included), named by state.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from privdist.lmc import Lmc, LmcFormatError
from privdist.rational import format_rational, parse_rational

HEADER = "cert v1"


def dump_certificate(m: Lmc, alpha, d: np.ndarray, header: str = HEADER, extra: tuple[str, ...] = ()) -> str:
    """Certificate text; ``header``/``extra`` let the same layout carry a Kleene iterate."""
    n = m.n_states
    lines = [header, *extra, f"alpha {format_rational(Fraction(alpha))}"]
    for i in range(n):
        for j in range(i, n):
            lines.append(f"d {m.names[i]} {m.names[j]} {format_rational(d[i, j])}")
    return "\n".join(lines) + "\n"


def parse_certificate(m: Lmc, text: str) -> tuple[Fraction, np.ndarray]:
    """``(alpha, d)`` from a certificate file; every pair must be given exactly once."""
    alpha = None
    n = m.n_states
    d = np.empty((n, n), dtype=object)
    seen = set()
    header = False
    for k, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if not header:
            if line != HEADER:
                raise LmcFormatError(f"expected header {HEADER!r}", k)
            header = True
            continue
        parts = line.split()
        try:
            if parts[0] == "alpha" and len(parts) == 2:
                if alpha is not None:
                    raise LmcFormatError("alpha given twice", k)
                alpha = parse_rational(parts[1])
            elif parts[0] == "d" and len(parts) == 4:
                i, j = m.index(parts[1]), m.index(parts[2])
                key = (min(i, j), max(i, j))
                if key in seen:
                    raise LmcFormatError(f"pair {parts[1]},{parts[2]} given twice", k)
                seen.add(key)
                d[i, j] = d[j, i] = parse_rational(parts[3])
            else:
                raise LmcFormatError(f"cannot parse {line!r}", k)
        except (KeyError, ValueError) as err:
            if isinstance(err, LmcFormatError):
                raise
            raise LmcFormatError(str(err), k) from None
    if not header:
        raise LmcFormatError("empty certificate", 1)
    if alpha is None:
        raise LmcFormatError("missing alpha line", 1)
    missing = [(m.names[i], m.names[j]) for i in range(n) for j in range(i, n) if (i, j) not in seen]
    if missing:
        raise LmcFormatError("missing pairs: " + ", ".join(f"{a},{b}" for a, b in missing), 1)
    return alpha, d
