"""Finite-horizon lower bounds on the skewed total-variation distance.

Only the first ``h`` labels are observed.  The best event is then a union of
length-``h`` cylinders, and per cylinder the choice is local: keep it exactly
when it contributes positively.  That makes the search single-exponential in
``h`` instead of ranging over all sets of traces.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from privdist.lmc import Lmc, check_lmc, horizon_distribution
from privdist.validation import check_alpha

S_MINUS, S_PRIME_MINUS = "s-minus", "s'-minus"


@dataclass(frozen=True)
class HorizonEvent:
    horizon: int
    included: frozenset[tuple[str, ...]]

    def __post_init__(self):
        for u in self.included:
            if len(u) != self.horizon:
                raise ValueError(f"trace {u!r} does not have length {self.horizon}")

    def traces(self) -> list[tuple[str, ...]]:
        return sorted(self.included)


@dataclass(frozen=True)
class TvBound:
    value: Fraction
    event: HorizonEvent
    direction: str


def _one_side(alpha, p, q, support):
    chosen = []
    total = Fraction(0)
    for u in support:
        gain = p.get(u, 0) - alpha * q.get(u, 0)
        if gain > 0:
            chosen.append(u)
            total += gain
    return total, chosen


def tv_lower_bound(alpha, m: Lmc, s, s_prime, h: int, limit: int | None = None) -> TvBound:
    """``max_E Delta_alpha(nu_s(E), nu_s'(E))`` over unions of length-``h`` cylinders.

    ``direction`` says which side is the larger one: ``"s-minus"`` means the
    value is ``nu_s(E) - alpha * nu_s'(E)``.  Raises
    :class:`privdist.lmc.ExplosionError` when the trace frontier outgrows
    ``limit`` (default from ``PRIVDIST_EXPLOSION_LIMIT``).
    """
    check_lmc(m)
    alpha = check_alpha(alpha)
    if h < 0:
        raise ValueError("horizon must be nonnegative")
    p = horizon_distribution(m, s, h, limit=limit, strict=True).mass
    q = horizon_distribution(m, s_prime, h, limit=limit, strict=True).mass
    support = sorted(set(p) | set(q))
    v1, e1 = _one_side(alpha, p, q, support)
    v2, e2 = _one_side(alpha, q, p, support)
    if v2 > v1:
        return TvBound(v2, HorizonEvent(h, frozenset(e2)), S_PRIME_MINUS)
    if v1 == 0:
        return TvBound(Fraction(0), HorizonEvent(h, frozenset()), S_MINUS)
    return TvBound(v1, HorizonEvent(h, frozenset(e1)), S_MINUS)


def event_probability(m: Lmc, s, event: HorizonEvent) -> Fraction:
    """``nu_s`` of a union of length-``h`` cylinders."""
    dist = horizon_distribution(m, s, event.horizon, strict=True)
    return sum((dist[u] for u in event.included), Fraction(0))
