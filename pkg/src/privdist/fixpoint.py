"""Least fixed point of Gamma: Kleene lower bounds, certificates, exact recovery.

Lower bounds come from iterating Gamma upwards from the zero matrix.  Upper
bounds are pre-fixed points ``d`` with ``Gamma(d) <= d`` entrywise, each
one re-checked with transport witnesses before it is reported.  Exact values
are only claimed when the two sides meet, or when a rounded candidate passes
the certificate check and its entry is stable across two slack levels.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from privdist.kantorovich import (
    DUAL,
    PRIMAL,
    DualWitness,
    GammaOperator,
    kantorovich_dual,
    kantorovich_primal,
    verify_dual_witness,
    zeros,
)
from privdist.lmc import Lmc, bisimilarity_partition, check_lmc
from privdist.lp import OPTIMAL, LinearProgram, solve
from privdist.rational import best_rational_in_interval
from privdist.validation import check_alpha, check_distance_matrix

logger = logging.getLogger(__name__)

DEFAULT_MAX_ITERS = 10_000
DEFAULT_STOP_GAP = Fraction(1, 2**64)
DEFAULT_ROUND_TOL = Fraction(1, 2**128)
FIRST_SLACK_BITS = 10
POLICY_MAX_GAP = Fraction(1, 2**48)


@dataclass
class Certificate:
    """A candidate upper bound and the outcome of checking ``Gamma(d) <= d``.

    ``violations`` lists ``(q, q', lifted value)`` for every failed pair;
    ``witnesses`` holds the transport plans proving the passing pairs (dual
    mode only).
    """

    alpha: Fraction
    d: np.ndarray
    checked: bool
    violations: list[tuple[int, int, Fraction]] = field(default_factory=list)
    witnesses: dict[tuple[int, int], tuple[DualWitness, DualWitness]] = field(default_factory=dict, repr=False)


@dataclass
class Bounds:
    lower: np.ndarray
    upper: np.ndarray
    iterations: int


@dataclass
class KleeneResult:
    lower: np.ndarray
    converged: bool
    iterations: int
    changes: list[Fraction]
    rounded: bool = False
    iterates: list[np.ndarray] | None = None
    stopped_early: bool = False


def _round_down(d: np.ndarray, prev: np.ndarray, tol: Fraction | None) -> tuple[np.ndarray, bool]:
    # Simplest rational in [max(prev, x - tol), x]; short denominators are kept as is.
    # Staying above the previous iterate keeps prev <= out, hence out <= Gamma(out).
    if tol is None:
        return d, False
    out = d.copy()
    touched = False
    for idx, x in np.ndenumerate(d):
        if x.denominator.bit_length() > 64:
            y = best_rational_in_interval(max(prev[idx], x - tol), x)
            if y != x:
                out[idx] = y
                touched = True
    return out, touched


def kleene_iterate(
    alpha,
    m: Lmc,
    max_iters: int = DEFAULT_MAX_ITERS,
    stop_gap: Fraction = DEFAULT_STOP_GAP,
    round_tol: Fraction | None = DEFAULT_ROUND_TOL,
    mode: str = PRIMAL,
    keep_iterates: bool = False,
    operator: GammaOperator | None = None,
    on_iterate: Callable[[int, np.ndarray], bool] | None = None,
) -> KleeneResult:
    """Iterate Gamma from the zero matrix.

    Every iterate is below the least fixed point.  When an iterate grows
    denominators longer than 64 bits it is rounded *down* to the simplest
    rational within ``round_tol``; the result stays below the least fixed
    point and the sequence stays nondecreasing.  ``round_tol=None`` keeps
    iterates exact.

    Stops when Gamma(d) == d (``converged``: d is the least fixed point),
    when no entry moves by more than ``stop_gap``, after ``max_iters``
    applications, or when ``on_iterate(k, d)`` returns True.
    """
    check_lmc(m)
    alpha = check_alpha(alpha)
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    stop_gap = Fraction(stop_gap)
    if stop_gap < 0:
        raise ValueError("stop_gap must be >= 0")
    op = operator or GammaOperator(m, alpha, mode)
    d = zeros(m.n_states)
    iterates = [d] if keep_iterates else None
    changes: list[Fraction] = []
    rounded = False
    for k in range(1, max_iters + 1):
        g = op(d)
        if (g == d).all():
            logger.info("Kleene iteration reached the fixed point after %d applications", k - 1)
            return KleeneResult(d, True, k - 1, changes, rounded, iterates)
        nxt, touched = _round_down(g, d, round_tol)
        rounded |= touched
        change = max((nxt - d).flat)
        changes.append(change)
        d = nxt
        if keep_iterates:
            iterates.append(d)
        if on_iterate is not None and on_iterate(k, d):
            return KleeneResult(d, False, k, changes, rounded, iterates, stopped_early=True)
        if change <= stop_gap:
            break
    return KleeneResult(d, False, len(changes), changes, rounded, iterates)


def check_certificate(alpha, m: Lmc, d, mode: str = DUAL) -> Certificate:
    """Decide whether ``d`` is a pre-fixed point of Gamma.

    Mismatched labels need ``d = 1``; matching labels need the lifting of
    ``d`` between the successor distributions, in both directions, to be at
    most ``d``.  In dual mode each bound is proven by an explicit transport
    plan that is re-verified with plain arithmetic.
    """
    check_lmc(m)
    alpha = check_alpha(alpha)
    d = check_distance_matrix(d, m.n_states)
    n = m.n_states
    dists = [m.distribution(s) for s in range(n)]
    violations: list[tuple[int, int, Fraction]] = []
    witnesses: dict[tuple[int, int], tuple[DualWitness, DualWitness]] = {}
    for q in range(n):
        for r in range(q, n):
            if m.labels[q] != m.labels[r]:
                if d[q, r] != 1:
                    violations.append((q, r, Fraction(1)))
                continue
            mu, nu = dists[q], dists[r]
            if mu == nu or d[q, r] == 1:
                continue  # lifting is 0 for equal rows and never exceeds 1
            if mode == DUAL:
                _, (w1, w2) = kantorovich_dual(alpha, d, mu, nu)
                value = max(
                    verify_dual_witness(alpha, d, mu, nu, w1),
                    verify_dual_witness(alpha, d, nu, mu, w2),
                )
                witnesses[(q, r)] = (w1, w2)
            elif mode == PRIMAL:
                value = kantorovich_primal(alpha, d, mu, nu)[0]
            else:
                raise ValueError(f"mode must be 'primal' or 'dual', got {mode!r}")
            if value > d[q, r]:
                violations.append((q, r, value))
    return Certificate(alpha, d, not violations, violations, witnesses)


def round_up_candidate(lower: np.ndarray, slack: Fraction) -> np.ndarray:
    """Entrywise simplest rational in ``[x, min(1, x + slack)]``."""
    out = lower.copy()
    for idx, x in np.ndenumerate(lower):
        out[idx] = best_rational_in_interval(x, min(Fraction(1), x + slack))
    return out


def bisimulation_certificate(m: Lmc) -> np.ndarray:
    """0 on bisimilar pairs, 1 elsewhere.

    A pre-fixed point for every skew: on a pair from one block any admissible
    ``f`` varies by at most a factor alpha inside each block, and the two
    distributions give every block the same mass.
    """
    part = bisimilarity_partition(m)
    n = m.n_states
    d = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            d[i, j] = Fraction(0) if part.same_block(i, j) else Fraction(1)
    return d


def _solve_unit_box(a: list[list[Fraction]], b: list[Fraction]) -> list[Fraction] | None:
    # a point of {x in [0, 1]^n : a x = b}, or None
    n = len(b)
    lp = LinearProgram(n, [Fraction(0)] * n, bounds=[(Fraction(0), Fraction(1))] * n)
    for row, rhs in zip(a, b):
        lp.add_row({k: v for k, v in enumerate(row) if v}, "=", rhs)
    out = solve(lp)
    return out.solution if out.status == OPTIMAL else None


def policy_candidate(m: Lmc, lower: np.ndarray, op: GammaOperator) -> np.ndarray | None:
    """Fixed point of Gamma with every linear program frozen at its optimal basis under ``lower``.

    Near the least fixed point the optimal bases stop changing, so freezing
    them turns ``d = Gamma(d)`` into a linear system.  The result is only a
    candidate; callers must check it.
    """
    if op.mode != PRIMAL or op.n_jobs != 1:
        op = GammaOperator(m, op.alpha)
    g = op(lower)
    n = m.n_states
    unknown = {p: k for k, p in enumerate(op.pairs)}
    known = zeros(n)
    for i, j in op.mismatch:
        known[i, j] = known[j, i] = Fraction(1)
    size = len(unknown)
    if size == 0:
        return known
    a = [[Fraction(0)] * size for _ in range(size)]
    b = [Fraction(0)] * size
    for (i, j), k in unknown.items():
        # the direction attaining the maximum at lower
        best = None
        for key in ((i, j, 0), (i, j, 1)):
            solver = op._solvers.get(key)
            if solver is None:
                continue
            y, c = solver.value_map()
            v = solver._outcome().value
            if best is None or v > best[0]:
                best = (v, zip(op._rows[key], y), c)
        if best is None or best[0] != g[i, j]:
            return None
        _, terms, c = best
        a[k][k] += 1
        b[k] += c
        for (p, q), coef in terms:
            if not coef:
                continue
            key = (min(p, q), max(p, q))
            if key in unknown:
                a[k][unknown[key]] -= coef
            else:
                b[k] += coef * known[p, q]
    x = _solve_unit_box(a, b)
    if x is None:
        return None
    out = known.copy()
    for (i, j), k in unknown.items():
        out[i, j] = out[j, i] = x[k]
    return out


@dataclass
class Recovery:
    upper: np.ndarray
    certificate: Certificate
    exact: np.ndarray  # bool mask of entries whose value is claimed exact
    candidates_tried: int


def recover(
    alpha,
    m: Lmc,
    kleene: KleeneResult,
    operator: GammaOperator | None = None,
    certificate_mode: str = DUAL,
    max_slack_bits: int = 160,
    max_candidates: int = 64,
) -> Recovery:
    """Turn a Kleene lower bound into a checked upper bound and exact entries.

    Candidates round the lower bound up with slack ``2**-k`` for growing
    ``k``; one more candidate solves the fixed-point equations with the
    optimal bases frozen.  Passing candidates are combined by entrywise
    minimum (a meet of pre-fixed points is again one), starting from the
    bisimulation certificate.

    An entry is claimed exact when lower and upper meet, when the upper
    bound equals a value that stayed put across two passing slack levels, or
    when it equals the frozen-basis candidate at an entry where that
    candidate is fixed by Gamma and lies within ``POLICY_MAX_GAP`` of the
    lower bound.
    """
    alpha = check_alpha(alpha)
    lower = kleene.lower
    n = m.n_states
    if kleene.converged:
        cert = check_certificate(alpha, m, lower, certificate_mode)
        if not cert.checked:
            raise RuntimeError("a fixed point of Gamma failed its own certificate check")
        return Recovery(lower, cert, np.ones((n, n), dtype=bool), 0)

    op = operator or GammaOperator(m, alpha)
    best = bisimulation_certificate(m)
    claimed = zeros(n)
    claim = np.zeros((n, n), dtype=bool)

    tried = 0
    cand = policy_candidate(m, lower, op)
    if cand is not None and (cand >= lower).all():
        tried += 1
        g = op(cand)
        if (g <= cand).all():
            best = np.minimum(best, cand)
            for idx, v in np.ndenumerate(cand):
                if g[idx] == v and v - lower[idx] <= POLICY_MAX_GAP:
                    claim[idx], claimed[idx] = True, v

    prev: np.ndarray | None = None
    prev_passing = False
    for bits in range(FIRST_SLACK_BITS, max_slack_bits + 1):
        if (claim | (lower == best)).all():
            break
        cand = round_up_candidate(lower, Fraction(1, 2**bits))
        if prev is not None and (cand == prev).all():
            passing = prev_passing
        else:
            if tried >= max_candidates:
                break
            tried += 1
            passing = bool((op(cand) <= cand).all())
        if passing:
            best = np.minimum(best, cand)
            if prev_passing:
                newly = (cand == prev) & ~claim
                claim |= newly
                claimed[newly] = cand[newly]
        prev, prev_passing = cand, passing

    cert = check_certificate(alpha, m, best, certificate_mode)
    if not cert.checked:
        raise RuntimeError("primal screen and transport witnesses disagree on a candidate certificate")
    exact = (claim & (best == claimed)) | (lower == best)
    return Recovery(best, cert, exact, tried)
