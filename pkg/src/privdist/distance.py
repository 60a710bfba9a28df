"""Estimator-style entry point for the skewed bisimilarity distance.

``SkewedBisimilarityDistance(alpha=...).fit(chain)`` runs the fixed-point
engine once and exposes the certified enclosure; the functions below answer
pair-level questions (exact value, threshold, differential-privacy delta) on
top of it.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from privdist.fixpoint import (
    DEFAULT_MAX_ITERS,
    DEFAULT_ROUND_TOL,
    DEFAULT_STOP_GAP,
    Bounds,
    Certificate,
    check_certificate,
    kleene_iterate,
    recover,
)
from privdist.kantorovich import DUAL, PRIMAL, GammaOperator, ones_certificate
from privdist.lmc import Lmc, check_lmc
from privdist.rational import as_rational, taylor_lower_bound_exp
from privdist.validation import check_alpha, check_pair

YES, NO, UNKNOWN = "yes", "no", "unknown"


class SkewedBisimilarityDistance(BaseEstimator):
    """Certified two-sided bounds on the skewed bisimilarity distance.

    Parameters
    ----------
    alpha : rational >= 1
        Skew; ``alpha = e**epsilon`` for epsilon-delta privacy.
    mode : {"primal", "dual"}
        Which linear program form evaluates Gamma during iteration.
    max_iter, stop_gap, round_tol
        Kleene iteration budget; see :func:`privdist.fixpoint.kleene_iterate`.
    certificate_mode : {"dual", "primal"}
        How the final upper bound is re-checked.  ``"dual"`` proves every
        entry with an explicit transport plan.
    n_jobs : int
        Worker processes for pair-level evaluation (cold solves only).

    Attributes
    ----------
    lower_, upper_ : object ndarray of Fraction
        Kleene lower bound and checked pre-fixed point.
    exact_ : bool ndarray
        Entries whose value is claimed exact.
    converged_ : bool
        Kleene iteration reached the least fixed point itself.
    certificate_ : Certificate
    n_iter_ : int
    """

    def __init__(
        self,
        alpha=1,
        mode=PRIMAL,
        max_iter=DEFAULT_MAX_ITERS,
        stop_gap=DEFAULT_STOP_GAP,
        round_tol=DEFAULT_ROUND_TOL,
        certificate_mode=DUAL,
        n_jobs=1,
    ):
        self.alpha = alpha
        self.mode = mode
        self.max_iter = max_iter
        self.stop_gap = stop_gap
        self.round_tol = round_tol
        self.certificate_mode = certificate_mode
        self.n_jobs = n_jobs

    def fit(self, X: Lmc, y=None):
        m = check_lmc(X)
        alpha = check_alpha(self.alpha)
        op = GammaOperator(m, alpha, self.mode, self.n_jobs)
        kleene = kleene_iterate(
            alpha,
            m,
            max_iters=self.max_iter,
            stop_gap=as_rational(self.stop_gap),
            round_tol=None if self.round_tol is None else as_rational(self.round_tol),
            operator=op,
        )
        rec = recover(alpha, m, kleene, operator=op, certificate_mode=self.certificate_mode)
        self.lmc_ = m
        self.alpha_ = alpha
        self.kleene_ = kleene
        self.lower_ = kleene.lower
        self.upper_ = rec.upper
        self.exact_ = rec.exact
        self.converged_ = kleene.converged
        self.certificate_ = rec.certificate
        self.n_iter_ = kleene.iterations
        return self

    def bounds(self) -> Bounds:
        check_is_fitted(self, "upper_")
        return Bounds(self.lower_, self.upper_, self.n_iter_)

    def predict(self, X: Iterable[Sequence]) -> list[Fraction]:
        """Certified upper bound (the exact value where resolved) for each pair."""
        check_is_fitted(self, "upper_")
        out = []
        for pair in X:
            i, j = check_pair(self.lmc_, pair)
            out.append(self.upper_[i, j])
        return out

    def is_exact(self, pair) -> bool:
        check_is_fitted(self, "exact_")
        i, j = check_pair(self.lmc_, pair)
        return bool(self.exact_[i, j])


@dataclass
class DistanceResult:
    pair: tuple[int, int]
    value: Fraction | None
    exact: bool
    proof: str | None  # "fixed-point", "recovered", or None for bounds only
    bounds: Bounds
    certificate: Certificate

    @property
    def lower(self) -> Fraction:
        return self.bounds.lower[self.pair]

    @property
    def upper(self) -> Fraction:
        return self.bounds.upper[self.pair]


def _result(est: SkewedBisimilarityDistance, i: int, j: int) -> DistanceResult:
    exact = bool(est.exact_[i, j])
    proof = None
    if exact:
        proof = "fixed-point" if est.converged_ or est.lower_[i, j] == est.upper_[i, j] else "recovered"
    return DistanceResult(
        (i, j),
        est.upper_[i, j] if exact else None,
        exact,
        proof,
        est.bounds(),
        est.certificate_,
    )


def exact_value(alpha, m: Lmc, s, s_prime, **budget) -> DistanceResult:
    """Exact distance between two states when it can be certified, bounds otherwise.

    ``budget`` is forwarded to :class:`SkewedBisimilarityDistance`.
    """
    est = SkewedBisimilarityDistance(alpha=alpha, **budget).fit(m)
    i, j = check_pair(m, (s, s_prime))
    return _result(est, i, j)


@dataclass
class ThresholdResult:
    answer: str
    theta: Fraction
    lower: Fraction
    upper: Fraction
    certificate: Certificate | None = None
    iterate: np.ndarray | None = None
    iteration: int | None = None


def threshold(alpha, m: Lmc, s, s_prime, theta, **budget) -> ThresholdResult:
    """Is the distance between ``s`` and ``s_prime`` at most ``theta``?

    ``yes`` comes with a checked certificate whose entry is at most theta;
    ``no`` with a Kleene iterate whose entry already exceeds theta.
    """
    check_lmc(m)
    alpha = check_alpha(alpha)
    theta = as_rational(theta)
    if not 0 <= theta <= 1:
        raise ValueError("theta must lie in [0, 1]")
    i, j = check_pair(m, (s, s_prime))
    if theta == 1:
        cert = check_certificate(alpha, m, ones_certificate(m), budget.get("certificate_mode", DUAL))
        if cert.checked:
            return ThresholdResult(YES, theta, Fraction(0), Fraction(1), certificate=cert)

    mode = budget.get("mode", PRIMAL)
    op = GammaOperator(m, alpha, mode, budget.get("n_jobs", 1))
    hit: dict[str, object] = {}

    def above(k, d):
        if d[i, j] > theta:
            hit["k"], hit["d"] = k, d
            return True
        return False

    kleene = kleene_iterate(
        alpha,
        m,
        max_iters=budget.get("max_iter", DEFAULT_MAX_ITERS),
        stop_gap=as_rational(budget.get("stop_gap", DEFAULT_STOP_GAP)),
        round_tol=budget.get("round_tol", DEFAULT_ROUND_TOL),
        operator=op,
        on_iterate=above,
    )
    if hit:
        return ThresholdResult(NO, theta, hit["d"][i, j], Fraction(1), iterate=hit["d"], iteration=hit["k"])
    rec = recover(alpha, m, kleene, operator=op, certificate_mode=budget.get("certificate_mode", DUAL))
    lo, hi = kleene.lower[i, j], rec.upper[i, j]
    if hi <= theta:
        return ThresholdResult(YES, theta, lo, hi, certificate=rec.certificate)
    return ThresholdResult(UNKNOWN, theta, lo, hi, certificate=rec.certificate, iterate=kleene.lower)


@dataclass
class PairDelta:
    pair: tuple[int, int]
    delta: Fraction
    exact: bool


@dataclass
class DeltaBound:
    alpha: Fraction
    epsilon: Fraction | None
    pairs: list[PairDelta]

    @property
    def max(self) -> Fraction:
        return max(p.delta for p in self.pairs)


def delta_bound(m: Lmc, pairs, epsilon=None, alpha=None, terms: int | None = None, **budget) -> DeltaBound:
    """Sound delta for epsilon-delta privacy of the chain with respect to ``pairs``.

    Pass either ``epsilon`` (the skew becomes a rational lower bound on
    ``e**epsilon``, which keeps the bound sound) or ``alpha`` directly.
    """
    check_lmc(m)
    if (epsilon is None) == (alpha is None):
        raise ValueError("pass exactly one of epsilon and alpha")
    if epsilon is not None:
        epsilon = as_rational(epsilon)
        if epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        alpha = taylor_lower_bound_exp(epsilon, terms)
    alpha = check_alpha(alpha)
    pairs = [check_pair(m, p) for p in pairs]
    if not pairs:
        raise ValueError("need at least one related pair")
    est = SkewedBisimilarityDistance(alpha=alpha, **budget).fit(m)
    out = [PairDelta((i, j), est.upper_[i, j], bool(est.exact_[i, j])) for i, j in pairs]
    return DeltaBound(alpha, epsilon, out)
