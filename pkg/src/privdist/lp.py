"""Exact rational linear programming.

Dense bounded-variable simplex with Bland's rule.  Arithmetic runs on
``gmpy2.mpq`` internally; everything crossing the API is a ``Fraction``.

A solved :class:`SimplexSolver` can be re-optimised after the right-hand
sides change (objective and matrix fixed).  The previous basis stays dual
feasible, so a few dual simplex pivots usually suffice; the fixed-point
engine relies on this because successive iterates only move the RHS.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from gmpy2 import mpq

from privdist.rational import as_rational, format_rational

logger = logging.getLogger(__name__)

OPTIMAL, INFEASIBLE, UNBOUNDED = "optimal", "infeasible", "unbounded"
LE, EQ = "<=", "="

_ZERO = mpq(0)


class _PivotBudget(Exception):
    pass


@dataclass(frozen=True)
class Constraint:
    coeffs: Mapping[int, Fraction]
    relation: str
    rhs: Fraction


@dataclass
class LinearProgram:
    """Maximise ``objective . x`` subject to ``rows`` and per-variable bounds.

    ``bounds[k]`` is ``(lower, upper)`` with ``upper=None`` for +infinity.
    """

    num_vars: int
    objective: list[Fraction]
    rows: list[Constraint] = field(default_factory=list)
    bounds: list[tuple[Fraction, Fraction | None]] | None = None

    def __post_init__(self):
        self.objective = [as_rational(c) for c in self.objective]
        if len(self.objective) != self.num_vars:
            raise ValueError("objective length must equal num_vars")
        if self.bounds is None:
            self.bounds = [(Fraction(0), None)] * self.num_vars
        if len(self.bounds) != self.num_vars:
            raise ValueError("need one bound pair per variable")
        self.bounds = [
            (as_rational(lo), None if hi is None else as_rational(hi)) for lo, hi in self.bounds
        ]
        for k, (lo, hi) in enumerate(self.bounds):
            if hi is not None and lo > hi:
                raise ValueError(f"variable {k}: lower bound exceeds upper bound")

    def add_row(self, coeffs: Mapping[int, object], relation: str, rhs) -> None:
        if relation == ">=":
            coeffs = {k: -as_rational(v) for k, v in coeffs.items()}
            relation, rhs = LE, -as_rational(rhs)
        if relation not in (LE, EQ):
            raise ValueError(f"unsupported relation {relation!r}")
        clean = {}
        for k, v in coeffs.items():
            if not 0 <= k < self.num_vars:
                raise ValueError(f"coefficient index {k} out of range")
            q = as_rational(v)
            if q:
                clean[k] = q
        self.rows.append(Constraint(clean, relation, as_rational(rhs)))

    def is_feasible_point(self, x: Sequence[Fraction]) -> bool:
        """Exact re-substitution check of rows and bounds."""
        for (lo, hi), v in zip(self.bounds, x):
            if v < lo or (hi is not None and v > hi):
                return False
        for row in self.rows:
            lhs = sum((c * x[k] for k, c in row.coeffs.items()), Fraction(0))
            if row.relation == LE and lhs > row.rhs:
                return False
            if row.relation == EQ and lhs != row.rhs:
                return False
        return True


@dataclass
class LpOutcome:
    status: str
    value: Fraction | None = None
    solution: list[Fraction] | None = None
    pivots: int = 0


class SimplexSolver:
    """Tableau state for one linear program.

    Columns are the structural variables (shifted to lower bound 0), then one
    slack per ``<=`` row, then artificials.  ``_unit[r]`` is the column that
    was the identity column of row ``r`` initially, so column ``_unit[r]`` of
    the current tableau is column ``r`` of the basis inverse.
    """

    max_warm_pivots = 10_000

    def __init__(self, lp: LinearProgram, debug: bool = False):
        self.lp = lp
        self.debug = debug
        self.pivots = 0
        n = lp.num_vars
        self._lo = [mpq(lo) for lo, _ in lp.bounds]
        upper = [None if hi is None else mpq(hi) - mpq(lo) for lo, hi in lp.bounds]
        m = len(lp.rows)

        n_slack = sum(1 for r in lp.rows if r.relation == LE)
        self._slack_of: list[int | None] = []
        col = n
        for r in lp.rows:
            if r.relation == LE:
                self._slack_of.append(col)
                col += 1
            else:
                self._slack_of.append(None)
        upper += [None] * n_slack

        self._shift = [
            sum((mpq(c) * self._lo[k] for k, c in r.coeffs.items()), _ZERO) for r in lp.rows
        ]
        b = [mpq(r.rhs) - s for r, s in zip(lp.rows, self._shift)]

        self._sign: list[int] = []
        self._unit: list[int] = []
        artificial_rows = []
        for i, r in enumerate(lp.rows):
            if r.relation == LE and b[i] >= 0:
                self._sign.append(1)
                self._unit.append(self._slack_of[i])
            else:
                self._sign.append(1 if b[i] >= 0 else -1)
                self._unit.append(col)
                artificial_rows.append(i)
                upper.append(None)
                col += 1
        self.ncols = col
        self._first_artificial = n + n_slack
        self.upper = upper

        T = [[_ZERO] * col for _ in range(m)]
        for i, r in enumerate(lp.rows):
            sg = self._sign[i]
            row = T[i]
            for k, c in r.coeffs.items():
                row[k] = mpq(c) * sg
            if self._slack_of[i] is not None:
                row[self._slack_of[i]] = mpq(sg)
            row[self._unit[i]] = mpq(1)
        self.T = T
        self.beta = [b[i] * self._sign[i] for i in range(m)]
        self.basis = list(self._unit)
        self.is_basic = [False] * col
        for j in self.basis:
            self.is_basic[j] = True
        self.at_upper = [False] * col
        self.allowed = [True] * col
        self._artificial_rows = artificial_rows
        self._rows_dropped = False
        self.cost = [mpq(c) for c in lp.objective] + [_ZERO] * (col - n)
        self.rc: list = []
        self.status: str | None = None

    # -- core pivoting ---------------------------------------------------

    def _pivot(self, r: int, j: int) -> None:
        T = self.T
        prow = T[r]
        piv = prow[j]
        if piv != 1:
            inv = 1 / piv
            prow = [v * inv for v in prow]
            T[r] = prow
        nz = [c for c, v in enumerate(prow) if v]
        for k, row in enumerate(T):
            if k != r:
                f = row[j]
                if f:
                    for c in nz:
                        row[c] -= f * prow[c]
        f = self.rc[j]
        if f:
            rc = self.rc
            for c in nz:
                rc[c] -= f * prow[c]
        old = self.basis[r]
        self.is_basic[old] = False
        self.is_basic[j] = True
        self.basis[r] = j
        self.pivots += 1
        if self.debug:
            logger.debug(
                "pivot %d: row %d, column %d enters, column %d leaves, beta=%s",
                self.pivots, r, j, old, [format_rational(as_rational(v)) for v in self.beta],
            )

    def _value_of_nonbasic(self, j: int):
        return self.upper[j] if self.at_upper[j] else _ZERO

    def _primal(self) -> str:
        T, beta, upper = self.T, self.beta, self.upper
        while True:
            enter, direction = -1, 0
            for j in range(self.ncols):
                if self.is_basic[j] or not self.allowed[j]:
                    continue
                d = self.rc[j]
                if d > 0 and not self.at_upper[j]:
                    enter, direction = j, 1
                    break
                if d < 0 and self.at_upper[j]:
                    enter, direction = j, -1
                    break
            if enter < 0:
                return OPTIMAL
            j = enter
            best = upper[j]  # bound flip limit
            leave_row, leave_to_upper, leave_key = -1, False, j
            for r, row in enumerate(T):
                a = row[j] * direction
                if a > 0:
                    theta, to_upper = beta[r] / a, False
                elif a < 0 and upper[self.basis[r]] is not None:
                    theta, to_upper = (upper[self.basis[r]] - beta[r]) / (-a), True
                else:
                    continue
                key = self.basis[r]
                if best is None or theta < best or (theta == best and key < leave_key):
                    best, leave_row, leave_to_upper, leave_key = theta, r, to_upper, key
            if best is None:
                return UNBOUNDED
            step = best * direction
            for r, row in enumerate(T):
                if row[j]:
                    beta[r] -= row[j] * step
            if leave_row < 0:
                self.at_upper[j] = not self.at_upper[j]
                if self.debug:
                    logger.debug("bound flip on column %d", j)
                continue
            entering_value = self._value_of_nonbasic(j) + step
            leaving = self.basis[leave_row]
            self.at_upper[leaving] = leave_to_upper
            self.at_upper[j] = False
            beta[leave_row] = entering_value
            self._pivot(leave_row, j)

    def _dual(self) -> str:
        """Dual simplex from a dual feasible basis; Bland-style choices."""
        T, beta, upper = self.T, self.beta, self.upper
        budget = self.max_warm_pivots
        while True:
            leave_row, leave_key, target = -1, None, None
            for r, jb in enumerate(self.basis):
                if beta[r] < 0:
                    t = _ZERO
                elif upper[jb] is not None and beta[r] > upper[jb]:
                    t = upper[jb]
                else:
                    continue
                if leave_key is None or jb < leave_key:
                    leave_row, leave_key, target = r, jb, t
            if leave_row < 0:
                return OPTIMAL
            budget -= 1
            if budget < 0:
                raise _PivotBudget()
            row = T[leave_row]
            increase = beta[leave_row] < target
            enter, best = -1, None
            for j in range(self.ncols):
                if self.is_basic[j] or not self.allowed[j]:
                    continue
                a = row[j]
                if not a:
                    continue
                if increase:
                    ok = (a < 0 and not self.at_upper[j]) or (a > 0 and self.at_upper[j])
                else:
                    ok = (a > 0 and not self.at_upper[j]) or (a < 0 and self.at_upper[j])
                if not ok:
                    continue
                ratio = abs(self.rc[j] / a)
                if best is None or ratio < best:
                    enter, best = j, ratio
            if enter < 0:
                return INFEASIBLE
            j = enter
            delta = (beta[leave_row] - target) / row[j]
            for r, rw in enumerate(T):
                if r != leave_row and rw[j]:
                    beta[r] -= rw[j] * delta
            entering_value = self._value_of_nonbasic(j) + delta
            self.at_upper[self.basis[leave_row]] = target != 0
            self.at_upper[j] = False
            beta[leave_row] = entering_value
            self._pivot(leave_row, j)

    def _reset_reduced_costs(self, cost) -> None:
        rc = list(cost)
        for r, jb in enumerate(self.basis):
            cb = cost[jb]
            if cb:
                for c, v in enumerate(self.T[r]):
                    if v:
                        rc[c] -= cb * v
        self.rc = rc

    # -- phases ----------------------------------------------------------

    def solve(self) -> LpOutcome:
        if self._artificial_rows:
            phase1 = [_ZERO] * self.ncols
            for j in range(self._first_artificial, self.ncols):
                phase1[j] = mpq(-1)
            self._reset_reduced_costs(phase1)
            self._primal()
            infeas = sum(
                (self.beta[r] for r, jb in enumerate(self.basis) if jb >= self._first_artificial),
                _ZERO,
            )
            if infeas > 0:
                self.status = INFEASIBLE
                return LpOutcome(INFEASIBLE, pivots=self.pivots)
            self._drive_out_artificials()
            for j in range(self._first_artificial, self.ncols):
                self.allowed[j] = False
        self._reset_reduced_costs(self.cost)
        self.status = self._primal()
        return self._outcome()

    def _drive_out_artificials(self) -> None:
        r = 0
        while r < len(self.T):
            jb = self.basis[r]
            if jb < self._first_artificial:
                r += 1
                continue
            row = self.T[r]
            cand = next((c for c in range(self._first_artificial) if not self.is_basic[c] and row[c]), None)
            if cand is None:
                # redundant equality row
                self.is_basic[jb] = False
                del self.T[r], self.beta[r], self.basis[r]
                self._rows_dropped = True
                continue
            self.beta[r] = self._value_of_nonbasic(cand)
            self.at_upper[cand] = False
            self._pivot(r, cand)
            r += 1

    def resolve(self, rhs: Sequence[Fraction]) -> LpOutcome:
        """Re-optimise after replacing every row's right-hand side."""
        if self.status != OPTIMAL or self._rows_dropped:
            fresh = LinearProgram(
                self.lp.num_vars,
                self.lp.objective,
                [Constraint(r.coeffs, r.relation, as_rational(b)) for r, b in zip(self.lp.rows, rhs)],
                self.lp.bounds,
            )
            self.__init__(fresh, self.debug)
            return self.solve()
        self.lp = LinearProgram(
            self.lp.num_vars,
            self.lp.objective,
            [Constraint(r.coeffs, r.relation, as_rational(b)) for r, b in zip(self.lp.rows, rhs)],
            self.lp.bounds,
        )
        b = [(mpq(v) - s) * sg for v, s, sg in zip(rhs, self._shift, self._sign)]
        T = self.T
        beta = [_ZERO] * len(T)
        for i, bi in enumerate(b):
            if bi:
                u = self._unit[i]
                for r, row in enumerate(T):
                    if row[u]:
                        beta[r] += row[u] * bi
        for j in range(self.ncols):
            if self.at_upper[j] and not self.is_basic[j]:
                uj = self.upper[j]
                for r, row in enumerate(T):
                    if row[j]:
                        beta[r] -= row[j] * uj
        self.beta = beta
        try:
            status = self._dual()
        except _PivotBudget:
            logger.debug("warm start gave up after %d dual pivots; solving from scratch", self.max_warm_pivots)
            self.status = None
            return self.resolve(rhs)
        if status == OPTIMAL:
            status = self._primal()
        self.status = status
        return self._outcome()

    def _outcome(self) -> LpOutcome:
        if self.status != OPTIMAL:
            return LpOutcome(self.status, pivots=self.pivots)
        n = self.lp.num_vars
        y = [self._value_of_nonbasic(j) for j in range(n)]
        for r, jb in enumerate(self.basis):
            if jb < n:
                y[jb] = self.beta[r]
        x = [Fraction(int(v.numerator), int(v.denominator)) for v in (yk + lo for yk, lo in zip(y, self._lo))]
        value = sum((c * v for c, v in zip(self.lp.objective, x)), Fraction(0))
        return LpOutcome(OPTIMAL, value, x, self.pivots)

    def value_map(self) -> tuple[list[Fraction], Fraction]:
        """Optimal value as an affine function of the right-hand sides.

        Returns ``(y, c)`` with ``value(b) = sum(y[i] * b[i]) + c`` for every
        ``b`` under which the current basis stays optimal.
        """
        if self.status != OPTIMAL:
            raise ValueError("no optimal basis")
        T = self.T
        cb = [self.cost[j] for j in self.basis]
        y = []
        for i, u in enumerate(self._unit):
            v = sum((c * T[r][u] for r, c in enumerate(cb) if c), _ZERO) * self._sign[i]
            y.append(Fraction(int(v.numerator), int(v.denominator)))
        value = self._outcome().value
        const = value - sum((a * r.rhs for a, r in zip(y, self.lp.rows)), Fraction(0))
        return y, const


def solve(lp: LinearProgram, debug: bool = False) -> LpOutcome:
    """Solve ``lp`` exactly.  Infeasible/unbounded are statuses, never exceptions."""
    return SimplexSolver(lp, debug=debug).solve()
