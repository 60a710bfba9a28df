"""Skewed distance, the skewed Kantorovich lifting and one application of Gamma.

The lifting ``K_alpha(d)(mu, mu')`` is the larger of two linear programs, one
per direction.  Both the primal (potential ``f``) and dual (transport plan
``omega`` with the extra ``tau``/``gamma``/``eta`` routes) forms are here;
they agree exactly, which the test-suite checks.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from privdist.lmc import Lmc
from privdist.lp import OPTIMAL, LinearProgram, SimplexSolver, solve
from privdist.validation import check_alpha, check_distance_matrix, check_distribution

PRIMAL, DUAL = "primal", "dual"


def delta_alpha(alpha, x, y) -> Fraction:
    """``max(x - alpha*y, y - alpha*x, 0)``."""
    alpha = check_alpha(alpha)
    x, y = Fraction(x), Fraction(y)
    return max(x - alpha * y, y - alpha * x, Fraction(0))


def zeros(n: int) -> np.ndarray:
    d = np.empty((n, n), dtype=object)
    d.fill(Fraction(0))
    return d


def ones_certificate(m: Lmc) -> np.ndarray:
    """1 off the diagonal, 0 on it: a pre-fixed point for every chain."""
    n = m.n_states
    d = np.empty((n, n), dtype=object)
    d.fill(Fraction(1))
    for i in range(n):
        d[i, i] = Fraction(0)
    return d


# -- primal ------------------------------------------------------------------


def _active_rows(d: np.ndarray) -> tuple[tuple[int, int], ...]:
    # f_i - alpha f_j <= 1 holds for every f in [0, 1]^n, so those rows are dropped
    n = d.shape[0]
    return tuple((i, j) for i in range(n) for j in range(n) if d[i, j] < 1)


def _primal_program(alpha: Fraction, d: np.ndarray, mu, nu, rows=None) -> LinearProgram:
    n = len(mu)
    lp = LinearProgram(n, [mu[i] - alpha * nu[i] for i in range(n)], bounds=[(Fraction(0), Fraction(1))] * n)
    for i, j in _active_rows(d) if rows is None else rows:
        if i == j:
            lp.add_row({i: 1 - alpha}, "<=", d[i, j])
        else:
            lp.add_row({i: 1, j: -alpha}, "<=", d[i, j])
    return lp


def _primal_rhs(d: np.ndarray, rows) -> list[Fraction]:
    return [d[i, j] for i, j in rows]


def _one_direction_trivial(alpha, mu, nu) -> bool:
    # every objective coefficient nonpositive: f = 0 is optimal
    return all(a - alpha * b <= 0 for a, b in zip(mu, nu))


def kantorovich_primal(alpha, d, mu, mu_prime) -> tuple[Fraction, list[Fraction]]:
    """Skewed Kantorovich value from the potential side, with a maximising ``f``."""
    alpha = check_alpha(alpha)
    d = check_distance_matrix(d)
    mu = check_distribution(mu, d.shape[0])
    nu = check_distribution(mu_prime, d.shape[0])
    best_value, best_f = Fraction(0), [Fraction(0)] * len(mu)
    for a, b in ((mu, nu), (nu, mu)):
        out = solve(_primal_program(alpha, d, a, b))
        if out.status != OPTIMAL:
            raise RuntimeError(f"primal Kantorovich program reported {out.status}; f = 0 is always feasible")
        if out.value > best_value:
            best_value, best_f = out.value, out.solution
    return best_value, best_f


# -- dual --------------------------------------------------------------------


@dataclass(frozen=True)
class DualWitness:
    """A point of the transport polytope for one direction."""

    omega: tuple[tuple[Fraction, ...], ...]
    tau: tuple[Fraction, ...]
    gamma: tuple[Fraction, ...]
    eta: tuple[Fraction, ...]

    def cost(self, d) -> Fraction:
        n = len(self.tau)
        return sum(
            (self.omega[i][j] * d[i, j] for i in range(n) for j in range(n)), Fraction(0)
        ) + sum(self.eta, Fraction(0))


def _dual_program(alpha: Fraction, d: np.ndarray, mu, nu) -> LinearProgram:
    n = len(mu)
    nw = n * n
    tau, gam, eta = nw, nw + n, nw + 2 * n
    objective = [-d[i, j] for i in range(n) for j in range(n)] + [Fraction(0)] * (2 * n) + [Fraction(-1)] * n
    lp = LinearProgram(nw + 3 * n, objective, bounds=[(Fraction(0), Fraction(1))] * (nw + 3 * n))
    inv = 1 / alpha
    for i in range(n):
        row = {i * n + j: 1 for j in range(n)}
        row.update({tau + i: 1, gam + i: -1, eta + i: 1})
        lp.add_row(row, "=", mu[i])
    for j in range(n):
        row = {i * n + j: 1 for i in range(n)}
        row.update({tau + j: inv, gam + j: -inv})
        lp.add_row(row, "<=", nu[j])
    return lp


def _witness_from(x: Sequence[Fraction], n: int) -> DualWitness:
    nw = n * n
    return DualWitness(
        tuple(tuple(x[i * n : (i + 1) * n]) for i in range(n)),
        tuple(x[nw : nw + n]),
        tuple(x[nw + n : nw + 2 * n]),
        tuple(x[nw + 2 * n : nw + 3 * n]),
    )


def verify_dual_witness(alpha, d, mu, mu_prime, w: DualWitness) -> Fraction:
    """Check that ``w`` lies in the transport polytope and return its cost.

    Plain arithmetic, independent of the LP solver.  Raises ValueError when a
    constraint is violated.
    """
    alpha = check_alpha(alpha)
    n = len(mu)
    unit = (Fraction(0), Fraction(1))
    values = [v for row in w.omega for v in row] + list(w.tau) + list(w.gamma) + list(w.eta)
    if any(not unit[0] <= v <= unit[1] for v in values):
        raise ValueError("witness entry outside [0, 1]")
    for i in range(n):
        if sum(w.omega[i], Fraction(0)) + w.tau[i] - w.gamma[i] + w.eta[i] != mu[i]:
            raise ValueError(f"row balance violated at {i}")
    for j in range(n):
        col = sum((w.omega[i][j] for i in range(n)), Fraction(0))
        if col + (w.tau[j] - w.gamma[j]) / alpha > mu_prime[j]:
            raise ValueError(f"column capacity violated at {j}")
    return w.cost(d)


def kantorovich_dual(alpha, d, mu, mu_prime) -> tuple[Fraction, tuple[DualWitness, DualWitness]]:
    """Skewed Kantorovich value from the transport side.

    Returns the larger of the two minima and the optimal witness for each
    direction (``mu -> mu'`` first).
    """
    alpha = check_alpha(alpha)
    d = check_distance_matrix(d)
    n = d.shape[0]
    mu = check_distribution(mu, n)
    nu = check_distribution(mu_prime, n)
    values, witnesses = [], []
    for a, b in ((mu, nu), (nu, mu)):
        out = solve(_dual_program(alpha, d, a, b))
        if out.status != OPTIMAL:
            raise RuntimeError(f"dual Kantorovich program reported {out.status}")
        values.append(-out.value)
        witnesses.append(_witness_from(out.solution, n))
    return max(values), (witnesses[0], witnesses[1])


def kantorovich(alpha, d, mu, mu_prime, mode: str = PRIMAL) -> Fraction:
    if mode == PRIMAL:
        return kantorovich_primal(alpha, d, mu, mu_prime)[0]
    if mode == DUAL:
        return kantorovich_dual(alpha, d, mu, mu_prime)[0]
    raise ValueError(f"mode must be 'primal' or 'dual', got {mode!r}")


# -- Gamma -------------------------------------------------------------------


def _pair_value(args) -> Fraction:
    alpha, d, mu, nu, mode = args
    return kantorovich(alpha, d, mu, nu, mode)


class GammaOperator:
    """Repeated applications of Gamma on one chain.

    In primal mode each (pair, direction) keeps its simplex tableau between
    calls; only the right-hand side ``d`` changes, so re-optimisation is a
    warm dual simplex.  The tableau is rebuilt when the set of entries below
    1 changes, since rows with right-hand side 1 are left out.  Pairs whose value is 0 regardless of ``d`` (equal
    rows, or all objective coefficients nonpositive) are never solved.
    """

    def __init__(self, m: Lmc, alpha, mode: str = PRIMAL, n_jobs: int = 1):
        if mode not in (PRIMAL, DUAL):
            raise ValueError(f"mode must be 'primal' or 'dual', got {mode!r}")
        self.m = m
        self.alpha = check_alpha(alpha)
        self.mode = mode
        self.n_jobs = n_jobs
        n = m.n_states
        self._dists = [m.distribution(s) for s in range(n)]
        self.pairs: list[tuple[int, int]] = []
        self.mismatch: list[tuple[int, int]] = []
        self._directions: dict[tuple[int, int], list[tuple[list, list]]] = {}
        for i in range(n):
            for j in range(i, n):
                if m.labels[i] != m.labels[j]:
                    self.mismatch.append((i, j))
                    continue
                mu, nu = self._dists[i], self._dists[j]
                dirs = [(a, b) for a, b in ((mu, nu), (nu, mu)) if not _one_direction_trivial(self.alpha, a, b)]
                if dirs:
                    self.pairs.append((i, j))
                    self._directions[(i, j)] = dirs
        self._solvers: dict[tuple[int, int, int], SimplexSolver] = {}
        self._rows: dict[tuple[int, int, int], tuple] = {}
        self.lp_solves = 0

    def _pair_primal(self, i: int, j: int, d: np.ndarray, rows) -> Fraction:
        best = Fraction(0)
        rhs = None
        for k, (mu, nu) in enumerate(self._directions[(i, j)]):
            key = (i, j, k)
            solver = self._solvers.get(key)
            if solver is None or self._rows.get(key) != rows:
                solver = SimplexSolver(_primal_program(self.alpha, d, mu, nu, rows))
                out = solver.solve()
                self._solvers[key] = solver
                self._rows[key] = rows
            else:
                if rhs is None:
                    rhs = _primal_rhs(d, rows)
                out = solver.resolve(rhs)
            self.lp_solves += 1
            if out.status != OPTIMAL:
                raise RuntimeError(f"primal program for pair {(i, j)} reported {out.status}")
            best = max(best, out.value)
        return best

    def __call__(self, d) -> np.ndarray:
        d = check_distance_matrix(d, self.m.n_states, symmetric=False)
        n = self.m.n_states
        out = zeros(n)
        for i, j in self.mismatch:
            out[i, j] = out[j, i] = Fraction(1)
        if self.mode == PRIMAL and self.n_jobs == 1:
            rows = _active_rows(d)
            for i, j in self.pairs:
                out[i, j] = out[j, i] = self._pair_primal(i, j, d, rows)
            return out
        jobs = [(self.alpha, d, self._dists[i], self._dists[j], self.mode) for i, j in self.pairs]
        if self.n_jobs == 1:
            values = [_pair_value(a) for a in jobs]
        else:
            with ProcessPoolExecutor(max_workers=self.n_jobs) as pool:
                values = list(pool.map(_pair_value, jobs, chunksize=max(1, len(jobs) // (4 * self.n_jobs))))
        self.lp_solves += 2 * len(jobs)
        for (i, j), v in zip(self.pairs, values):
            out[i, j] = out[j, i] = v
        return out


def gamma_apply(alpha, m: Lmc, d, mode: str = PRIMAL, n_jobs: int = 1) -> np.ndarray:
    """One application of Gamma: 1 on label mismatch, the lifting elsewhere."""
    d = check_distance_matrix(d, m.n_states)
    return GammaOperator(m, alpha, mode, n_jobs)(d)
