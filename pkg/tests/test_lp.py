import logging
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import vertex_max
from privdist.lp import INFEASIBLE, Constraint, OPTIMAL, UNBOUNDED, LinearProgram, SimplexSolver, solve

F = Fraction


def lp_of(objective, rows, bounds=None):
    lp = LinearProgram(len(objective), objective, bounds=bounds)
    for coeffs, rel, rhs in rows:
        lp.add_row(dict(enumerate(coeffs)), rel, rhs)
    return lp


def test_trivial_examples():
    out = solve(lp_of([1], [([1], "<=", 1)], [(0, 1)]))
    assert out.status == OPTIMAL and out.value == 1
    out = solve(lp_of([1, 1], [([1, 1], "<=", F(1, 2))], [(0, 1), (0, 1)]))
    assert out.value == F(1, 2)


def test_textbook_example_against_vertices():
    rows = [([1, 1], "<=", 4), ([1, 3], "<=", 6)]
    out = solve(lp_of([3, 2], rows))
    hs = [([1, 1], 4), ([1, 3], 6), ([-1, 0], 0), ([0, -1], 0)]
    value, verts = vertex_max([3, 2], hs)
    assert len(verts) <= 6
    assert out.value == value == 12
    assert out.solution == [4, 0]


def test_equality_and_ge_rows():
    lp = lp_of([1, 2], [([1, 1], "=", 1), ([1, 0], ">=", F(1, 3))], [(0, 1), (0, 1)])
    out = solve(lp)
    assert out.value == F(5, 3)
    assert out.solution == [F(1, 3), F(2, 3)]
    assert lp.is_feasible_point(out.solution)


def test_infeasible_and_unbounded_are_statuses():
    assert solve(lp_of([1], [([1], ">=", 2)], [(0, 1)])).status == INFEASIBLE
    assert solve(lp_of([1, 1], [([1, -1], "<=", 1)])).status == UNBOUNDED
    assert solve(lp_of([1], [([1], "=", -1)])).status == INFEASIBLE


def test_nonzero_lower_bounds_and_redundant_equalities():
    lp = lp_of([1, 1], [([1, 1], "=", 3), ([2, 2], "=", 6)], [(1, 5), (F(1, 2), 2)])
    out = solve(lp)
    assert out.status == OPTIMAL and out.value == 3
    assert lp.is_feasible_point(out.solution)


def test_bad_programs_rejected():
    with pytest.raises(ValueError):
        LinearProgram(2, [1])
    with pytest.raises(ValueError):
        LinearProgram(1, [1], bounds=[(1, 0)])
    lp = LinearProgram(1, [1])
    with pytest.raises(ValueError):
        lp.add_row({3: 1}, "<=", 1)
    with pytest.raises(ValueError):
        lp.add_row({0: 1}, "<", 1)


def test_debug_logs_trajectory(caplog):
    with caplog.at_level(logging.DEBUG, logger="privdist.lp"):
        solve(lp_of([3, 2], [([1, 1], "<=", 4), ([1, 3], "<=", 6)]), debug=True)
    assert any("pivot" in r.message for r in caplog.records)


small = st.fractions(min_value=-3, max_value=3, max_denominator=6)


@st.composite
def box_programs(draw):
    n = draw(st.integers(1, 3))
    m = draw(st.integers(0, 4))
    obj = [draw(small) for _ in range(n)]
    rows = []
    for _ in range(m):
        rows.append(([draw(small) for _ in range(n)], draw(st.sampled_from(["<=", ">=", "="])), draw(small)))
    ups = [draw(st.fractions(min_value=0, max_value=2, max_denominator=4)) for _ in range(n)]
    return obj, rows, [(F(0), u) for u in ups]


@settings(max_examples=250, deadline=None)
@given(box_programs())
def test_matches_vertex_enumeration(prog):
    obj, rows, bounds = prog
    lp = lp_of(obj, rows, bounds)
    out = solve(lp)
    n = len(obj)
    hs = []
    for k, (lo, hi) in enumerate(bounds):
        e = [0] * n
        e[k] = 1
        hs.append((list(e), hi))
        e[k] = -1
        hs.append((list(e), -lo))
    for a, rel, b in rows:
        if rel in ("<=", "="):
            hs.append((a, b))
        if rel in (">=", "="):
            hs.append(([-x for x in a], -b))
    value, _ = vertex_max(obj, hs)
    if value is None:
        assert out.status == INFEASIBLE
    else:
        assert out.status == OPTIMAL
        assert out.value == value
        assert lp.is_feasible_point(out.solution)
        # the reported point is a vertex
        _, verts = vertex_max(obj, hs)
        assert tuple(out.solution) in verts


def test_weak_duality_against_hand_built_dual():
    # max c.x, A x <= b, x >= 0; any y >= 0 with A^T y >= c bounds it by b.y
    rng = random.Random(3)
    for _ in range(50):
        A = [[F(rng.randint(0, 4)) for _ in range(3)] for _ in range(3)]
        b = [F(rng.randint(1, 6)) for _ in range(3)]
        c = [F(rng.randint(0, 3)) for _ in range(3)]
        out = solve(lp_of(c, [(r, "<=", v) for r, v in zip(A, b)]))
        y = [F(rng.randint(0, 5)) for _ in range(3)]
        if all(sum(A[i][j] * y[i] for i in range(3)) >= c[j] for j in range(3)):
            assert out.status == OPTIMAL
            assert out.value <= sum(bi * yi for bi, yi in zip(b, y))


def test_deterministic_vertex():
    lp = lp_of([1, 1, 1], [([1, 1, 1], "<=", 1)], [(0, 1)] * 3)
    sols = {tuple(solve(lp).solution) for _ in range(5)}
    assert len(sols) == 1


@settings(max_examples=100, deadline=None)
@given(box_programs(), st.lists(small, min_size=4, max_size=4))
def test_warm_resolve_equals_cold_solve(prog, new_rhs):
    obj, rows, bounds = prog
    solver = SimplexSolver(lp_of(obj, rows, bounds))
    solver.solve()
    # right-hand sides refer to the stored rows (">=" rows are kept negated)
    rhs = [new_rhs[k] for k in range(len(rows))]
    warm = solver.resolve(rhs)
    stored = [Constraint(r.coeffs, r.relation, v) for r, v in zip(solver.lp.rows, rhs)]
    cold = solve(LinearProgram(len(obj), obj, stored, bounds))
    assert warm.status == cold.status
    if cold.status == OPTIMAL:
        assert warm.value == cold.value
        assert solver.lp.is_feasible_point(warm.solution)


def test_value_map_is_affine_in_rhs():
    rows = [([1, 1], "<=", 4), ([1, 3], "<=", 6)]
    solver = SimplexSolver(lp_of([3, 2], rows))
    solver.solve()
    y, c = solver.value_map()
    assert y[0] * 4 + y[1] * 6 + c == 12
    out = solver.resolve([F(9, 2), 6])
    assert out.value == y[0] * F(9, 2) + y[1] * 6 + c
