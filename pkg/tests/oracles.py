"""Slow, obviously-correct reference computations used by the tests."""

from __future__ import annotations

import itertools
from fractions import Fraction


def solve_square(a, b):
    """Unique solution of a square system over the rationals, or None."""
    n = len(b)
    rows = [[Fraction(x) for x in r] + [Fraction(v)] for r, v in zip(a, b)]
    for c in range(n):
        p = next((r for r in range(c, n) if rows[r][c] != 0), None)
        if p is None:
            return None
        rows[c], rows[p] = rows[p], rows[c]
        rows[c] = [v / rows[c][c] for v in rows[c]]
        for r in range(n):
            if r != c and rows[r][c]:
                f = rows[r][c]
                rows[r] = [x - f * y for x, y in zip(rows[r], rows[c])]
    return [r[n] for r in rows]


def vertex_max(objective, halfspaces):
    """Maximise over a bounded polytope ``{x : a.x <= b}`` by enumerating vertices.

    Returns ``(value, vertices)``; value is None when the polytope is empty.
    """
    n = len(objective)
    best, verts = None, []
    for combo in itertools.combinations(halfspaces, n):
        x = solve_square([a for a, _ in combo], [b for _, b in combo])
        if x is None:
            continue
        if all(sum(ai * xi for ai, xi in zip(a, x)) <= b for a, b in halfspaces):
            verts.append(tuple(x))
            v = sum(c * xi for c, xi in zip(objective, x))
            if best is None or v > best:
                best = v
    return best, verts


def box(n):
    out = []
    for i in range(n):
        e = [0] * n
        e[i] = 1
        out.append((list(e), 1))
        e[i] = -1
        out.append((list(e), 0))
    return out


def skewed_primal_brute(alpha, d, mu, nu):
    """Max over both directions of the potential program, by vertex enumeration."""
    n = len(mu)
    hs = box(n)
    for i in range(n):
        for j in range(n):
            a = [Fraction(0)] * n
            a[i] += 1
            a[j] -= alpha
            hs.append((a, d[i][j]))
    out = Fraction(0)
    for p, q in ((mu, nu), (nu, mu)):
        v, _ = vertex_max([p[i] - alpha * q[i] for i in range(n)], hs)
        out = max(out, v)
    return out


def tv_brute(alpha, p, q):
    """Max over every set of traces of max(P(E) - alpha Q(E), Q(E) - alpha P(E), 0)."""
    support = sorted(set(p) | set(q))
    best = Fraction(0)
    for r in range(len(support) + 1):
        for ev in itertools.combinations(support, r):
            a = sum((p.get(u, 0) for u in ev), Fraction(0))
            b = sum((q.get(u, 0) for u in ev), Fraction(0))
            best = max(best, a - alpha * b, b - alpha * a)
    return best
