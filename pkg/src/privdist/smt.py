"""SMT-LIB 2 export of the logical characterisations of the distance, and model checking.

Two scripts are produced:

* the least pre-fixed point formula (quantified linear real arithmetic):
  ``exists d. (forall f. phi(d, f)) and forall d2. ((forall f. phi(d2, f)) => d <= d2)``
* the threshold formula (purely existential, nonlinear because of the
  ``omega * d`` products): a pre-fixed point ``d`` whose transport plans are
  guessed alongside it, with ``d[s, s'] <= theta``.

Variables are named ``d_i_j``, ``f_i`` and ``d2_i_j`` after state indices.
Models returned by a solver are never trusted: :func:`validate_model` pulls
out ``d`` and re-checks it with exact arithmetic.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterator

import numpy as np

from privdist.fixpoint import Certificate, check_certificate
from privdist.kantorovich import DUAL
from privdist.lmc import Lmc, check_lmc
from privdist.rational import as_rational
from privdist.validation import check_alpha, check_pair


def smt_literal(x) -> str:
    """Real literal for a rational: ``1.0``, ``(/ 2.0 5.0)``, ``(- (/ 1.0 3.0))``."""
    x = as_rational(x)
    if x < 0:
        return f"(- {smt_literal(-x)})"
    if x.denominator == 1:
        return f"{x.numerator}.0"
    return f"(/ {x.numerator}.0 {x.denominator}.0)"


def _sum(terms: list[str]) -> str:
    if not terms:
        return "0.0"
    if len(terms) == 1:
        return terms[0]
    return "(+ " + " ".join(terms) + ")"


def _and(terms: list[str]) -> str:
    if not terms:
        return "true"
    if len(terms) == 1:
        return terms[0]
    return "(and " + " ".join(terms) + ")"


def _unit(v: str) -> str:
    return f"(<= 0.0 {v} 1.0)"


def _scaled(c: Fraction, v: str) -> str:
    return v if c == 1 else f"(* {smt_literal(c)} {v})"


def _expectation(dist: list[Fraction], f: list[str]) -> list[str]:
    return [_scaled(p, f[i]) for i, p in enumerate(dist) if p]


def _phi(m: Lmc, alpha: Fraction, d: str, f: list[str]) -> str:
    n = m.n_states
    a = smt_literal(alpha)
    lip = []
    for i in range(n):
        for j in range(n):
            lip.append(f"(<= (- {f[i]} (* {a} {f[j]})) {d}_{i}_{j})")
            lip.append(f"(<= (- {f[j]} (* {a} {f[i]})) {d}_{i}_{j})")
    lip_all = _and(lip)
    parts = []
    for s in range(n):
        for t in range(n):
            if m.labels[s] != m.labels[t]:
                parts.append(f"(= {d}_{s}_{t} 1.0)")
                continue
            es = _sum(_expectation(m.distribution(s), f))
            et = _sum(_expectation(m.distribution(t), f))
            concl = _and([
                f"(<= (- {es} (* {a} {et})) {d}_{s}_{t})",
                f"(<= (- {et} (* {a} {es})) {d}_{s}_{t})",
            ])
            parts.append(f"(=> {lip_all} {concl})")
    return _and(parts)


def _header(logic: str, comment: str) -> list[str]:
    return [f"; {comment}", "(set-option :produce-models true)", f"(set-logic {logic})"]


def _footer() -> list[str]:
    return ["(check-sat)", "(get-model)"]


def export_lfp_formula(alpha, m: Lmc) -> str:
    """Script whose models assign ``d_i_j`` the least pre-fixed point of Gamma."""
    check_lmc(m)
    alpha = check_alpha(alpha)
    n = m.n_states
    f = [f"f_{i}" for i in range(n)]
    dvars = [f"d_{i}_{j}" for i in range(n) for j in range(n)]
    d2vars = [f"d2_{i}_{j}" for i in range(n) for j in range(n)]
    f_binder = " ".join(f"({v} Real)" for v in f)
    f_range = _and([_unit(v) for v in f])
    out = _header("LRA", f"least pre-fixed point, {n} states")
    out += [f"(declare-const {v} Real)" for v in dvars]
    out += [f"(assert {_unit(v)})" for v in dvars]
    out.append(f"(assert (forall ({f_binder}) (=> {f_range} {_phi(m, alpha, 'd', f)})))")
    d2_binder = " ".join(f"({v} Real)" for v in d2vars)
    d2_range = _and([_unit(v) for v in d2vars])
    inner = f"(forall ({f_binder}) (=> {f_range} {_phi(m, alpha, 'd2', f)}))"
    below = _and([f"(<= {a} {b})" for a, b in zip(dvars, d2vars)])
    out.append(f"(assert (forall ({d2_binder}) (=> (and {d2_range} {inner}) {below})))")
    return "\n".join(out + _footer()) + "\n"


def _prefixed1(m: Lmc, alpha: Fraction, q: int, r: int, x: str) -> tuple[list[str], list[str]]:
    # transport plan from mu_q to mu_r costing at most x
    n = m.n_states
    mu, nu = m.distribution(q), m.distribution(r)
    tag = f"{q}_{r}"
    om = [[f"om_{tag}_{i}_{j}" for j in range(n)] for i in range(n)]
    ga = [f"ga_{tag}_{i}" for i in range(n)]
    ta = [f"ta_{tag}_{i}" for i in range(n)]
    et = [f"et_{tag}_{i}" for i in range(n)]
    decls = [v for row in om for v in row] + ga + ta + et
    inv = smt_literal(1 / alpha)
    facts = [_unit(v) for v in decls]
    cost = [f"(* {om[i][j]} d_{i}_{j})" for i in range(n) for j in range(n)] + et
    facts.append(f"(<= {_sum(cost)} {x})")
    for i in range(n):
        facts.append(f"(= (+ {_sum(om[i])} (- {ta[i]} {ga[i]}) {et[i]}) {smt_literal(mu[i])})")
    for j in range(n):
        col = _sum([om[i][j] for i in range(n)])
        facts.append(f"(<= (+ {col} (* {inv} (- {ta[j]} {ga[j]}))) {smt_literal(nu[j])})")
    return decls, facts


def export_threshold_formula(alpha, m: Lmc, s, s_prime, theta) -> str:
    """Existential script, satisfiable iff the distance between ``s`` and ``s_prime`` is at most ``theta``."""
    check_lmc(m)
    alpha = check_alpha(alpha)
    theta = as_rational(theta)
    if not 0 <= theta <= 1:
        raise ValueError("theta must lie in [0, 1]")
    i0, j0 = check_pair(m, (s, s_prime))
    n = m.n_states
    out = _header("QF_NRA", f"threshold d_{i0}_{j0} <= {theta}, {n} states")
    dvars = [f"d_{i}_{j}" for i in range(n) for j in range(n)]
    out += [f"(declare-const {v} Real)" for v in dvars]
    out += [f"(assert {_unit(v)})" for v in dvars]
    # symmetric distances: lets a model be read back as one matrix
    out += [f"(assert (= d_{i}_{j} d_{j}_{i}))" for i in range(n) for j in range(i + 1, n)]
    done = set()
    for q in range(n):
        for r in range(n):
            if m.labels[q] != m.labels[r]:
                out.append(f"(assert (= d_{q}_{r} 1.0))")
                continue
            for a, b in ((q, r), (r, q)):
                if (a, b) in done:
                    continue
                done.add((a, b))
                decls, facts = _prefixed1(m, alpha, a, b, f"d_{a}_{b}")
                out += [f"(declare-const {v} Real)" for v in decls]
                out.append(f"(assert {_and(facts)})")
    out.append(f"(assert (<= d_{i0}_{j0} {smt_literal(theta)}))")
    return "\n".join(out + _footer()) + "\n"


# -- reading scripts and models ----------------------------------------------

_TOKEN = re.compile(r'\s*(?:(;[^\n]*)|(\()|(\))|("(?:[^"]|"")*")|(\|[^|]*\|)|([^\s()";|]+))')


def _tokens(text: str) -> Iterator[str]:
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        mt = _TOKEN.match(text, pos)
        if mt is None or mt.end() == pos:
            raise ValueError(f"unexpected character at offset {pos}: {text[pos]!r}")
        pos = mt.end()
        if mt.group(1):
            continue
        yield mt.group(0).strip()


def parse_sexprs(text: str) -> list:
    """Parse SMT-LIB text into nested lists of atoms (strings)."""
    stack: list[list] = [[]]
    for tok in _tokens(text):
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) == 1:
                raise ValueError("unbalanced ')'")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise ValueError("unbalanced '('")
    return stack[0]


def _value(expr) -> Fraction:
    if isinstance(expr, str):
        if not re.fullmatch(r"-?\d+(\.\d+)?", expr):
            raise ValueError(f"not a rational literal: {expr!r}")
        return Fraction(expr)
    if not expr:
        raise ValueError("empty expression")
    head, *args = expr
    vals = [_value(a) for a in args]
    if head == "-" and len(vals) == 1:
        return -vals[0]
    if head == "-" and len(vals) == 2:
        return vals[0] - vals[1]
    if head == "/" and len(vals) == 2:
        if vals[1] == 0:
            raise ValueError("division by zero in model value")
        return vals[0] / vals[1]
    if head == "+" and vals:
        return sum(vals, Fraction(0))
    raise ValueError(f"not a rational value: {expr!r}")


def _assignments(model: str) -> dict[str, Fraction]:
    out: dict[str, Fraction] = {}
    text = model.strip()
    if not text:
        return out
    if text.startswith("(") or "define-fun" in text:
        exprs = parse_sexprs(text)
        if exprs and isinstance(exprs[0], str) and exprs[0] == "sat":
            exprs = exprs[1:]
        if len(exprs) == 1 and isinstance(exprs[0], list) and exprs[0] and exprs[0][0] != "define-fun":
            exprs = exprs[0][1:] if exprs[0][0] == "model" else exprs[0]
        for e in exprs:
            if isinstance(e, list) and len(e) == 5 and e[0] == "define-fun" and e[2] == []:
                try:
                    out[e[1]] = _value(e[4])
                except ValueError as err:
                    raise ValueError(f"{e[1]}: {err}") from None
        return out
    for k, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {k}: expected 'name = value'")
        name, raw = (p.strip() for p in line.split("=", 1))
        try:
            out[name] = Fraction(raw)
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"line {k}: {name}: not a rational value: {raw!r}") from None
    return out


def model_matrix(m: Lmc, model: str) -> np.ndarray:
    """The ``d_i_j`` part of a model as a matrix; other variables are ignored."""
    values = _assignments(model)
    n = m.n_states
    missing = [f"d_{i}_{j}" for i in range(n) for j in range(n) if f"d_{i}_{j}" not in values]
    if missing:
        raise ValueError("model is missing variables: " + ", ".join(missing))
    d = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            d[i, j] = values[f"d_{i}_{j}"]
    return d


def validate_model(m: Lmc, alpha, model: str, mode: str = DUAL) -> Certificate:
    """Extract ``d`` from a solver model and check it is a pre-fixed point.

    Accepts ``(define-fun d_0_1 () Real ...)`` output or ``d_0_1 = 1/5``
    lines.  Raises ValueError for missing variables, non-rational values and
    out-of-range or asymmetric matrices.
    """
    check_lmc(m)
    alpha = check_alpha(alpha)
    return check_certificate(alpha, m, model_matrix(m, model), mode)


def model_text(d: np.ndarray) -> str:
    """``d_i_j = num/den`` lines for a matrix, readable by :func:`validate_model`."""
    n = d.shape[0]
    return "".join(f"d_{i}_{j} = {as_rational(d[i, j])}\n" for i in range(n) for j in range(n))
