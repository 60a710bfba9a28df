"""End-to-end acceptance checks; each test is one criterion and reports PASS/FAIL in the summary."""

import random
import re
from fractions import Fraction

import numpy as np

from conftest import DC_ALPHA, random_distance, random_distribution
from oracles import skewed_primal_brute, tv_brute
from privdist.distance import SkewedBisimilarityDistance, exact_value
from privdist.fixpoint import check_certificate, kleene_iterate, recover
from privdist.kantorovich import GammaOperator, kantorovich_dual, kantorovich_primal, ones_certificate
from privdist.lmc import bisimilarity_partition, horizon_distribution
from privdist.models import DiningConfig, generate_dining, generate_random
from privdist.rational import best_rational_in_interval
from privdist.smt import export_lfp_formula, export_threshold_formula, validate_model
from privdist.tv import tv_lower_bound

F = Fraction
ALPHAS = [F(1), F(11, 10), F(3, 2), F(2)]


def test_criterion_01_fork_golden(fork):
    assert not bisimilarity_partition(fork).same_block(0, 1)
    r = exact_value(F(3, 2), fork, "s0", "s1")
    assert r.exact and r.value == 0
    for h in range(7):
        assert tv_lower_bound(F(3, 2), fork, "s0", "s1", h).value == 0
    est = SkewedBisimilarityDistance(alpha=F(3, 2)).fit(fork)
    assert est.predict([("s0", "s2"), ("s2", "s3")]) == [1, 1]
    assert est.is_exact(("s0", "s2")) and est.is_exact(("s2", "s3"))


def test_criterion_02_dining_golden(dc2, dc2_fit):
    m, (s, t) = dc2
    assert dc2_fit.is_exact((s, t))
    bd = dc2_fit.predict([(s, t)])[0]
    assert bd == F(1, 2500)
    # every trace is absorbed by step n + 2, so horizon 5 sees whole runs
    tv = tv_lower_bound(DC_ALPHA, m, s, t, 5).value
    assert tv == F(7501, 25000000)
    assert tv <= bd


def test_criterion_03_strong_duality():
    rng = random.Random(303)
    count = 0
    while count < 220:
        n = rng.randint(1, 6)
        m = generate_random(n, rng.randint(1, 3), density=F(rng.randint(1, 3), 3), seed=rng.randrange(10**6))
        d = random_distance(rng, n)
        q, r = rng.randrange(n), rng.randrange(n)
        alpha = rng.choice(ALPHAS + [F(rng.randint(10, 40), 10)])
        mu, nu = m.distribution(q), m.distribution(r)
        assert kantorovich_primal(alpha, d, mu, nu)[0] == kantorovich_dual(alpha, d, mu, nu)[0]
        # also on distributions that do not come from a chain row
        mu, nu = random_distribution(rng, n), random_distribution(rng, n)
        assert kantorovich_primal(alpha, d, mu, nu)[0] == kantorovich_dual(alpha, d, mu, nu)[0]
        count += 2
    assert count >= 200


def test_criterion_04_soundness_sandwich(corpus):
    checked = 0
    for m in corpus:
        n = m.n_states
        for alpha in (F(1), F(3, 2)):
            op = GammaOperator(m, alpha)
            kl = kleene_iterate(alpha, m, keep_iterates=True, operator=op)
            up = recover(alpha, m, kl, operator=op).upper
            assert (op(up) <= up).all()
            for low in kl.iterates:
                assert (low <= op(low)).all()
                assert (low <= up).all()
            for i in range(n):
                for j in range(n):
                    for h in range(5):
                        assert tv_lower_bound(alpha, m, i, j, h).value <= up[i, j]
            checked += 1
    assert checked == 2 * len(corpus)


def test_criterion_05_bisimilarity_kernel(corpus):
    for m in corpus:
        part = bisimilarity_partition(m)
        est = SkewedBisimilarityDistance(alpha=1).fit(m)
        for i in range(m.n_states):
            for j in range(m.n_states):
                assert est.is_exact((i, j))
                assert (est.upper_[i, j] == 0) == part.same_block(i, j)
    fair, (s, t) = generate_dining(DiningConfig(2, F(1, 2)))
    assert bisimilarity_partition(fair).same_block(fair.index(s), fair.index(t))
    for alpha in (F(1), F(3, 2), F(2)):
        r = exact_value(alpha, fair, s, t)
        assert r.exact and r.value == 0


def test_criterion_06_antimonotone_in_alpha(corpus):
    pairs = 0
    for m in corpus:
        fits = [SkewedBisimilarityDistance(alpha=a).fit(m) for a in ALPHAS]
        for i in range(m.n_states):
            for j in range(i + 1, m.n_states):
                if all(f.is_exact((i, j)) for f in fits):
                    vals = [f.upper_[i, j] for f in fits]
                    assert all(a >= b for a, b in zip(vals, vals[1:])), (m.names, i, j, vals)
                    pairs += 1
    assert pairs >= 50


def test_criterion_07_brute_force_equivalence():
    rng = random.Random(707)
    for _ in range(40):
        n = rng.randint(1, 3)
        m = generate_random(n, rng.randint(1, 2), density=F(rng.randint(1, 2), 2), seed=rng.randrange(10**6))
        d = random_distance(rng, n)
        dd = [[d[i, j] for j in range(n)] for i in range(n)]
        alpha = rng.choice(ALPHAS)
        q, r = rng.randrange(n), rng.randrange(n)
        mu, nu = m.distribution(q), m.distribution(r)
        assert kantorovich_primal(alpha, d, mu, nu)[0] == skewed_primal_brute(alpha, dd, mu, nu)
    events = 0
    for _ in range(60):
        m = generate_random(rng.randint(2, 4), rng.randint(2, 3), density=F(1, 2), seed=rng.randrange(10**6))
        alpha = rng.choice(ALPHAS)
        s, t = rng.randrange(m.n_states), rng.randrange(m.n_states)
        for h in range(1, 6):
            p = horizon_distribution(m, s, h).mass
            q = horizon_distribution(m, t, h).mass
            if len(set(p) | set(q)) > 12:
                break
            assert tv_lower_bound(alpha, m, s, t, h).value == tv_brute(alpha, p, q)
            events += 1
    assert events >= 100


def test_criterion_08_certificate_falsification(corpus, fork):
    lowered = 0
    for m in corpus + [fork]:
        for alpha in (F(1), F(3, 2)):
            assert check_certificate(alpha, m, ones_certificate(m)).checked
            est = SkewedBisimilarityDistance(alpha=alpha).fit(m)
            if not est.exact_.all():
                continue
            d = est.upper_
            assert check_certificate(alpha, m, d).checked
            for i in range(m.n_states):
                for j in range(i, m.n_states):
                    if d[i, j] > 0:
                        low = d.copy()
                        low[i, j] = low[j, i] = d[i, j] * F(9, 10)
                        assert not check_certificate(alpha, m, low).checked, (i, j)
                        lowered += 1
    assert lowered >= 50


def test_criterion_09_continued_fraction_recovery():
    rng = random.Random(909)
    half = F(1, 2 * 10**7)
    for _ in range(100):
        den = rng.randint(1, 1000)
        r = F(rng.randint(0, den), den)
        assert best_rational_in_interval(r - half, r + half) == r


# a generic SMT-LIB reader, independent of the one shipped with the package
_TOKEN = re.compile(r"\s*(\(|\)|;[^\n]*|[^\s()]+)")
_COMMANDS = {"set-option", "set-logic", "declare-const", "declare-fun", "assert", "check-sat", "get-model"}
_SYMBOL = re.compile(r"[A-Za-z~!@$%^&*_+=<>.?/\-][0-9A-Za-z~!@$%^&*_+=<>.?/\-]*|\d+(\.\d+)?|:[\w\-]+")


def generic_parse(text):
    stack = [[]]
    pos = 0
    while True:
        mt = _TOKEN.match(text, pos)
        if mt is None or mt.end() == pos:
            assert text[pos:].strip() == ""
            break
        pos = mt.end()
        tok = mt.group(1)
        if tok.startswith(";"):
            continue
        if tok == "(":
            stack.append([])
        elif tok == ")":
            top = stack.pop()
            stack[-1].append(top)
        else:
            assert _SYMBOL.fullmatch(tok), tok
            stack[-1].append(tok)
    assert len(stack) == 1
    for cmd in stack[0]:
        assert isinstance(cmd, list) and cmd[0] in _COMMANDS, cmd
    return stack[0]


def test_criterion_10_formula_export_round_trip(fork):
    for script in (
        export_lfp_formula(F(3, 2), fork),
        export_threshold_formula(F(3, 2), fork, "s0", "s1", 0),
    ):
        tree = generic_parse(script)
        assert tree[-2:] == [["check-sat"], ["get-model"]]
    d = np.empty((4, 4), dtype=object)
    for i in range(4):
        for j in range(4):
            d[i, j] = F(0) if fork.labels[i] == fork.labels[j] else F(1)
    model = "\n".join(f"(define-fun d_{i}_{j} () Real {float(d[i, j])})" for i in range(4) for j in range(4))
    assert validate_model(fork, F(3, 2), "(model\n" + model + "\n)").checked
