from fractions import Fraction

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from conftest import DC_ALPHA
from privdist.distance import NO, UNKNOWN, YES, SkewedBisimilarityDistance, delta_bound, exact_value, threshold
from privdist.kantorovich import DUAL

F = Fraction


def test_estimator_params_and_clone():
    est = SkewedBisimilarityDistance(alpha=F(3, 2), mode=DUAL)
    params = est.get_params()
    assert params["alpha"] == F(3, 2) and params["mode"] == DUAL
    assert clone(est).get_params() == params
    with pytest.raises(NotFittedError):
        est.predict([("s0", "s1")])


def test_estimator_fork(fork):
    est = SkewedBisimilarityDistance(alpha=1).fit(fork)
    assert est.converged_ and est.n_iter_ == 2
    assert est.predict([("s0", "s1"), ("s2", "s3"), (0, 0)]) == [F(1, 5), 1, 0]
    assert est.is_exact(("s0", "s1"))
    b = est.bounds()
    assert (b.lower == b.upper).all()
    with pytest.raises(KeyError):
        est.predict([("s0", "nope")])


def test_estimator_rejects_bad_alpha(fork):
    with pytest.raises(ValueError):
        SkewedBisimilarityDistance(alpha=F(9, 10)).fit(fork)


def test_exact_value_examples(fork, leaky):
    r = exact_value(F(3, 2), fork, "s0", "s1")
    assert r.value == 0 and r.exact and r.proof == "fixed-point"
    assert exact_value(1, fork, "s0", "s1").value == F(1, 5)
    assert exact_value(1, fork, "s1", "s1").value == 0
    r = exact_value(F(3, 2), leaky, "x", "y")
    assert r.value == F(1, 4) and r.proof == "recovered"
    assert r.lower < F(1, 4) == r.upper


def test_modes_agree(leaky, fork):
    for m in (leaky, fork):
        a = SkewedBisimilarityDistance(alpha=F(6, 5)).fit(m)
        b = SkewedBisimilarityDistance(alpha=F(6, 5), mode=DUAL, certificate_mode="primal").fit(m)
        assert (a.upper_ == b.upper_).all()


def test_dining_exact(dc2, dc2_fit):
    m, (s, t) = dc2
    assert dc2_fit.predict([(s, t)]) == [F(1, 2500)]
    assert dc2_fit.is_exact((s, t))
    assert dc2_fit.certificate_.checked


def test_threshold_fork(fork):
    assert threshold(1, fork, "s0", "s1", F(1, 5)).answer == YES
    r = threshold(1, fork, "s0", "s1", F(1, 6))
    assert r.answer == NO and r.lower == F(1, 5) and r.iteration == 2
    assert threshold(F(3, 2), fork, "s0", "s1", 0).answer == YES
    r = threshold(1, fork, "s0", "s2", 1)
    assert r.answer == YES and r.certificate.checked
    with pytest.raises(ValueError):
        threshold(1, fork, "s0", "s1", F(3, 2))


def test_threshold_dining(dc2):
    m, (s, t) = dc2
    r = threshold(DC_ALPHA, m, s, t, F(3, 10000))
    assert r.answer == NO and r.lower > F(3, 10000)
    assert (r.iterate[m.index(s), m.index(t)]) == r.lower


def test_threshold_unknown_when_budget_is_tiny(leaky):
    r = threshold(1, leaky, "x", "y", F(1, 4) - F(1, 10**12), max_iter=3)
    assert r.answer == UNKNOWN
    assert r.lower < F(1, 4) - F(1, 10**12) < F(1, 4) <= r.upper


def test_delta_bound(fork, leaky):
    assert delta_bound(fork, [("s0", "s1")], epsilon=0).max == F(1, 5)
    assert delta_bound(fork, [("s0", "s1")], alpha=F(3, 2)).max == 0
    b = delta_bound(leaky, [("x", "y"), ("x", "x")], epsilon=F(1, 10))
    assert b.max == F(1, 4) and b.alpha > 1 and all(p.exact for p in b.pairs)
    with pytest.raises(ValueError):
        delta_bound(fork, [("s0", "s1")])
    with pytest.raises(ValueError):
        delta_bound(fork, [("s0", "s1")], epsilon=1, alpha=2)
    with pytest.raises(ValueError):
        delta_bound(fork, [], epsilon=1)


def test_delta_bound_dining(dc2):
    m, (s, t) = dc2
    assert delta_bound(m, [(s, t)], alpha=DC_ALPHA).max == F(1, 2500)


def test_bisimilar_pair_has_zero_delta():
    from conftest import with_twin
    from privdist.models import generate_random

    m = with_twin(generate_random(3, 2, seed=4), 1)
    b = delta_bound(m, [(1, 3)], epsilon=0)
    assert b.max == 0 and b.alpha == 1
    est = SkewedBisimilarityDistance(alpha=1).fit(m)
    assert np.all(est.upper_ == est.upper_.T)
