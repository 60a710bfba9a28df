from __future__ import annotations

import random
from fractions import Fraction

import numpy as np
import pytest

from privdist.lmc import Lmc, parse_lmc
from privdist.models import DiningConfig, generate_dining, generate_random

FORK_TEXT = """\
lmc v1
alphabet a b c
state s0 a
state s1 a
state s2 b
state s3 c
trans s0 s2 2/5
trans s0 s3 3/5
trans s1 s2 3/5
trans s1 s3 2/5
trans s2 s2 1
trans s3 s3 1
"""

DC_ALPHA = Fraction(10002, 10000)


def with_twin(m: Lmc, s: int) -> Lmc:
    """Append a copy of state ``s`` (same label, same row); the copy is bisimilar to it."""
    rows = [dict(r) for r in m.rows]
    rows.append(dict(m.rows[s]))
    labels = list(m.labels) + [m.labels[s]]
    names = list(m.names) + [m.names[s] + "_twin"]
    return Lmc.from_rows(labels, rows, names=names, alphabet=m.alphabet)


def build_corpus() -> list[Lmc]:
    out = []
    rng = random.Random(2024)
    for seed in range(10):
        n = 3 + seed % 3
        m = generate_random(n, 1 + seed % 2, density=Fraction(1, 2) if seed % 2 else 1, seed=seed)
        if seed % 3 == 0:
            m = with_twin(m, rng.randrange(n))
        out.append(m)
    return out


def random_distance(rng: random.Random, n: int, max_den: int = 12) -> np.ndarray:
    d = np.empty((n, n), dtype=object)
    for i in range(n):
        d[i, i] = Fraction(0)
        for j in range(i + 1, n):
            den = rng.randint(1, max_den)
            d[i, j] = d[j, i] = Fraction(rng.randint(0, den), den)
    return d


def random_distribution(rng: random.Random, n: int, zeros: bool = True) -> list[Fraction]:
    w = [rng.randint(0 if zeros else 1, 6) for _ in range(n)]
    if sum(w) == 0:
        w[rng.randrange(n)] = 1
    t = sum(w)
    return [Fraction(x, t) for x in w]


@pytest.fixture(scope="session")
def fork() -> Lmc:
    return parse_lmc(FORK_TEXT)


@pytest.fixture(scope="session")
def dc2():
    return generate_dining(DiningConfig(2, Fraction(49, 100)))


@pytest.fixture(scope="session")
def corpus() -> list[Lmc]:
    return build_corpus()


# -- acceptance summary --------------------------------------------------------

_criteria: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid or "test_criterion_" not in report.nodeid:
        return
    if report.when == "call" or report.outcome != "passed":
        name = report.nodeid.split("::")[-1]
        if name not in _criteria or report.outcome != "passed":
            _criteria[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_criteria):
        num = int(name.split("_")[2])
        title = name.split("_", 3)[3].replace("_", " ")
        verdict = "PASS" if _criteria[name] == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {num:2d} {verdict}  {title}")


LEAKY_TEXT = """\
lmc v1
alphabet a b
state x a
state y a
state z b
trans x x 1/2
trans x z 1/2
trans y y 1/3
trans y z 2/3
trans z z 1
"""


@pytest.fixture(scope="session")
def leaky() -> Lmc:
    """Two self-looping states leaking into an absorbing one at different rates."""
    return parse_lmc(LEAKY_TEXT)


@pytest.fixture(scope="session")
def dc2_fit(dc2):
    from privdist.distance import SkewedBisimilarityDistance

    return SkewedBisimilarityDistance(alpha=DC_ALPHA).fit(dc2[0])
