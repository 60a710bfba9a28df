"""Benchmark chains: the n-party dining cryptographers protocol and seeded random chains."""

from __future__ import annotations

import math
import random
import string
from collections import defaultdict, deque
from dataclasses import dataclass
from fractions import Fraction

from privdist.lmc import Lmc
from privdist.rational import RationalLike, as_rational

AGREE, DISAGREE = "agree", "disagree"
INIT, DONE = "init", "done"


@dataclass(frozen=True)
class DiningConfig:
    n: int
    p: Fraction

    def __post_init__(self):
        object.__setattr__(self, "p", as_rational(self.p))
        if self.n < 2:
            raise ValueError(f"need at least 2 cryptographers, got {self.n}")
        if not 0 < self.p < 1:
            raise ValueError(f"coin bias must lie strictly between 0 and 1, got {self.p}")


def _coin(flip: bool) -> str:
    return "H" if flip else "T"


def generate_dining(cfg: DiningConfig) -> tuple[Lmc, list[str]]:
    """Chain simulating the protocol once for every possible payer.

    A state after cryptographer ``k`` has spoken is identified by
    ``(payer, k, last flip, first flip, announcement)``; the announcement is
    its label.  Coin values never appear in labels.  Returns the chain and the
    start-state names, ``start_states[k]`` being the entry point where
    cryptographer ``k`` paid.
    """
    n, p = cfg.n, cfg.p
    flips = ((True, p), (False, 1 - p))
    starts = [("start", k) for k in range(n)]

    def announce(payer: int, who: int, prev: bool, this: bool) -> str:
        same = prev == this
        said = same if who == payer else not same
        return AGREE if said else DISAGREE

    def successors(key) -> dict[tuple, Fraction]:
        out: dict[tuple, Fraction] = defaultdict(Fraction)
        if key == (DONE,):
            out[key] += 1
        elif key[0] == "start":
            payer = key[1]
            # cryptographer 0 compares the first coin with the second one
            for first, pf in flips:
                for this, pt in flips:
                    out[(payer, 0, this, first, announce(payer, 0, first, this))] += pf * pt
        else:
            payer, k, prev, first, _ = key
            if k == n - 1:
                out[(DONE,)] += 1
            elif k + 1 == n - 1:
                # the last cryptographer reuses the first coin
                out[(payer, k + 1, first, first, announce(payer, k + 1, prev, first))] += 1
            else:
                for this, pt in flips:
                    out[(payer, k + 1, this, first, announce(payer, k + 1, prev, this))] += pt
        return out

    order: list[tuple] = []
    edges: dict[tuple, dict[tuple, Fraction]] = {}
    queue = deque(starts)
    seen = set(starts)
    while queue:
        key = queue.popleft()
        order.append(key)
        edges[key] = successors(key)
        for nxt in sorted(edges[key], key=repr):
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)

    def name(key) -> str:
        if key == (DONE,):
            return DONE
        if key[0] == "start":
            return f"start{key[1]}"
        payer, k, prev, first, lab = key
        return f"pay{payer}_c{k}_{_coin(prev)}{_coin(first)}_{lab}"

    def label(key) -> str:
        if key == (DONE,):
            return DONE
        if key[0] == "start":
            return INIT
        return key[4]

    index = {key: i for i, key in enumerate(order)}
    rows = [{index[t]: w for t, w in edges[key].items()} for key in order]
    m = Lmc.from_rows(
        [label(k) for k in order],
        rows,
        names=[name(k) for k in order],
        alphabet=[INIT, AGREE, DISAGREE, DONE],
    )
    return m, [name(k) for k in starts]


def _alphabet(size: int) -> list[str]:
    if size <= len(string.ascii_lowercase):
        return list(string.ascii_lowercase[:size])
    return [f"a{i}" for i in range(size)]


def generate_random(
    states: int,
    alphabet_size: int,
    density: RationalLike = 1,
    seed: int = 0,
    max_weight: int = 9,
) -> Lmc:
    """Seeded random chain with small-denominator rows.

    Each row has ``ceil(density * states)`` nonzero entries whose masses are
    integer weights in ``1..max_weight`` normalised to sum to exactly 1.
    """
    density = as_rational(density)
    if states < 1 or alphabet_size < 1:
        raise ValueError("states and alphabet_size must be positive")
    if not 0 < density <= 1:
        raise ValueError("density must lie in (0, 1]")
    rng = random.Random(seed)
    alphabet = _alphabet(alphabet_size)
    labels = [rng.choice(alphabet) for _ in range(states)]
    k = math.ceil(density * states)
    rows = []
    for _ in range(states):
        targets = sorted(rng.sample(range(states), k))
        weights = [rng.randint(1, max_weight) for _ in targets]
        total = sum(weights)
        rows.append({t: Fraction(w, total) for t, w in zip(targets, weights)})
    return Lmc.from_rows(labels, rows, alphabet=alphabet)
