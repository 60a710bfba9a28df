"""Labelled Markov chains: model, text/JSON I/O, trace distributions, bisimilarity."""

from __future__ import annotations

import json
import os
import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from privdist.rational import as_rational, format_rational, parse_rational


DEFAULT_EXPLOSION_LIMIT = 10**6
FORMAT_HEADER = "lmc v1"


class LmcFormatError(ValueError):
    """Malformed chain description. ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class StochasticityError(LmcFormatError):
    def __init__(self, state: str, total: Fraction, line: int | None = None):
        self.state = state
        self.total = total
        super().__init__(
            f"transition probabilities of state {state!r} sum to {format_rational(total)}, expected 1",
            line,
        )


class UnknownLabelError(LmcFormatError):
    pass


class ExplosionError(RuntimeError):
    """Raised in strict mode when a horizon computation outgrows its limit."""


def explosion_limit() -> int:
    raw = os.environ.get("PRIVDIST_EXPLOSION_LIMIT")
    if raw is None:
        return DEFAULT_EXPLOSION_LIMIT
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"PRIVDIST_EXPLOSION_LIMIT must be an integer, got {raw!r}") from None


@dataclass(frozen=True)
class Lmc:
    """A finite labelled Markov chain with exact rational transition rows.

    States are the dense indices ``0..n-1``; ``names[i]`` is the display name.
    ``rows[i]`` holds the nonzero entries of the transition row of state ``i``
    as ``(target, probability)`` pairs sorted by target.
    """

    names: tuple[str, ...]
    alphabet: tuple[str, ...]
    labels: tuple[str, ...]
    rows: tuple[tuple[tuple[int, Fraction], ...], ...]
    _index: Mapping[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {name: i for i, name in enumerate(self.names)})
        _validate(self)

    @classmethod
    def from_rows(
        cls,
        labels: Sequence[str],
        rows: Sequence[Mapping[int, object]],
        names: Sequence[str] | None = None,
        alphabet: Sequence[str] | None = None,
    ) -> "Lmc":
        """Build a chain from per-state ``{target: prob}`` dicts (probs may be strings)."""
        n = len(labels)
        if names is None:
            names = [f"s{i}" for i in range(n)]
        if alphabet is None:
            alphabet = sorted(set(labels))
        packed = []
        for row in rows:
            entries = {}
            for t, p in row.items():
                q = as_rational(p)
                if q != 0:
                    entries[int(t)] = q
            packed.append(tuple(sorted(entries.items())))
        return cls(tuple(names), tuple(alphabet), tuple(labels), tuple(packed))

    @property
    def n_states(self) -> int:
        return len(self.names)

    def index(self, state: int | str) -> int:
        """Resolve a state name or index to its dense index."""
        if isinstance(state, str):
            try:
                return self._index[state]
            except KeyError:
                raise KeyError(f"unknown state {state!r}") from None
        if not 0 <= state < self.n_states:
            raise IndexError(f"state index {state} out of range")
        return int(state)

    def label(self, state: int | str) -> str:
        return self.labels[self.index(state)]

    def row(self, state: int | str) -> dict[int, Fraction]:
        return dict(self.rows[self.index(state)])

    def distribution(self, state: int | str) -> list[Fraction]:
        """Dense successor distribution of ``state``."""
        dist = [Fraction(0)] * self.n_states
        for t, p in self.rows[self.index(state)]:
            dist[t] = p
        return dist

    def to_text(self, comments: Iterable[str] = ()) -> str:
        lines = [f"# {c}" for c in comments]
        lines.append(FORMAT_HEADER)
        lines.append("alphabet " + " ".join(self.alphabet))
        for name, lab in zip(self.names, self.labels):
            lines.append(f"state {name} {lab}")
        for i, row in enumerate(self.rows):
            for t, p in row:
                lines.append(f"trans {self.names[i]} {self.names[t]} {format_rational(p)}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        doc = {
            "format": FORMAT_HEADER,
            "alphabet": list(self.alphabet),
            "states": [{"name": n, "label": lab} for n, lab in zip(self.names, self.labels)],
            "transitions": [
                {"from": self.names[i], "to": self.names[t], "prob": format_rational(p)}
                for i, row in enumerate(self.rows)
                for t, p in row
            ],
        }
        return json.dumps(doc, indent=2)

    def to_dot(self) -> str:
        out = ["digraph lmc {"]
        for name, lab in zip(self.names, self.labels):
            out.append(f'  "{name}" [label="{name}\\n{lab}"];')
        for i, row in enumerate(self.rows):
            for t, p in row:
                out.append(f'  "{self.names[i]}" -> "{self.names[t]}" [label="{format_rational(p)}"];')
        out.append("}")
        return "\n".join(out) + "\n"


def _validate(m: Lmc) -> None:
    n = len(m.names)
    if n == 0:
        raise LmcFormatError("chain has no states")
    if len(m.labels) != n or len(m.rows) != n:
        raise LmcFormatError("names, labels and rows must have equal length")
    if len(set(m.names)) != n:
        raise LmcFormatError("duplicate state names")
    if len(set(m.alphabet)) != len(m.alphabet):
        raise LmcFormatError("duplicate alphabet symbols")
    alphabet = set(m.alphabet)
    for name, lab in zip(m.names, m.labels):
        if lab not in alphabet:
            raise UnknownLabelError(f"state {name!r} has label {lab!r} outside the alphabet")
    for i, row in enumerate(m.rows):
        total = Fraction(0)
        for t, p in row:
            if not 0 <= t < n:
                raise LmcFormatError(f"state {m.names[i]!r} has a transition to unknown index {t}")
            if not isinstance(p, Fraction):
                raise TypeError(f"transition probabilities must be Fractions, got {type(p).__name__}")
            if not 0 <= p <= 1:
                raise LmcFormatError(
                    f"transition {m.names[i]} -> {m.names[t]} has probability {format_rational(p)} outside [0, 1]"
                )
            total += p
        if total != 1:
            raise StochasticityError(m.names[i], total)


def check_lmc(m) -> Lmc:
    """Return ``m`` if it is a chain, otherwise raise TypeError."""
    if not isinstance(m, Lmc):
        raise TypeError(f"expected an Lmc, got {type(m).__name__}")
    return m


# -- parsing ---------------------------------------------------------------


def parse_lmc(text: str | bytes) -> Lmc:
    """Parse the line-oriented ``lmc v1`` format (``#`` starts a comment)."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    header_seen = False
    alphabet: list[str] | None = None
    names: list[str] = []
    labels: list[str] = []
    index: dict[str, int] = {}
    trans: dict[int, dict[int, Fraction]] = defaultdict(dict)
    first_line: dict[int, int] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        head = parts[0]
        if not header_seen:
            if parts != ["lmc", "v1"]:
                raise LmcFormatError(f"expected header {FORMAT_HEADER!r}, got {line!r}", lineno)
            header_seen = True
            continue
        if head == "alphabet":
            if alphabet is not None:
                raise LmcFormatError("alphabet declared twice", lineno)
            if len(parts) < 2:
                raise LmcFormatError("empty alphabet", lineno)
            alphabet = parts[1:]
            if len(set(alphabet)) != len(alphabet):
                raise LmcFormatError("duplicate alphabet symbols", lineno)
        elif head == "state":
            if len(parts) != 3:
                raise LmcFormatError("expected 'state NAME LABEL'", lineno)
            if alphabet is None:
                raise LmcFormatError("state declared before alphabet", lineno)
            _, name, lab = parts
            if name in index:
                raise LmcFormatError(f"state {name!r} declared twice", lineno)
            if lab not in alphabet:
                raise UnknownLabelError(f"unknown label {lab!r} for state {name!r}", lineno)
            index[name] = len(names)
            names.append(name)
            labels.append(lab)
        elif head == "trans":
            if len(parts) != 4:
                raise LmcFormatError("expected 'trans FROM TO PROB'", lineno)
            _, src, dst, prob = parts
            for s in (src, dst):
                if s not in index:
                    raise LmcFormatError(f"unknown state {s!r}", lineno)
            try:
                p = parse_rational(prob)
            except ValueError as exc:
                raise LmcFormatError(str(exc), lineno) from None
            if not 0 <= p <= 1:
                raise LmcFormatError(f"probability {prob} outside [0, 1]", lineno)
            i, j = index[src], index[dst]
            if j in trans[i]:
                raise LmcFormatError(f"duplicate transition {src} -> {dst}", lineno)
            trans[i][j] = p
            first_line.setdefault(i, lineno)
        else:
            raise LmcFormatError(f"unknown directive {head!r}", lineno)

    if not header_seen:
        raise LmcFormatError(f"missing {FORMAT_HEADER!r} header")
    if alphabet is None:
        raise LmcFormatError("missing alphabet declaration")
    for i, name in enumerate(names):
        total = sum(trans[i].values(), Fraction(0))
        if total != 1:
            raise StochasticityError(name, total, first_line.get(i))
    return Lmc.from_rows(labels, [trans[i] for i in range(len(names))], names=names, alphabet=alphabet)


def parse_lmc_json(text: str | bytes) -> Lmc:
    """Parse the JSON mirror of the text format."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise LmcFormatError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    if not isinstance(doc, dict) or doc.get("format", FORMAT_HEADER) != FORMAT_HEADER:
        raise LmcFormatError(f"expected a JSON object with format {FORMAT_HEADER!r}")
    try:
        alphabet = [str(a) for a in doc["alphabet"]]
        states = doc["states"]
        transitions = doc.get("transitions", [])
    except (KeyError, TypeError) as exc:
        raise LmcFormatError(f"missing field {exc}") from None
    lines = ["lmc v1", "alphabet " + " ".join(alphabet)]
    try:
        for st in states:
            lines.append(f"state {st['name']} {st['label']}")
        for tr in transitions:
            lines.append(f"trans {tr['from']} {tr['to']} {tr['prob']}")
    except (KeyError, TypeError) as exc:
        raise LmcFormatError(f"missing field {exc}") from None
    try:
        return parse_lmc("\n".join(lines))
    except LmcFormatError as exc:
        # line numbers refer to the synthesized text, not the JSON document
        if isinstance(exc, StochasticityError):
            raise StochasticityError(exc.state, exc.total) from None
        raise LmcFormatError(str(exc).split(": ", 1)[-1]) from None


def load_lmc(path: str | os.PathLike) -> Lmc:
    path = Path(path)
    data = path.read_bytes()
    if path.suffix.lower() == ".json":
        return parse_lmc_json(data)
    return parse_lmc(data)


# -- trace distributions ---------------------------------------------------


@dataclass(frozen=True)
class HorizonDistribution:
    """Probabilities of the length-``horizon`` cylinders from one state.

    Keys are label tuples; only nonzero masses are stored.
    """

    horizon: int
    mass: Mapping[tuple[str, ...], Fraction]

    def __getitem__(self, trace: tuple[str, ...]) -> Fraction:
        return self.mass.get(tuple(trace), Fraction(0))

    def total(self) -> Fraction:
        return sum(self.mass.values(), Fraction(0))

    def marginal(self, length: int) -> dict[tuple[str, ...], Fraction]:
        """Masses of the shorter prefixes of length ``length``."""
        out: dict[tuple[str, ...], Fraction] = defaultdict(Fraction)
        for u, p in self.mass.items():
            out[u[:length]] += p
        return dict(out)


def horizon_distribution(
    m: Lmc,
    state: int | str,
    horizon: int,
    limit: int | None = None,
    strict: bool = False,
) -> HorizonDistribution:
    """Distribution of the first ``horizon`` labels emitted from ``state``.

    Forward dynamic programming over ``(prefix, current state)``.  A warning is
    issued when ``|alphabet| ** horizon`` exceeds ``limit``; with ``strict``
    the computation aborts once the frontier itself exceeds ``limit``.
    """
    s = m.index(state)
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    if limit is None:
        limit = explosion_limit()
    if horizon and len(m.alphabet) ** horizon > limit:
        warnings.warn(
            f"horizon {horizon} admits up to {len(m.alphabet)}**{horizon} traces (limit {limit})",
            RuntimeWarning,
            stacklevel=2,
        )
    if horizon == 0:
        return HorizonDistribution(0, {(): Fraction(1)})

    frontier: dict[tuple[tuple[str, ...], int], Fraction] = {((m.labels[s],), s): Fraction(1)}
    for _ in range(horizon - 1):
        nxt: dict[tuple[tuple[str, ...], int], Fraction] = defaultdict(Fraction)
        for (u, q), p in frontier.items():
            for t, w in m.rows[q]:
                nxt[(u + (m.labels[t],), t)] += p * w
        frontier = nxt
        if strict and len(frontier) > limit:
            raise ExplosionError(f"trace frontier grew to {len(frontier)} entries (limit {limit})")

    mass: dict[tuple[str, ...], Fraction] = defaultdict(Fraction)
    for (u, _), p in frontier.items():
        mass[u] += p
    return HorizonDistribution(horizon, dict(mass))


# -- bisimilarity ----------------------------------------------------------


@dataclass(frozen=True)
class Partition:
    """Block assignment; block ids are numbered by first occurrence."""

    block_of: tuple[int, ...]

    @property
    def n_blocks(self) -> int:
        return max(self.block_of) + 1 if self.block_of else 0

    def blocks(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.n_blocks)]
        for s, b in enumerate(self.block_of):
            out[b].append(s)
        return out

    def same_block(self, s: int, t: int) -> bool:
        return self.block_of[s] == self.block_of[t]


def _canonical(keys: Sequence[object]) -> tuple[int, ...]:
    ids: dict[object, int] = {}
    return tuple(ids.setdefault(k, len(ids)) for k in keys)


def bisimilarity_partition(m: Lmc) -> Partition:
    """Coarsest label-respecting partition stable under block transition masses."""
    check_lmc(m)
    block = _canonical(m.labels)
    while True:
        signatures = []
        for s in range(m.n_states):
            into: dict[int, Fraction] = defaultdict(Fraction)
            for t, p in m.rows[s]:
                into[block[t]] += p
            signatures.append((block[s], tuple(sorted(into.items()))))
        refined = _canonical(signatures)
        if max(refined) == max(block):
            return Partition(refined)
        block = refined
