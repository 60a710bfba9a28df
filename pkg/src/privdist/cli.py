"""Command-line front end: ``privdist SUBCOMMAND ...``.

Exit codes: 0 success, 1 negative outcome (invalid chain or certificate,
threshold answered "no" or left open), 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from privdist.certfile import dump_certificate, parse_certificate
from privdist.distance import NO, YES, delta_bound, exact_value, threshold
from privdist.fixpoint import DEFAULT_MAX_ITERS, check_certificate
from privdist.kantorovich import DUAL, PRIMAL
from privdist.lmc import ExplosionError, LmcFormatError, bisimilarity_partition, load_lmc, parse_lmc
from privdist.models import DiningConfig, generate_dining, generate_random
from privdist.rational import format_decimal, format_rational, parse_rational
from privdist.smt import export_lfp_formula, export_threshold_formula
from privdist.tv import tv_lower_bound


class UsageError(Exception):
    pass


def _rational(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from None


def _pair(text: str) -> tuple[str, str]:
    parts = text.split(",")
    if len(parts) != 2 or not all(parts):
        raise argparse.ArgumentTypeError(f"expected S,S', got {text!r}")
    return parts[0], parts[1]


def _triple(text: str) -> tuple[str, str, Fraction]:
    parts = text.split(",")
    if len(parts) != 3 or not all(parts):
        raise argparse.ArgumentTypeError(f"expected S,S',THETA, got {text!r}")
    return parts[0], parts[1], _rational(parts[2])


def _fmt(q: Fraction) -> str:
    return format_rational(q)


def _human(q: Fraction) -> str:
    # exact value, plus a decimal when it is not an integer
    if q.denominator == 1:
        return _fmt(q)
    return f"{_fmt(q)} ({format_decimal(q)})"


def _load(path: str):
    try:
        return load_lmc(path)
    except OSError as err:
        raise UsageError(f"cannot read {path}: {err.strerror or err}") from None
    except (LmcFormatError, ValueError) as err:
        raise UsageError(f"{path}: {err}") from None


def _state(m, name: str) -> int:
    try:
        return m.index(name)
    except KeyError:
        raise UsageError(f"unknown state {name!r}") from None


def _budget(args) -> dict:
    out = {"mode": args.mode, "max_iter": args.max_iters, "n_jobs": args.threads}
    if args.stop_gap is not None:
        out["stop_gap"] = args.stop_gap
    return out


def _emit(args, human: list[str], payload: dict) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for line in human:
            print(line)


def _write_or_print(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# -- subcommands ---------------------------------------------------------------


def cmd_validate(args) -> int:
    try:
        text = Path(args.file).read_text(encoding="utf-8")
    except OSError as err:
        raise UsageError(f"cannot read {args.file}: {err.strerror or err}") from None
    try:
        m = load_lmc(args.file) if args.file.endswith(".json") else parse_lmc(text)
    except (LmcFormatError, ValueError) as err:
        _emit(args, [f"invalid: {err}"], {"valid": False, "error": str(err)})
        return 1
    if args.dot:
        sys.stdout.write(m.to_dot())
        return 0
    n_trans = sum(len(r) for r in m.rows)
    _emit(
        args,
        [f"valid: {m.n_states} states, {len(m.alphabet)} labels, {n_trans} transitions"],
        {"valid": True, "states": m.n_states, "alphabet": list(m.alphabet), "transitions": n_trans},
    )
    return 0


def cmd_bisim(args) -> int:
    m = _load(args.file)
    part = bisimilarity_partition(m)
    blocks = sorted(sorted(m.names[s] for s in b) for b in part.blocks())
    _emit(
        args,
        [f"{len(blocks)} blocks"] + [" ".join(b) for b in blocks],
        {"blocks": blocks},
    )
    return 0


def cmd_distance(args) -> int:
    m = _load(args.file)
    s, t = args.pair
    _state(m, s), _state(m, t)
    r = exact_value(args.alpha, m, s, t, **_budget(args))
    payload = {
        "alpha": _fmt(args.alpha),
        "pair": [s, t],
        "exact": r.exact,
        "value": _fmt(r.value) if r.exact else None,
        "proof": r.proof,
        "lower": _fmt(r.lower),
        "upper": _fmt(r.upper),
        "iterations": r.bounds.iterations,
    }
    if r.exact:
        human = [f"bd = {_human(r.value)} (exact)"]
    else:
        human = [
            f"bd in [{_fmt(r.lower)}, {_fmt(r.upper)}] (not exactly resolved)",
            f"  [{format_decimal(r.lower)}, {format_decimal(r.upper)}] after {r.bounds.iterations} iterations",
        ]
    _emit(args, human, payload)
    return 0


def cmd_threshold(args) -> int:
    m = _load(args.file)
    s, t = args.pair
    _state(m, s), _state(m, t)
    if not 0 <= args.theta <= 1:
        raise UsageError("theta must lie in [0, 1]")
    r = threshold(args.alpha, m, s, t, args.theta, **_budget(args))
    human = [r.answer]
    payload = {
        "answer": r.answer,
        "theta": _fmt(r.theta),
        "lower": _fmt(r.lower),
        "upper": _fmt(r.upper),
        "iteration": r.iteration,
        "evidence": None,
    }
    if r.answer == YES:
        human.append(f"certificate with d({s},{t}) = {_fmt(r.upper)} <= {_fmt(r.theta)}")
        evidence = dump_certificate(m, args.alpha, r.certificate.d)
    elif r.answer == NO:
        human.append(f"Kleene iterate {r.iteration} has d({s},{t}) = {_fmt(r.lower)} > {_fmt(r.theta)}")
        evidence = dump_certificate(m, args.alpha, r.iterate, header="iterate v1", extra=(f"iteration {r.iteration}",))
    else:
        human.append(f"enclosure [{_fmt(r.lower)}, {_fmt(r.upper)}] straddles {_fmt(r.theta)}")
        evidence = None
    if args.evidence and evidence is not None:
        Path(args.evidence).write_text(evidence, encoding="utf-8")
        human.append(f"evidence written to {args.evidence}")
        payload["evidence"] = args.evidence
    _emit(args, human, payload)
    return 0 if r.answer == YES else 1


def cmd_certify(args) -> int:
    m = _load(args.file)
    try:
        alpha, d = parse_certificate(m, Path(args.cert).read_text(encoding="utf-8"))
    except OSError as err:
        raise UsageError(f"cannot read {args.cert}: {err.strerror or err}") from None
    except LmcFormatError as err:
        raise UsageError(f"{args.cert}: {err}") from None
    try:
        cert = check_certificate(alpha, m, d, args.check)
    except ValueError as err:
        _emit(args, [f"invalid: {err}"], {"valid": False, "violations": [], "error": str(err)})
        return 1
    violations = sorted(
        ([m.names[i], m.names[j], _fmt(v), _fmt(d[i, j])] for i, j, v in cert.violations),
    )
    if cert.checked:
        human = [f"valid pre-fixed point at alpha = {_fmt(alpha)}"]
    else:
        human = ["invalid"] + [f"  {a},{b}: Gamma gives {v} > {x}" for a, b, v, x in violations]
    _emit(args, human, {"valid": cert.checked, "alpha": _fmt(alpha), "violations": violations})
    return 0 if cert.checked else 1


def cmd_delta(args) -> int:
    m = _load(args.file)
    pairs = sorted(set(args.pairs))
    for s, t in pairs:
        _state(m, s), _state(m, t)
    budget = _budget(args)
    if args.epsilon is not None:
        if args.epsilon < 0:
            raise UsageError("epsilon must be >= 0")
        res = delta_bound(m, pairs, epsilon=args.epsilon, **budget)
    else:
        res = delta_bound(m, pairs, alpha=args.alpha, **budget)
    human = []
    if args.epsilon is not None:
        human.append(f"alpha = {_fmt(res.alpha)} <= e^{_fmt(args.epsilon)}")
    for (s, t), pd in zip(pairs, res.pairs):
        human.append(f"{s},{t}: {_fmt(pd.delta)}" + (" (exact)" if pd.exact else " (upper bound)"))
    human.append(f"delta ≤ {_human(res.max)}")
    _emit(
        args,
        human,
        {
            "alpha": _fmt(res.alpha),
            "epsilon": None if args.epsilon is None else _fmt(args.epsilon),
            "pairs": [{"pair": [s, t], "delta": _fmt(pd.delta), "exact": pd.exact} for (s, t), pd in zip(pairs, res.pairs)],
            "delta": _fmt(res.max),
        },
    )
    return 0


def cmd_tv(args) -> int:
    m = _load(args.file)
    s, t = args.pair
    _state(m, s), _state(m, t)
    if args.horizon < 0:
        raise UsageError("horizon must be nonnegative")
    try:
        r = tv_lower_bound(args.alpha, m, s, t, args.horizon)
    except ExplosionError as err:
        raise UsageError(str(err)) from None
    traces = [" ".join(u) for u in r.event.traces()]
    human = [f"tv >= {_human(r.value)} at horizon {args.horizon} ({r.direction})"]
    if args.show_event:
        human += traces
    _emit(
        args,
        human,
        {"value": _fmt(r.value), "horizon": args.horizon, "direction": r.direction, "event": traces},
    )
    return 0


def cmd_gen(args) -> int:
    if args.model == "dc":
        try:
            m, starts = generate_dining(DiningConfig(args.n, args.p))
        except ValueError as err:
            raise UsageError(str(err)) from None
        text = m.to_text([f"dining cryptographers n={args.n} p={_fmt(args.p)}", "start states: " + " ".join(starts)])
    else:
        try:
            m = generate_random(args.states, args.alphabet, args.density, args.seed)
        except ValueError as err:
            raise UsageError(str(err)) from None
        text = m.to_text([f"random states={args.states} alphabet={args.alphabet} density={_fmt(args.density)} seed={args.seed}"])
    _write_or_print(text, args.out)
    return 0


def cmd_export(args) -> int:
    m = _load(args.file)
    if args.lfp:
        text = export_lfp_formula(args.alpha, m)
    else:
        s, t, theta = args.threshold
        _state(m, s), _state(m, t)
        if not 0 <= theta <= 1:
            raise UsageError("theta must lie in [0, 1]")
        text = export_threshold_formula(args.alpha, m, s, t, theta)
    _write_or_print(text, args.out)
    return 0


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output, rationals as num/den strings")
    common.add_argument("--threads", type=int, default=1, metavar="N", help="worker processes for pair-level work")

    engine = argparse.ArgumentParser(add_help=False)
    engine.add_argument("--mode", choices=[PRIMAL, DUAL], default=PRIMAL)
    engine.add_argument("--max-iters", type=int, default=DEFAULT_MAX_ITERS)
    engine.add_argument("--stop-gap", type=_rational, default=None)

    p = argparse.ArgumentParser(prog="privdist", description="Skewed bisimilarity distances on labelled Markov chains.")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", parents=[common], help="parse and check a chain")
    v.add_argument("file")
    v.add_argument("--dot", action="store_true", help="print the chain as a DOT graph")
    v.set_defaults(func=cmd_validate)

    b = sub.add_parser("bisim", parents=[common], help="bisimilarity blocks")
    b.add_argument("file")
    b.set_defaults(func=cmd_bisim)

    d = sub.add_parser("distance", parents=[common, engine], help="exact distance or certified bounds")
    d.add_argument("file")
    d.add_argument("--alpha", type=_rational, required=True)
    d.add_argument("--pair", type=_pair, required=True)
    d.set_defaults(func=cmd_distance)

    t = sub.add_parser("threshold", parents=[common, engine], help="is the distance at most theta?")
    t.add_argument("file")
    t.add_argument("--alpha", type=_rational, required=True)
    t.add_argument("--pair", type=_pair, required=True)
    t.add_argument("--theta", type=_rational, required=True)
    t.add_argument("--evidence", metavar="PATH", help="write the certificate or the refuting iterate here")
    t.set_defaults(func=cmd_threshold)

    c = sub.add_parser("certify", parents=[common], help="re-check a certificate file")
    c.add_argument("file")
    c.add_argument("--cert", required=True)
    c.add_argument("--check", choices=[PRIMAL, DUAL], default=DUAL, help="how each pair is checked")
    c.set_defaults(func=cmd_certify)

    db = sub.add_parser("delta-bound", parents=[common, engine], help="sound delta for (epsilon, delta)-privacy")
    db.add_argument("file")
    skew = db.add_mutually_exclusive_group(required=True)
    skew.add_argument("--alpha", type=_rational)
    skew.add_argument("--epsilon", type=_rational)
    db.add_argument("--pairs", type=_pair, nargs="+", required=True, metavar="S,S'")
    db.set_defaults(func=cmd_delta)

    tv = sub.add_parser("tv-lower", parents=[common], help="finite-horizon lower bound on the trace distance")
    tv.add_argument("file")
    tv.add_argument("--alpha", type=_rational, required=True)
    tv.add_argument("--pair", type=_pair, required=True)
    tv.add_argument("--horizon", type=int, required=True)
    tv.add_argument("--show-event", action="store_true", help="print the maximising event, one trace per line")
    tv.set_defaults(func=cmd_tv)

    g = sub.add_parser("gen", help="generate a benchmark chain")
    gsub = g.add_subparsers(dest="model", required=True)
    dc = gsub.add_parser("dc", parents=[common], help="dining cryptographers")
    dc.add_argument("--n", type=int, required=True)
    dc.add_argument("--p", type=_rational, required=True)
    dc.add_argument("--out")
    dc.set_defaults(func=cmd_gen)
    rnd = gsub.add_parser("random", parents=[common], help="seeded random chain")
    rnd.add_argument("--states", type=int, required=True)
    rnd.add_argument("--alphabet", type=int, required=True)
    rnd.add_argument("--density", type=_rational, default=Fraction(1))
    rnd.add_argument("--seed", type=int, default=0)
    rnd.add_argument("--out")
    rnd.set_defaults(func=cmd_gen)

    e = sub.add_parser("export-smt", parents=[common], help="SMT-LIB 2 script for an external solver")
    e.add_argument("file")
    e.add_argument("--alpha", type=_rational, required=True)
    which = e.add_mutually_exclusive_group(required=True)
    which.add_argument("--lfp", action="store_true", help="least pre-fixed point formula")
    which.add_argument("--threshold", type=_triple, metavar="S,S',THETA", help="threshold formula")
    e.add_argument("--out")
    e.set_defaults(func=cmd_export)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "threads", 1) < 1:
        print("privdist: error: --threads must be >= 1", file=sys.stderr)
        return 2
    alpha = getattr(args, "alpha", None)
    if alpha is not None and alpha < 1:
        print("privdist: error: alpha must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except UsageError as err:
        print(f"privdist: error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
