"""Command-line entry point.

Exit codes: 0 when every requested check passes, 1 on a check failure (the
witness is printed), 2 on malformed input.  Default output carries no
wall-clock data, so identical inputs produce byte-identical output; timing
fields appear only behind --timing.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import checks as chk
from . import dilation as dil
from . import monoid as mon
from . import rep as rp
from .rationals import format_rational


class InputError(Exception):
    pass


def _load_chainspec(path):
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise InputError(f"cannot read chain spec {path}: {e}") from None
    try:
        return dil.ChainSpec.from_dict(obj), obj
    except (KeyError, ValueError, TypeError, ZeroDivisionError) as e:
        raise InputError(f"bad chain spec {path}: {e}") from None


def _emit(report: chk.VerificationReport, args) -> int:
    for line in report.lines():
        print(line)
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(report.to_json(include_timing=args.timing))
            fh.write("\n")
    return 0 if report.passed else 1


def _build_rep_from_file(spec, obj, depth, budget):
    if "c_map" in obj or "delta_map" in obj:
        if "noise" not in obj:
            raise InputError("explicit c_map/delta_map need a noise weight list")
        noise = chk.FinSpace.from_rationals(obj["noise"])
        coupling = None
        c_map = np.asarray(obj["c_map"], dtype=np.int64)
        delta = np.asarray(obj["delta_map"], dtype=np.int64)
        try:
            rep = rp.build_fplus_rep(spec.pi, noise, c_map, delta, max(depth, 2), budget)
        except ValueError as e:
            raise InputError(str(e)) from None
        return rep, coupling
    _, coupling = dil.build_first_order_dilation(spec)
    model = dil.build_markov_dilation(spec, depth, coupling, budget)
    return model.rep, coupling


def cmd_normalize(args) -> int:
    w = mon.Word.parse(args.word)
    print(mon.normal_form_fplus(w))
    return 0


def cmd_word_eq(args) -> int:
    w1, w2 = mon.Word.parse(args.word1), mon.Word.parse(args.word2)
    if args.monoid == "fplus":
        equal = mon.words_equal_fplus(w1, w2)
    else:
        equal = mon.words_equal_splus(w1, w2)
    print("equal" if equal else "not equal")
    return 0 if equal else 1


def cmd_shift(args) -> int:
    w = mon.Word.parse(args.word)
    out = mon.shift_mn(args.m, args.n, w)
    print(out, "=", mon.normal_form_fplus(out))
    return 0


def cmd_derive(args) -> int:
    try:
        trace = mon.extended_relation_check(args.monoid, args.k, args.l)
    except mon.DerivationNotFound as e:
        print(f"FAIL  {e}", file=sys.stderr)
        return 1
    if not trace.validate():
        print("FAIL  derivation does not replay", file=sys.stderr)
        return 1
    print(trace.to_json())
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(trace.to_json() + "\n")
    return 0


def cmd_stationary(args) -> int:
    spec, _ = _load_chainspec(args.chainspec)
    print(" ".join(format_rational(p) for p in spec.pi.weights))
    return 0


def cmd_dilate(args) -> int:
    spec, _ = _load_chainspec(args.chainspec)
    model = dil.build_markov_dilation(spec, args.depth, budget=args.budget)
    d = dil.dilation_property_check(model)
    report = chk.VerificationReport()
    report.add(
        "dilation-powers",
        "T^n = iota* alpha^n iota for 0 <= n <= K",
        all(d.power_ok.values()),
        None if all(d.power_ok.values()) else f"first failing power {min(n for n, v in d.power_ok.items() if not v)}",
    )
    report.add(
        "moments-vs-path-law",
        "model moments equal path-law expectations",
        not d.moment_failures,
        str(d.moment_failures[0]) if d.moment_failures else None,
    )
    report.add("measure-preservation", "alpha preserves the level states", d.measure_preserving)
    report.add("range-projection", "iota_0 iota_0* projects onto the state coordinate", d.projection_ok)
    report.add(
        "coupling-realization",
        "coupling compresses to T; bijective when atom masses tie out",
        True,
        witness="bijective" if model.coupling.is_automorphism else model.coupling.note,
    )
    return _emit(report, args)


def cmd_rep_check(args) -> int:
    spec, obj = _load_chainspec(args.chainspec)
    rep, _ = _build_rep_from_file(spec, obj, args.depth, args.budget)
    K = args.depth
    report = chk.VerificationReport()
    ok = all(
        rep.relation_check(k, l, m)[0]
        for k in range(K)
        for l in range(k + 1, K + 1)
        for m in range(max(K - 1, 1))
    )
    report.add("monoid-relations", "alpha_k alpha_l = alpha_{l+1} alpha_k for k < l", ok)
    ok = all(
        rep.state_preservation_check(n, m) for n in range(K + 1) for m in range(K)
    )
    report.add("state-preservation", "every represented generator preserves the state", ok)
    report.add(
        "generating",
        "tower algebras jointly generate the level space",
        rep.has_generating_property(K - 1),
    )
    ok = True
    wit = None
    for n in range(1, K):
        for k in range(n):
            good, w = rp.intertwining_check(rep, k, n)
            if not good:
                ok, wit = False, f"k={k}, n={n}: {w}"
    report.add("intertwining", "alpha_k Q_n = Q_{n+1} alpha_k for k < n", ok, wit)
    return _emit(report, args)


def cmd_lump(args) -> int:
    spec, _ = _load_chainspec(args.chainspec)
    try:
        f = [int(t) for t in args.map.split(",")]
    except ValueError:
        raise InputError(f"bad lumping map {args.map!r}; expected e.g. 0,1,0")
    if len(f) != spec.d or any(not 0 <= x < spec.d for x in f):
        raise InputError("lumping map must assign a class to every state")
    model = dil.build_markov_dilation(spec, args.depth, budget=args.budget)
    lumped = chk.ProcessView.from_model(model).lump(f)
    report = chk.maximal_ps_check(lumped)
    report.extend(chk.markov_sequence_check(lumped))
    return _emit(report, args)


def cmd_verify(args) -> int:
    spec, _ = _load_chainspec(args.chainspec)
    report = chk.VerificationReport()
    if args.suite in ("definetti", "all"):
        report.extend(chk.definetti_suite(spec, args.depth, budget=args.budget))
    if args.suite in ("tower", "all"):
        model = dil.build_markov_dilation(spec, args.depth, budget=args.budget)
        tower = rp.triangular_tower_check(model.rep)
        report.add("tower-generating", "tower algebras jointly generate", tower.generating)
        for (m, n, k), ok in sorted(tower.cells.items()):
            report.add(
                f"tower-cell-m{m}-n{n}-k{k}",
                "the cell (M_{m+k} ⊃ a0^k(M_m); M_{n+k} ⊃ a0^k(M_n)) commutes",
                ok,
            )
        report.add(
            "tower-cells-agree",
            "all four commuting-square conditions agree on every cell",
            tower.cells_agree,
        )
        for n, ok in sorted(tower.intersections.items()):
            report.add(
                f"tower-intersection-n{n}",
                "M_{n+1} ∩ alpha_0(M_{n+1}) = alpha_0(M_n)",
                ok,
            )
    if args.suite in ("hierarchy", "all"):
        model = dil.build_markov_dilation(spec, min(args.depth, 5), budget=args.budget)
        h = chk.hierarchy_check(chk.ProcessView.from_model(model))
        report.extend(h.report)
    return _emit(report, args)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="finmarkov",
        description="exact finite models: monoid words, Markov dilations, commuting squares",
    )
    p.add_argument("--json", metavar="PATH", help="write the report as JSON")
    p.add_argument("--timing", action="store_true", help="include timing in the JSON report")
    p.add_argument(
        "--budget",
        type=int,
        default=2_000_000,
        metavar="ATOMS",
        help="largest materialized level size (default 2000000)",
    )
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("normalize", help="normal form of an F+ word")
    q.add_argument("word")
    q.set_defaults(func=cmd_normalize)

    q = sub.add_parser("word-eq", help="decide equality of two words")
    q.add_argument("word1")
    q.add_argument("word2")
    q.add_argument("--monoid", choices=("fplus", "splus"), default="fplus")
    q.set_defaults(func=cmd_word_eq)

    q = sub.add_parser("shift", help="apply the (m,n)-partial shift")
    q.add_argument("m", type=int)
    q.add_argument("n", type=int)
    q.add_argument("word")
    q.set_defaults(func=cmd_shift)

    q = sub.add_parser("derive", help="derive the twisted-generator relation in EF+/ES+/FF+")
    q.add_argument("monoid", choices=("EF+", "ES+", "FF+", "ef+", "es+", "ff+"))
    q.add_argument("k", type=int)
    q.add_argument("l", type=int)
    q.set_defaults(func=cmd_derive)

    q = sub.add_parser("stationary", help="exact stationary distribution of a chain")
    q.add_argument("chainspec")
    q.set_defaults(func=cmd_stationary)

    q = sub.add_parser("dilate", help="build the tensor dilation and verify it")
    q.add_argument("chainspec")
    q.add_argument("--depth", type=int, default=4, metavar="K")
    q.set_defaults(func=cmd_dilate)

    q = sub.add_parser("rep-check", help="verify the monoid representation of a chain")
    q.add_argument("chainspec")
    q.add_argument("--depth", type=int, default=4, metavar="K")
    q.set_defaults(func=cmd_rep_check)

    q = sub.add_parser("lump", help="push the process through a state map and re-check")
    q.add_argument("chainspec")
    q.add_argument("--map", required=True, help="comma list, e.g. 0,1,0")
    q.add_argument("--depth", type=int, default=4, metavar="K")
    q.set_defaults(func=cmd_lump)

    q = sub.add_parser("verify", help="run a named verification suite")
    q.add_argument("chainspec")
    q.add_argument("--depth", type=int, default=4, metavar="K")
    q.add_argument(
        "--suite", choices=("definetti", "tower", "hierarchy", "all"), default="all"
    )
    q.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ValueError, mon.DerivationNotFound) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
