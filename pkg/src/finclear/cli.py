"""Command-line entry points: batch clearing, equilibrium analysis, generators.

Every command reads a network document from a file argument (or stdin when
the argument is "-" or omitted), validates it, and writes deterministic text
to stdout. Exit codes: 0 success, 2 invalid input, 3 budget or iteration
exhaustion (partial results are still printed), 64 usage errors.
"""

from __future__ import annotations

import argparse
import os
import random
import sys
from fractions import Fraction
from typing import Sequence

from .clearing import KleeneStart, clear_pro_rata, kleene_clearing, top_cycle_increase
from .core import (
    UNBOUNDED,
    FinancialNetwork,
    FinclearError,
    revenue,
    validate_network,
)
from .equilibria import (
    SearchBudget,
    SearchSpace,
    Verdict,
    best_response_exact,
    enumerate_equilibria,
    is_nash,
    is_strong_equilibrium,
    optimal_strong_equilibrium,
    welfare_metrics,
)
from .instances import (
    SatFormula,
    ThreeDmInstance,
    ThreeDmVariant,
    gen_edge_spos_family,
    gen_from_3dm,
    gen_from_sat,
    gen_no_nash,
    gen_poa_unbounded,
    gen_pos_unbounded,
    gen_spoa_family,
)
from .io import NetworkDocument, parse_document, render_document, render_dot
from .strategies import (
    EdgeRankingStrategy,
    StrategyProfile,
    ThresholdRankingStrategy,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_EXHAUSTED = 3
EXIT_USAGE = 64

SEED_ENV = "FINCLEAR_SEED"


class _UsageError(Exception):
    def __init__(self, parser: argparse.ArgumentParser, message: str):
        super().__init__(message)
        self.parser = parser


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as exit 64 instead of 2."""

    def error(self, message: str):
        raise _UsageError(self, message)


class _InputError(Exception):
    """Bad input data: parse failure, failed validation, missing strategy."""


def _read_document(path: str | None) -> NetworkDocument:
    if path is None or path == "-":
        text = sys.stdin.read()
    else:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise _InputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return parse_document(text)
    except FinclearError as exc:
        raise _InputError(str(exc)) from exc


def _validated(doc: NetworkDocument) -> FinancialNetwork:
    report = validate_network(doc.network)
    if not report.ok:
        lines = [f"{v.code}: {v.detail}" for v in report.violations]
        raise _InputError("\n".join(lines))
    return doc.network


def _full_profile(
    net: FinancialNetwork, doc_profile: StrategyProfile, override: StrategyProfile | None
) -> StrategyProfile:
    profile = override if override is not None else doc_profile
    missing = [v for v in net.nodes if net.out_edges(v) and v not in profile.strategies]
    if missing:
        raise _InputError(
            "no strategy for firm(s): " + ", ".join(missing)
        )
    return profile


def _fmt(value) -> str:
    if value is None:
        return "none"
    if value is UNBOUNDED:
        return "unbounded"
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    return str(value)


def _fmt_strategy(strat) -> str:
    ranking = ",".join(str(e) for e in strat.ranking)
    if isinstance(strat, ThresholdRankingStrategy):
        taus = " ".join(
            f"{edge_id}:{tau}" for edge_id, tau in sorted(strat.threshold_map().items())
        )
        return f"threshold ranking=[{ranking}] thresholds=[{taus}]"
    return f"edge-ranking ranking=[{ranking}]"


def _budget(args) -> SearchBudget:
    return SearchBudget(
        max_candidates=args.max_candidates, timeout_secs=args.timeout_secs
    )


def _add_budget_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--max-candidates", type=int, default=1_000_000)
    parser.add_argument("--timeout-secs", type=float, default=60.0)


def _space(name: str) -> SearchSpace:
    return SearchSpace.EDGE if name == "edge" else SearchSpace.THRESHOLD


def _cycle_rng() -> random.Random | None:
    seed = os.environ.get(SEED_ENV)
    return random.Random(int(seed)) if seed else None


# --------------------------------------------------------------------------
# Subcommands


def _cmd_validate(args) -> int:
    doc = _read_document(args.network)
    report = validate_network(doc.network)
    if report.ok:
        print("ok")
        return EXIT_OK
    for violation in report.violations:
        print(f"{violation.code}: {violation.detail}")
    return EXIT_INVALID


def _cmd_clear(args) -> int:
    doc = _read_document(args.network)
    net = _validated(doc)
    if args.pro_rata:
        result = clear_pro_rata(net)
        for v in net.nodes:
            print(f"a_{v} = {_fmt(Fraction(result.state.assets[v]))}")
        print(f"revenue = {_fmt(Fraction(sum(result.state.assets[v] for v in net.nodes)))}")
        print(f"converged = {'true' if result.converged else 'false'}")
        return EXIT_OK if result.converged else EXIT_EXHAUSTED
    override = None
    if args.profile:
        override = _read_document(args.profile).profile
    profile = _full_profile(net, doc.profile, override)
    if args.oracle == "kleene-top":
        state = kleene_clearing(net, profile, start=KleeneStart.TOP)
    elif args.oracle == "kleene-bottom":
        state = kleene_clearing(net, profile, start=KleeneStart.BOTTOM)
    else:
        state = top_cycle_increase(net, profile, cycle_rng=_cycle_rng())
    for v in net.nodes:
        print(f"a_{v} = {state.assets[v]}")
    print(f"revenue = {revenue(net, state)}")
    return EXIT_OK


def _cmd_opt_se(args) -> int:
    doc = _read_document(args.network)
    net = _validated(doc)
    result = optimal_strong_equilibrium(net)
    if args.emit_document:
        sys.stdout.write(render_document(net, result.profile))
        return EXIT_OK
    print(f"revenue = {result.revenue}")
    for v in net.nodes:
        strat = result.profile.strategies.get(v)
        if strat is not None:
            print(f"strategy {v} = {_fmt_strategy(strat)}")
    return EXIT_OK


def _cmd_best_response(args) -> int:
    doc = _read_document(args.network)
    net = _validated(doc)
    firm = args.firm
    if firm not in net.nodes:
        raise _InputError(f"unknown firm '{firm}'")
    profile = doc.profile
    if firm not in profile.strategies and net.out_edges(firm):
        default = EdgeRankingStrategy(
            firm, tuple(e.id for e in net.out_edges(firm))
        )
        profile = profile.replace(default)
    profile = _full_profile(net, profile, None)
    result = best_response_exact(
        net, profile, firm, space=_space(args.space), budget=_budget(args)
    )
    print(f"value = {result.value}")
    print(f"strategy = {_fmt_strategy(result.strategy)}")
    print(f"exhaustive = {'true' if result.exhaustive else 'false'}")
    return EXIT_OK if result.exhaustive else EXIT_EXHAUSTED


def _cmd_check(args) -> int:
    doc = _read_document(args.network)
    net = _validated(doc)
    profile = _full_profile(net, doc.profile, None)
    if args.strong:
        report = is_strong_equilibrium(
            net, profile, budget=_budget(args), space=_space(args.space)
        )
    else:
        report = is_nash(net, profile, budget=_budget(args), space=_space(args.space))
    verdict = {
        Verdict.NASH: "nash",
        Verdict.NOT_NASH: "not-nash",
        Verdict.STRONG: "strong",
        Verdict.NOT_STRONG: "not-strong",
    }[report.verdict]
    print(f"verdict = {verdict}")
    print(f"exhaustive = {'true' if report.exhaustive else 'false'}")
    if report.witness is not None:
        coalition = ",".join(report.witness.coalition)
        print(f"witness coalition = {coalition}")
        for v in report.witness.coalition:
            print(
                f"witness {v}: {report.witness.before[v]} -> {report.witness.after[v]}"
            )
    conclusive = report.verdict in (Verdict.NOT_NASH, Verdict.NOT_STRONG)
    if conclusive or report.exhaustive:
        return EXIT_OK
    return EXIT_EXHAUSTED


def _cmd_enumerate(args) -> int:
    doc = _read_document(args.network)
    net = _validated(doc)
    result = enumerate_equilibria(
        net,
        space=_space(args.space),
        budget=_budget(args),
        fixed=doc.profile if doc.profile.strategies else None,
    )
    count = len(result.findings)
    print(f"{count} equilibria" if count != 1 else "1 equilibrium")
    for i, finding in enumerate(result.findings, start=1):
        print(f"equilibrium {i}: revenue = {revenue(net, finding.state)}")
        for v in net.nodes:
            strat = finding.profile.strategies.get(v)
            if strat is not None:
                print(f"  {v}: {_fmt_strategy(strat)}")
    if not result.exhaustive:
        print("search exhausted budget; results may be incomplete")
        return EXIT_EXHAUSTED
    return EXIT_OK


def _cmd_metrics(args) -> int:
    doc = _read_document(args.network)
    net = _validated(doc)
    metrics = welfare_metrics(
        net,
        space=_space(args.space),
        budget=_budget(args),
        fixed=doc.profile if doc.profile.strategies else None,
        compute_d=not args.no_d,
    )
    print(f"opt = {metrics.opt_revenue}")
    print(f"best_eq = {_fmt(metrics.best_eq_revenue)}")
    print(f"worst_eq = {_fmt(metrics.worst_eq_revenue)}")
    print(f"poa = {_fmt(metrics.poa)}")
    print(f"pos = {_fmt(metrics.pos)}")
    print(f"spoa = {_fmt(metrics.spoa)}")
    print(f"spos = {_fmt(metrics.spos)}")
    print(f"d = {metrics.d_bound}")
    print(f"d_exact = {'true' if metrics.d_exact else 'false'}")
    return EXIT_OK if metrics.exhaustive else EXIT_EXHAUSTED


def _parse_clause(text: str, parser: argparse.ArgumentParser) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise _UsageError(parser, f"bad clause '{text}': expected comma-separated integers")


def _cmd_gen(args, parser: argparse.ArgumentParser) -> int:
    family = args.family
    profile: StrategyProfile | None = None
    if family == "no-nash":
        net, profile = gen_no_nash()
    elif family == "spoa":
        if args.d is None:
            raise _UsageError(parser, "gen spoa requires --d")
        net = gen_spoa_family(args.d)
    elif family == "poa-unbounded":
        net = gen_poa_unbounded()
    elif family == "edge-spos":
        if args.n is None or args.m is None:
            raise _UsageError(parser, "gen edge-spos requires --n and --m")
        net = gen_edge_spos_family(args.n, args.m)
    elif family == "pos-unbounded":
        if args.m is None:
            raise _UsageError(parser, "gen pos-unbounded requires --m")
        net = gen_pos_unbounded(args.m)
    elif family == "sat":
        if args.vars is None or not args.clause:
            raise _UsageError(parser, "gen sat requires --vars and at least one --clause")
        formula = SatFormula.of(
            args.vars, [_parse_clause(c, parser) for c in args.clause]
        )
        net, profile, _ = gen_from_sat(formula)
    elif family == "3dm":
        if args.elements is None or args.variant is None:
            raise _UsageError(parser, "gen 3dm requires --elements and --variant")
        elements = _parse_clause(args.elements, parser)
        triples = [_parse_clause(t, parser) for t in (args.triple or [])]
        for t in triples:
            if len(t) != 3:
                raise _UsageError(parser, f"--triple needs exactly 3 elements, got {t}")
        inst = ThreeDmInstance.of(elements, triples)
        variant = (
            ThreeDmVariant.BEST_RESPONSE
            if args.variant == "best-response"
            else ThreeDmVariant.DECISION
        )
        net, profile, _ = gen_from_3dm(inst, variant)
    else:  # argparse choices make this unreachable
        raise _UsageError(parser, f"unknown family '{family}'")
    sys.stdout.write(render_document(net, profile))
    return EXIT_OK


def _cmd_export_dot(args) -> int:
    doc = _read_document(args.network)
    net = _validated(doc)
    sys.stdout.write(render_dot(net))
    return EXIT_OK


# --------------------------------------------------------------------------
# Parser wiring


def _build_parser() -> _Parser:
    parser = _Parser(prog="finclear", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    def with_network(p):
        p.add_argument("network", nargs="?", default=None,
                       help="network document path, or - for stdin (default)")
        return p

    with_network(sub.add_parser("validate", help="check network invariants"))

    clear = with_network(sub.add_parser("clear", help="compute the maximal clearing state"))
    clear.add_argument("--profile", help="document supplying the strategy profile")
    clear.add_argument("--pro-rata", action="store_true")
    clear.add_argument("--oracle", choices=["kleene-top", "kleene-bottom"])

    opt_se = with_network(sub.add_parser("opt-se", help="optimal strong equilibrium"))
    opt_se.add_argument("--emit-document", action="store_true",
                        help="print the network with the equilibrium strategies")

    br = with_network(sub.add_parser("best-response", help="exact best response"))
    br.add_argument("--firm", required=True)
    br.add_argument("--space", choices=["edge", "threshold"], default="edge")
    _add_budget_flags(br)

    check = with_network(sub.add_parser("check", help="verify an equilibrium"))
    group = check.add_mutually_exclusive_group(required=True)
    group.add_argument("--nash", action="store_true")
    group.add_argument("--strong", action="store_true")
    check.add_argument("--space", choices=["edge", "threshold"], default="edge")
    _add_budget_flags(check)

    enum = with_network(sub.add_parser("enumerate", help="list all pure equilibria"))
    enum.add_argument("--space", choices=["edge", "threshold"], default="edge")
    _add_budget_flags(enum)

    metrics = with_network(sub.add_parser("metrics", help="welfare and anarchy metrics"))
    metrics.add_argument("--space", choices=["edge", "threshold"], default="edge")
    metrics.add_argument("--no-d", action="store_true",
                         help="skip the exact min-max cycle length")
    _add_budget_flags(metrics)

    gen = sub.add_parser("gen", help="generate an instance family")
    gen.add_argument("family", choices=[
        "no-nash", "spoa", "poa-unbounded", "edge-spos", "pos-unbounded", "sat", "3dm",
    ])
    gen.add_argument("--d", type=int)
    gen.add_argument("--n", type=int)
    gen.add_argument("--m", type=int)
    gen.add_argument("--vars", type=int)
    gen.add_argument("--clause", action="append")
    gen.add_argument("--elements")
    gen.add_argument("--triple", action="append")
    gen.add_argument("--variant", choices=["best-response", "decision"])

    with_network(sub.add_parser("export-dot", help="emit a DOT drawing"))
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise _UsageError(parser, "a subcommand is required")
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "clear":
            return _cmd_clear(args)
        if args.command == "opt-se":
            return _cmd_opt_se(args)
        if args.command == "best-response":
            return _cmd_best_response(args)
        if args.command == "check":
            return _cmd_check(args)
        if args.command == "enumerate":
            return _cmd_enumerate(args)
        if args.command == "metrics":
            return _cmd_metrics(args)
        if args.command == "gen":
            return _cmd_gen(args, parser)
        if args.command == "export-dot":
            return _cmd_export_dot(args)
        raise _UsageError(parser, f"unknown subcommand '{args.command}'")
    except _UsageError as exc:
        print(exc.parser.format_usage(), file=sys.stderr, end="")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _InputError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INVALID
    except FinclearError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
