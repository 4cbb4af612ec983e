"""Network document serialization: strict JSON schema, canonical bytes, DOT export.

A document carries the network (``nodes``, ``edges``) and optionally the
committed part of a strategy profile (``strategies``). Parsing is fail-loud:
unknown fields, wrong types, and out-of-range values are rejected with the
offending field's path. Saving is canonical, so save(load(x)) is
byte-identical for canonicalized files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Mapping

from .core import (
    UNBOUNDED,
    FinancialNetwork,
    FinclearError,
    LiabilityEdge,
    TOTAL_WEIGHT_CAP,
    Weight,
    node_key,
)
from .strategies import (
    EdgeRankingStrategy,
    RankingStrategy,
    StrategyProfile,
    ThresholdRankingStrategy,
    check_strategy,
)

UNBOUNDED_TOKEN = "unbounded"


class ParseError(FinclearError):
    """Input document rejected; the message names the offending field."""


@dataclass(frozen=True)
class NetworkDocument:
    network: FinancialNetwork
    profile: StrategyProfile


def _require_mapping(value: Any, path: str) -> Mapping[str, Any]:
    if not isinstance(value, dict):
        raise ParseError(f"{path}: expected an object, got {type(value).__name__}")
    return value


def _require_list(value: Any, path: str) -> list:
    if not isinstance(value, list):
        raise ParseError(f"{path}: expected an array, got {type(value).__name__}")
    return value


def _require_str(value: Any, path: str) -> str:
    if not isinstance(value, str):
        raise ParseError(f"{path}: expected a string, got {type(value).__name__}")
    return value


def _require_int(value: Any, path: str) -> int:
    # bool is a subclass of int; reject it explicitly
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(f"{path}: expected an integer, got {type(value).__name__}")
    return value


def _reject_unknown(obj: Mapping[str, Any], allowed: set[str], path: str) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ParseError(f"{path}: unknown field '{unknown[0]}'")


def _parse_weight(value: Any, path: str) -> Weight:
    if value == UNBOUNDED_TOKEN:
        return UNBOUNDED
    weight = _require_int(value, path)
    if weight < 0:
        raise ParseError(f"{path}: weight must be non-negative")
    return weight


def _parse_strategy(entry: Any, idx: int) -> RankingStrategy:
    path = f"strategies[{idx}]"
    obj = _require_mapping(entry, path)
    kind = _require_str(obj.get("kind"), f"{path}.kind")
    owner = _require_str(obj.get("owner"), f"{path}.owner")
    ranking = tuple(
        _require_int(e, f"{path}.ranking[{i}]")
        for i, e in enumerate(_require_list(obj.get("ranking"), f"{path}.ranking"))
    )
    if kind == "edge-ranking":
        _reject_unknown(obj, {"owner", "kind", "ranking"}, path)
        return EdgeRankingStrategy(owner, ranking)
    if kind == "threshold":
        _reject_unknown(obj, {"owner", "kind", "ranking", "thresholds"}, path)
        raw = _require_mapping(obj.get("thresholds"), f"{path}.thresholds")
        thresholds = {}
        for key, value in raw.items():
            try:
                edge_id = int(key)
            except ValueError:
                raise ParseError(f"{path}.thresholds: key '{key}' is not an edge id")
            thresholds[edge_id] = _require_int(value, f"{path}.thresholds.{key}")
        return ThresholdRankingStrategy.of(owner, ranking, thresholds)
    raise ParseError(f"{path}.kind: expected 'edge-ranking' or 'threshold', got '{kind}'")


def parse_document(text: str) -> NetworkDocument:
    """Parse a network document; strategies are checked against the network."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    top = _require_mapping(raw, "document")
    _reject_unknown(top, {"nodes", "edges", "strategies"}, "document")

    nodes = []
    externals = {}
    for i, entry in enumerate(_require_list(top.get("nodes"), "nodes")):
        path = f"nodes[{i}]"
        obj = _require_mapping(entry, path)
        _reject_unknown(obj, {"id", "external"}, path)
        node = _require_str(obj.get("id"), f"{path}.id")
        external = _require_int(obj.get("external"), f"{path}.external")
        if node in externals:
            raise ParseError(f"{path}.id: duplicate node '{node}'")
        nodes.append(node)
        externals[node] = external

    edges = []
    for i, entry in enumerate(_require_list(top.get("edges", []), "edges")):
        path = f"edges[{i}]"
        obj = _require_mapping(entry, path)
        _reject_unknown(obj, {"id", "src", "dst", "weight"}, path)
        edges.append(
            LiabilityEdge(
                _require_int(obj.get("id"), f"{path}.id"),
                _require_str(obj.get("src"), f"{path}.src"),
                _require_str(obj.get("dst"), f"{path}.dst"),
                _parse_weight(obj.get("weight"), f"{path}.weight"),
            )
        )

    finite = sum(e.weight for e in edges if not e.is_unbounded())
    if finite + sum(max(x, 0) for x in externals.values()) > TOTAL_WEIGHT_CAP:
        raise ParseError(
            f"document: total weight plus external assets exceeds 2^62 ({TOTAL_WEIGHT_CAP})"
        )

    net = FinancialNetwork.build(nodes, externals, edges)
    strategies = [
        _parse_strategy(entry, i)
        for i, entry in enumerate(_require_list(top.get("strategies", []), "strategies"))
    ]
    owners = [s.owner for s in strategies]
    if len(set(owners)) != len(owners):
        raise ParseError("strategies: duplicate owner")
    for strat in strategies:
        try:
            check_strategy(strat, net)
        except FinclearError as exc:
            raise ParseError(f"strategies[{strat.owner}]: {exc}") from exc
    return NetworkDocument(net, StrategyProfile.of(strategies))


def load_document(path: str) -> NetworkDocument:
    with open(path, encoding="utf-8") as fh:
        return parse_document(fh.read())


def load_network(path: str) -> FinancialNetwork:
    return load_document(path).network


def _strategy_entry(strat: RankingStrategy) -> dict[str, Any]:
    if isinstance(strat, EdgeRankingStrategy):
        return {
            "owner": strat.owner,
            "kind": "edge-ranking",
            "ranking": list(strat.ranking),
        }
    if isinstance(strat, ThresholdRankingStrategy):
        return {
            "owner": strat.owner,
            "kind": "threshold",
            "ranking": list(strat.ranking),
            "thresholds": {
                str(edge_id): tau for edge_id, tau in sorted(strat.threshold_map().items())
            },
        }
    raise FinclearError(f"strategy of {strat.owner} has no document form")


def render_document(
    net: FinancialNetwork, profile: StrategyProfile | None = None
) -> str:
    """Canonical document bytes: sorted nodes/edges/strategies, two-space indent."""
    doc = {
        "nodes": [
            {"id": v, "external": net.external(v)} for v in net.nodes
        ],
        "edges": [
            {
                "id": e.id,
                "src": e.src,
                "dst": e.dst,
                "weight": UNBOUNDED_TOKEN if e.is_unbounded() else e.weight,
            }
            for e in net.edges
        ],
        "strategies": [
            _strategy_entry(profile.strategies[owner])
            for owner in sorted(profile.strategies, key=node_key)
        ]
        if profile is not None
        else [],
    }
    return json.dumps(doc, indent=2) + "\n"


def save_document(
    path: str, net: FinancialNetwork, profile: StrategyProfile | None = None
) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_document(net, profile))


def _dot_quote(name: str) -> str:
    escaped = name.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def render_dot(net: FinancialNetwork) -> str:
    """DOT graph: firms as ellipses, external assets as dashed-linked boxes,
    edge labels carrying the weights."""
    lines = ["digraph liabilities {", "  rankdir=LR;"]
    for v in net.nodes:
        lines.append(f"  {_dot_quote(v)} [shape=ellipse];")
        ext = net.external(v)
        if ext:
            box = _dot_quote(f"external:{v}")
            lines.append(f"  {box} [shape=box, label=\"{ext}\"];")
            lines.append(f"  {box} -> {_dot_quote(v)} [style=dashed];")
    for e in net.edges:
        weight = UNBOUNDED_TOKEN if e.is_unbounded() else e.weight
        lines.append(
            f"  {_dot_quote(e.src)} -> {_dot_quote(e.dst)} [label=\"{weight}\"];"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"
