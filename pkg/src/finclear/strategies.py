"""Payment-strategy semantics: how a firm's assets map to per-edge payments.

Three strategy kinds exist. Edge-ranking pays debts one ranked edge at a time
to saturation. Threshold-ranking makes two passes over a ranking: first up to
a per-edge threshold, then the remainders. Pro-rata splits proportionally and
is the non-strategic baseline. Edge- and threshold-ranking are the monotone
integer strategies the clearing and equilibrium machinery searches over; a
monotone integer schedule on a network is equivalent to an edge ranking on the
unit-edge expansion, and threshold rankings suffice to reproduce any such
schedule's clearing outcome.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Union

from .core import (
    UNBOUNDED,
    CirculationNetwork,
    ClearingState,
    EdgeId,
    FinancialNetwork,
    FinclearError,
    LiabilityEdge,
    Money,
    NodeId,
    UnboundedType,
    node_key,
    total_liabilities,
)


class StrategyError(FinclearError):
    pass


class ExpansionLimitError(FinclearError):
    pass


DEFAULT_EXPANSION_CAP = 100_000


@dataclass(frozen=True)
class EdgeRankingStrategy:
    """A permutation of the owner's outgoing edges, paid sequentially to saturation."""

    owner: NodeId
    ranking: tuple[EdgeId, ...]

    def canonical(self) -> tuple:
        return ("edge", self.ranking)


@dataclass(frozen=True)
class ThresholdRankingStrategy:
    """Two-pass payment: thresholds along the ranking first, remainders second.

    ``thresholds`` is stored as a sorted tuple of (edge id, amount) pairs so
    the strategy stays hashable; use ``of`` to build one from a mapping.
    """

    owner: NodeId
    ranking: tuple[EdgeId, ...]
    thresholds: tuple[tuple[EdgeId, Money], ...]

    @staticmethod
    def of(
        owner: NodeId, ranking: Iterable[EdgeId], thresholds: Mapping[EdgeId, Money]
    ) -> "ThresholdRankingStrategy":
        return ThresholdRankingStrategy(
            owner, tuple(ranking), tuple(sorted(thresholds.items()))
        )

    def threshold_map(self) -> dict[EdgeId, Money]:
        return dict(self.thresholds)

    def canonical(self) -> tuple:
        return ("threshold", self.ranking, self.thresholds)


@dataclass(frozen=True)
class ProRataStrategy:
    """Proportional split of assets over outgoing liabilities; no free parameters."""

    owner: NodeId

    def canonical(self) -> tuple:
        return ("pro-rata",)


Strategy = Union[EdgeRankingStrategy, ThresholdRankingStrategy, ProRataStrategy]
RankingStrategy = Union[EdgeRankingStrategy, ThresholdRankingStrategy]


@dataclass(frozen=True)
class StrategyProfile:
    """One strategy per firm; firms with outgoing edges must all be covered."""

    strategies: Mapping[NodeId, Strategy]

    @staticmethod
    def of(strategies: Iterable[Strategy] | Mapping[NodeId, Strategy]) -> "StrategyProfile":
        if isinstance(strategies, Mapping):
            return StrategyProfile(dict(strategies))
        return StrategyProfile({s.owner: s for s in strategies})

    def strategy_for(self, v: NodeId) -> Strategy | None:
        return self.strategies.get(v)

    def replace(self, *new: Strategy) -> "StrategyProfile":
        merged = dict(self.strategies)
        for s in new:
            merged[s.owner] = s
        return StrategyProfile(merged)

    def signature(self) -> tuple:
        """Canonical hashable form, usable as a cache key."""
        return tuple(
            (v, self.strategies[v].canonical())
            for v in sorted(self.strategies, key=node_key)
        )


@dataclass(frozen=True)
class SegmentCursor:
    """Where the owner's next unit of payment goes, and how far that segment runs.

    ``active_edge`` is None only when the owner has already paid all
    liabilities and the caller works on a bare network; on a circulation
    network the surplus edge to the source takes over, with unbounded room.
    """

    owner: NodeId
    paid_so_far: Money
    active_edge: EdgeId | None
    segment_remaining: Money | UnboundedType


def check_strategy(strat: Strategy, net: FinancialNetwork) -> None:
    """Raise StrategyError unless the strategy is well-formed for this network."""
    out_ids = sorted(e.id for e in net.out_edges(strat.owner))
    if isinstance(strat, ProRataStrategy):
        if out_ids and total_liabilities(net, strat.owner) == 0:
            raise StrategyError(f"{strat.owner!r} has outgoing edges but zero total liabilities")
        return
    if sorted(strat.ranking) != out_ids:
        raise StrategyError(
            f"ranking of {strat.owner!r} is not a permutation of its outgoing edges"
        )
    if isinstance(strat, ThresholdRankingStrategy):
        taus = strat.threshold_map()
        if sorted(taus) != out_ids:
            raise StrategyError(
                f"thresholds of {strat.owner!r} must cover exactly its outgoing edges"
            )
        for e_id, tau in taus.items():
            cap = net.edge(e_id).weight
            if not (0 <= tau <= cap):
                raise StrategyError(
                    f"threshold {tau} on edge {e_id} outside [0, {cap}]"
                )


def payment_segments(strat: RankingStrategy, net: FinancialNetwork) -> list[tuple[EdgeId, Money]]:
    """The strategy's payment schedule as positive-length (edge, length) segments.

    Edge-ranking yields one segment per positive-weight edge; threshold-ranking
    yields the pass-1 threshold segments followed by the pass-2 remainders.
    Zero-length segments (zero-weight edges, zero thresholds, saturated
    thresholds) are dropped: they can never receive a unit.
    """
    segments: list[tuple[EdgeId, Money]] = []
    if isinstance(strat, EdgeRankingStrategy):
        for e_id in strat.ranking:
            cap = net.edge(e_id).weight
            if cap > 0:
                segments.append((e_id, cap))
    elif isinstance(strat, ThresholdRankingStrategy):
        taus = strat.threshold_map()
        for e_id in strat.ranking:
            tau = taus[e_id]
            if tau > 0:
                segments.append((e_id, tau))
        for e_id in strat.ranking:
            rest = net.edge(e_id).weight - taus[e_id]
            if rest > 0:
                segments.append((e_id, rest))
    else:
        raise StrategyError(f"no payment segments for {type(strat).__name__}")
    return segments


def _pay_segments(
    segments: list[tuple[EdgeId, Money]], out_ids: Iterable[EdgeId], y: Money
) -> dict[EdgeId, Money]:
    paid = {e: 0 for e in out_ids}
    left = y
    for e_id, length in segments:
        if left <= 0:
            break
        take = min(left, length)
        paid[e_id] += take
        left -= take
    return paid


def edge_ranking_payment(
    strat: EdgeRankingStrategy, net: FinancialNetwork, y: Money
) -> dict[EdgeId, Money]:
    """Closed-form sequential payment: each ranked edge takes what remains of y, capped."""
    if y < 0:
        raise StrategyError("assets must be non-negative")
    paid: dict[EdgeId, Money] = {}
    prefix = 0
    for e_id in strat.ranking:
        cap = net.edge(e_id).weight
        paid[e_id] = min(cap, max(0, y - prefix))
        prefix += cap
    return paid


def threshold_ranking_payment(
    strat: ThresholdRankingStrategy, net: FinancialNetwork, y: Money
) -> dict[EdgeId, Money]:
    """Two-pass schedule: thresholds in ranking order, then remainders, until y runs out."""
    if y < 0:
        raise StrategyError("assets must be non-negative")
    return _pay_segments(payment_segments(strat, net), strat.ranking, y)


def pro_rata_payment(
    strat: ProRataStrategy, net: FinancialNetwork, y: Money | Fraction
) -> dict[EdgeId, Fraction]:
    """Exact proportional payment: min(cap, y * cap / total liabilities) per edge."""
    if y < 0:
        raise StrategyError("assets must be non-negative")
    out = net.out_edges(strat.owner)
    if not out:
        return {}
    total = total_liabilities(net, strat.owner)
    if total == 0:
        if y > 0:
            raise StrategyError(
                f"{strat.owner!r} has zero total liabilities; pro-rata shares are undefined"
            )
        return {e.id: Fraction(0) for e in out}
    y = Fraction(y)
    return {e.id: min(Fraction(e.weight), y * e.weight / total) for e in out}


def payment_vector(strat: Strategy, net: FinancialNetwork, y) -> dict[EdgeId, Money]:
    if isinstance(strat, EdgeRankingStrategy):
        return edge_ranking_payment(strat, net, y)
    if isinstance(strat, ThresholdRankingStrategy):
        return threshold_ranking_payment(strat, net, y)
    if isinstance(strat, ProRataStrategy):
        return pro_rata_payment(strat, net, y)
    raise StrategyError(f"unsupported strategy type {type(strat).__name__}")


def active_segment(
    strat: RankingStrategy,
    net: FinancialNetwork | CirculationNetwork,
    paid_so_far: Money,
) -> SegmentCursor:
    """The edge receiving the owner's next unit, and the units left in its segment.

    Once liabilities are exhausted the next unit is surplus: on a circulation
    network it goes to the (owner, source) edge, which has unbounded room.
    """
    if paid_so_far < 0:
        raise StrategyError("paid_so_far must be non-negative")
    base = net.base if isinstance(net, CirculationNetwork) else net
    cursor = paid_so_far
    for e_id, length in payment_segments(strat, base):
        if cursor < length:
            return SegmentCursor(strat.owner, paid_so_far, e_id, length - cursor)
        cursor -= length
    if isinstance(net, CirculationNetwork):
        surplus = net.surplus_edge(strat.owner)
        return SegmentCursor(strat.owner, paid_so_far, surplus.id, UNBOUNDED)
    return SegmentCursor(strat.owner, paid_so_far, None, UNBOUNDED)


def expand_to_unit_edges(
    net: FinancialNetwork, cap: int = DEFAULT_EXPANSION_CAP
) -> tuple[FinancialNetwork, dict[EdgeId, EdgeId]]:
    """Replace every weight-w edge with w parallel unit edges.

    Zero-weight edges vanish. Returns the expanded network and a provenance
    map from new edge ids back to the originating edge ids. The expansion is
    pseudo-polynomial, so its size is capped.
    """
    total_units = 0
    for e in net.edges:
        if e.is_unbounded():
            raise ExpansionLimitError(f"cannot unit-expand unbounded edge {e.id}")
        total_units += e.weight
    if total_units > cap:
        raise ExpansionLimitError(
            f"unit expansion needs {total_units} edges, cap is {cap}"
        )
    new_edges: list[LiabilityEdge] = []
    provenance: dict[EdgeId, EdgeId] = {}
    next_id = 0
    for e in net.edges:
        for _ in range(e.weight):
            new_edges.append(LiabilityEdge(next_id, e.src, e.dst, 1))
            provenance[next_id] = e.id
            next_id += 1
    expanded = FinancialNetwork.build(net.nodes, net.external_assets, new_edges)
    return expanded, provenance


def threshold_from_flows(
    v: NodeId,
    net: FinancialNetwork,
    cs: ClearingState,
    unpaid_top: EdgeId,
) -> ThresholdRankingStrategy:
    """The threshold strategy reproducing v's payments in a given clearing state.

    Thresholds are v's current per-edge flows; the ranking puts the designated
    unpaid edge first (that is where any additional unit would go) and the
    rest in ascending edge-id order. Only meaningful for firms insolvent in
    the state; a solvent firm's strategy never affects the clearing state.
    """
    out = net.out_edges(v)
    if not out:
        raise StrategyError(f"{v!r} has no outgoing edges")
    if cs.assets.get(v, 0) >= total_liabilities(net, v):
        raise StrategyError(f"{v!r} is solvent; any strategy reproduces the state")
    by_id = {e.id: e for e in out}
    if unpaid_top not in by_id:
        raise StrategyError(f"edge {unpaid_top} does not leave {v!r}")
    top = by_id[unpaid_top]
    if top.is_unbounded() or cs.flows.get(unpaid_top) >= top.weight:
        raise StrategyError(f"edge {unpaid_top} carries full flow; pick an unpaid edge")
    ranking = (unpaid_top,) + tuple(sorted(e for e in by_id if e != unpaid_top))
    taus = {e.id: cs.flows.get(e.id) for e in out}
    return ThresholdRankingStrategy.of(v, ranking, taus)


def behavior_signature(strat: RankingStrategy, net: FinancialNetwork) -> tuple:
    """Node-aggregated payment table over all asset levels 0..l(owner).

    Two strategies with equal signatures route the same amount of money to
    every destination at every asset level, so they induce identical clearing
    states in any profile. Enumeration spaces deduplicate on this.
    """
    out = net.out_edges(strat.owner)
    dests = sorted({e.dst for e in out}, key=node_key)
    dest_index = {d: i for i, d in enumerate(dests)}
    ell = total_liabilities(net, strat.owner)
    rows: list[tuple[Money, ...]] = []
    for y in range(ell + 1):
        paid = payment_vector(strat, net, y)
        row = [0] * len(dests)
        for e in out:
            row[dest_index[e.dst]] += paid[e.id]
        rows.append(tuple(row))
    return (tuple(dests), tuple(rows))
