"""Financial networks, circulation networks, flow accounting, and cycle decomposition.

A network is a directed multigraph of firms. Each edge carries a non-negative
integer liability weight; each firm holds non-negative integer external assets.
All arithmetic in this package is exact (ints, or ``fractions.Fraction`` for
pro-rata clearing); nothing is ever represented in floating point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Union

NodeId = str
EdgeId = int
Money = int

# Loaders reject inputs whose total weight exceeds this; keeps every quantity
# comfortably inside 64-bit range for downstream consumers of saved files.
TOTAL_WEIGHT_CAP = 2**62


class FinclearError(Exception):
    """Base class for all errors raised by this package."""


class UnknownNodeError(FinclearError):
    pass


class InconsistentStateError(FinclearError):
    """A clearing state does not satisfy the fixed-point accounting identities."""


class ConservationError(FinclearError):
    """A flow assignment violates conservation at a node."""

    def __init__(self, node: NodeId, imbalance) -> None:
        super().__init__(f"flow conservation violated at {node!r}: imbalance {imbalance}")
        self.node = node
        self.imbalance = imbalance


class UnboundedType:
    """Singleton sentinel for unlimited capacity.

    Used only on auxiliary (firm, source) edges of a circulation network; never
    a large number, so it can never be accidentally saturated.
    """

    _instance: "UnboundedType | None" = None

    def __new__(cls) -> "UnboundedType":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "UNBOUNDED"

    def __copy__(self) -> "UnboundedType":
        return self

    def __deepcopy__(self, memo) -> "UnboundedType":
        return self


UNBOUNDED = UnboundedType()

Weight = Union[int, UnboundedType]


def node_key(node: NodeId) -> tuple[int, str]:
    """Canonical node ordering key: shorter ids first, then lexicographic.

    Keeps numbered ids in natural order ("v2" before "v10") while remaining a
    total order on arbitrary strings. All deterministic iteration in the
    package sorts nodes with this key.
    """
    return (len(node), node)


def sorted_nodes(nodes: Iterable[NodeId]) -> list[NodeId]:
    return sorted(nodes, key=node_key)


@dataclass(frozen=True)
class LiabilityEdge:
    """A directed debt: ``src`` owes ``dst`` up to ``weight`` units."""

    id: EdgeId
    src: NodeId
    dst: NodeId
    weight: Weight

    def is_unbounded(self) -> bool:
        return isinstance(self.weight, UnboundedType)


@dataclass(frozen=True)
class FinancialNetwork:
    """Immutable directed multigraph of firms with liabilities and external assets.

    Construction never validates; ``validate_network`` reports violations so
    that malformed inputs can be diagnosed rather than rejected blindly.
    Adjacency is precomputed once (edges sorted by id, nodes by ``node_key``).
    """

    nodes: tuple[NodeId, ...]
    external_assets: Mapping[NodeId, Money]
    edges: tuple[LiabilityEdge, ...]
    _out: dict = field(init=False, repr=False, compare=False)
    _in: dict = field(init=False, repr=False, compare=False)
    _by_id: dict = field(init=False, repr=False, compare=False)

    @staticmethod
    def build(
        nodes: Iterable[NodeId],
        external_assets: Mapping[NodeId, Money] | None = None,
        edges: Iterable[LiabilityEdge | tuple] = (),
    ) -> "FinancialNetwork":
        """Normalize and construct: sorts nodes/edges, fills missing externals with 0.

        Edge tuples ``(id, src, dst, weight)`` are accepted as a convenience.
        """
        node_tuple = tuple(sorted_nodes(set(nodes)))
        ext = dict(external_assets or {})
        externals = {v: ext.get(v, 0) for v in node_tuple}
        # Preserve any externals declared for undeclared nodes so validation can flag them.
        for v, amount in ext.items():
            if v not in externals:
                externals[v] = amount
        edge_objs = tuple(
            sorted(
                (e if isinstance(e, LiabilityEdge) else LiabilityEdge(*e) for e in edges),
                key=lambda e: e.id,
            )
        )
        return FinancialNetwork(node_tuple, externals, edge_objs)

    def __post_init__(self) -> None:
        out: dict[NodeId, list[LiabilityEdge]] = {v: [] for v in self.nodes}
        inc: dict[NodeId, list[LiabilityEdge]] = {v: [] for v in self.nodes}
        by_id: dict[EdgeId, LiabilityEdge] = {}
        for e in self.edges:
            by_id[e.id] = e
            out.setdefault(e.src, []).append(e)
            inc.setdefault(e.dst, []).append(e)
        object.__setattr__(self, "_out", out)
        object.__setattr__(self, "_in", inc)
        object.__setattr__(self, "_by_id", by_id)

    def out_edges(self, v: NodeId) -> tuple[LiabilityEdge, ...]:
        if v not in self._out:
            raise UnknownNodeError(f"unknown node {v!r}")
        return tuple(self._out[v])

    def in_edges(self, v: NodeId) -> tuple[LiabilityEdge, ...]:
        if v not in self._in:
            raise UnknownNodeError(f"unknown node {v!r}")
        return tuple(self._in[v])

    def edge(self, edge_id: EdgeId) -> LiabilityEdge:
        try:
            return self._by_id[edge_id]
        except KeyError:
            raise UnknownNodeError(f"unknown edge id {edge_id}") from None

    def has_edge(self, edge_id: EdgeId) -> bool:
        return edge_id in self._by_id

    def external(self, v: NodeId) -> Money:
        return self.external_assets.get(v, 0)

    def total_external(self) -> Money:
        return sum(self.external_assets.get(v, 0) for v in self.nodes)

    def with_external(self, v: NodeId, amount: Money) -> "FinancialNetwork":
        """A copy of this network with one firm's external assets replaced."""
        ext = dict(self.external_assets)
        ext[v] = amount
        return FinancialNetwork.build(self.nodes, ext, self.edges)


def total_liabilities(net: FinancialNetwork, v: NodeId) -> Money:
    """Sum of v's outgoing edge weights. Unbounded edges never appear in base networks."""
    total = 0
    for e in net.out_edges(v):
        if e.is_unbounded():
            raise InconsistentStateError(f"unbounded liability on base edge {e.id}")
        total += e.weight
    return total


@dataclass(frozen=True)
class Violation:
    code: str
    detail: str

    def __str__(self) -> str:
        return f"{self.code}: {self.detail}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_network(net: FinancialNetwork) -> ValidationReport:
    """Report every violated invariant; an empty report means the network is valid."""
    found: list[Violation] = []
    declared = set(net.nodes)
    for v in sorted_nodes(net.external_assets):
        amount = net.external_assets[v]
        if v not in declared:
            found.append(Violation("unknown-external-node", f"external assets for undeclared node {v!r}"))
        if isinstance(amount, int) and amount < 0:
            found.append(Violation("negative-external", f"node {v!r} has external assets {amount}"))
    seen_ids: set[EdgeId] = set()
    for e in net.edges:
        if e.id in seen_ids:
            found.append(Violation("duplicate-edge-id", f"edge id {e.id} appears more than once"))
        seen_ids.add(e.id)
        if e.src not in declared:
            found.append(Violation("dangling-endpoint", f"edge {e.id} source {e.src!r} is not declared"))
        if e.dst not in declared:
            found.append(Violation("dangling-endpoint", f"edge {e.id} target {e.dst!r} is not declared"))
        if e.src == e.dst:
            found.append(Violation("self-loop", f"edge {e.id} loops on {e.src!r}"))
        if e.is_unbounded():
            found.append(Violation("unbounded-weight", f"edge {e.id} has unbounded weight outside a circulation network"))
        elif e.weight < 0:
            found.append(Violation("negative-weight", f"edge {e.id} has weight {e.weight}"))
    return ValidationReport(tuple(found))


@dataclass(frozen=True)
class CirculationNetwork:
    """A financial network augmented with a source node converting externals to flow.

    The source pays each firm its external assets over a capacity-a^x edge and
    absorbs every firm's surplus over an unbounded (firm, source) edge, so any
    clearing state extends to an exact circulation.
    """

    base: FinancialNetwork
    source: NodeId
    source_in: tuple[LiabilityEdge, ...]  # (v, s), unbounded, one per firm
    source_out: tuple[LiabilityEdge, ...]  # (s, v), weight a^x_v, firms with a^x_v > 0
    _out: dict = field(init=False, repr=False, compare=False)
    _in: dict = field(init=False, repr=False, compare=False)
    _by_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        out: dict[NodeId, list[LiabilityEdge]] = {v: [] for v in self.all_nodes()}
        inc: dict[NodeId, list[LiabilityEdge]] = {v: [] for v in self.all_nodes()}
        by_id: dict[EdgeId, LiabilityEdge] = {}
        for e in self.all_edges():
            by_id[e.id] = e
            out[e.src].append(e)
            inc[e.dst].append(e)
        object.__setattr__(self, "_out", out)
        object.__setattr__(self, "_in", inc)
        object.__setattr__(self, "_by_id", by_id)

    def all_nodes(self) -> tuple[NodeId, ...]:
        return self.base.nodes + (self.source,)

    def all_edges(self) -> tuple[LiabilityEdge, ...]:
        return self.base.edges + self.source_in + self.source_out

    def out_edges(self, v: NodeId) -> tuple[LiabilityEdge, ...]:
        if v not in self._out:
            raise UnknownNodeError(f"unknown node {v!r}")
        return tuple(self._out[v])

    def in_edges(self, v: NodeId) -> tuple[LiabilityEdge, ...]:
        if v not in self._in:
            raise UnknownNodeError(f"unknown node {v!r}")
        return tuple(self._in[v])

    def edge(self, edge_id: EdgeId) -> LiabilityEdge:
        try:
            return self._by_id[edge_id]
        except KeyError:
            raise UnknownNodeError(f"unknown edge id {edge_id}") from None

    def surplus_edge(self, v: NodeId) -> LiabilityEdge:
        """The unbounded (v, source) edge carrying v's surplus."""
        for e in self._out[v]:
            if e.dst == self.source:
                return e
        raise UnknownNodeError(f"{v!r} has no surplus edge")


def fresh_source_id(taken: Iterable[NodeId]) -> NodeId:
    """A source node id not colliding with any existing node id."""
    existing = set(taken)
    candidate = "s"
    while candidate in existing:
        candidate += "'"
    return candidate


def build_circulation_network(net: FinancialNetwork) -> CirculationNetwork:
    """Augment a valid network with the auxiliary source and its edges.

    One unbounded (v, s) edge per firm; one (s, v) edge of weight a^x_v per
    firm with positive external assets. Auxiliary edge ids continue after the
    largest base edge id, (v, s) block first, both blocks in node order.
    """
    report = validate_network(net)
    if not report.ok:
        raise InconsistentStateError(f"invalid network: {report.violations[0]}")
    source = fresh_source_id(net.nodes)
    next_id = max((e.id for e in net.edges), default=-1) + 1
    source_in = []
    for v in net.nodes:
        source_in.append(LiabilityEdge(next_id, v, source, UNBOUNDED))
        next_id += 1
    source_out = []
    for v in net.nodes:
        ext = net.external(v)
        if ext > 0:
            source_out.append(LiabilityEdge(next_id, source, v, ext))
            next_id += 1
    return CirculationNetwork(net, source, tuple(source_in), tuple(source_out))


@dataclass(frozen=True)
class FlowAssignment:
    """Per-edge money flow; edges absent from the map carry zero."""

    flow: Mapping[EdgeId, Money]

    def get(self, edge_id: EdgeId) -> Money:
        return self.flow.get(edge_id, 0)

    def total(self) -> Money:
        return sum(self.flow.values())

    def restricted_to(self, edge_ids: Iterable[EdgeId]) -> "FlowAssignment":
        wanted = set(edge_ids)
        return FlowAssignment({e: f for e, f in self.flow.items() if e in wanted})


@dataclass(frozen=True)
class ClearingState:
    """A fixed point of the payment dynamics: assets, internal assets, and flows.

    ``assets[v] = external(v) + sum of incoming flows``; ``internal_assets``
    is the incoming-flow part alone. Values are ints for ranking strategies
    and Fractions for pro-rata clearing.
    """

    assets: Mapping[NodeId, Money]
    internal_assets: Mapping[NodeId, Money]
    flows: FlowAssignment


def check_clearing_consistency(net: FinancialNetwork, cs: ClearingState) -> None:
    """Raise unless the state satisfies the asset identities and edge capacities."""
    for e in net.edges:
        f = cs.flows.get(e.id)
        if f < 0 or (not e.is_unbounded() and f > e.weight):
            raise InconsistentStateError(f"flow {f} outside [0, {e.weight}] on edge {e.id}")
    for v in net.nodes:
        inflow = sum(cs.flows.get(e.id) for e in net.in_edges(v))
        if cs.internal_assets.get(v, 0) != inflow:
            raise InconsistentStateError(
                f"internal assets of {v!r} are {cs.internal_assets.get(v, 0)}, inflow is {inflow}"
            )
        expected = net.external(v) + inflow
        if cs.assets.get(v, 0) != expected:
            raise InconsistentStateError(
                f"assets of {v!r} are {cs.assets.get(v, 0)}, expected {expected}"
            )


def revenue(net: FinancialNetwork, cs: ClearingState) -> Money:
    """Total assets across all firms; equals externals plus total edge flow."""
    check_clearing_consistency(net, cs)
    return sum(cs.assets.get(v, 0) for v in net.nodes)


def extend_flows_to_circulation(circ: CirculationNetwork, cs: ClearingState) -> FlowAssignment:
    """Extend a clearing state's real-edge flows with auxiliary-edge flows.

    Every (s, v) edge is saturated (external assets enter in full) and each
    (v, s) edge carries v's unspent assets, making the result conservative at
    every node of the circulation network, the source included.
    """
    net = circ.base
    full = dict(cs.flows.flow)
    for e in circ.source_out:
        full[e.id] = e.weight
    for e in circ.source_in:
        v = e.src
        paid = sum(cs.flows.get(out.id) for out in net.out_edges(v))
        full[e.id] = cs.assets.get(v, 0) - paid
    return FlowAssignment(full)


def check_conservation(circ: CirculationNetwork, flows: FlowAssignment) -> None:
    """Raise ConservationError at the first node (in canonical order) out of balance."""
    for v in sorted_nodes(circ.all_nodes()):
        inflow = sum(flows.get(e.id) for e in circ.in_edges(v))
        outflow = sum(flows.get(e.id) for e in circ.out_edges(v))
        if inflow != outflow:
            raise ConservationError(v, outflow - inflow)


@dataclass(frozen=True)
class CycleDecomposition:
    """A flow written as weighted directed cycles (sequences of edge ids)."""

    cycles: tuple[tuple[EdgeId, ...], ...]
    multiplicity: tuple[Money, ...]

    def recompose(self) -> FlowAssignment:
        flow: dict[EdgeId, Money] = {}
        for cycle, mult in zip(self.cycles, self.multiplicity):
            for e in cycle:
                flow[e] = flow.get(e, 0) + mult
        return FlowAssignment(flow)

    def max_cycle_length(self) -> int:
        return max((len(c) for c in self.cycles), default=0)


def decompose_circulation(circ: CirculationNetwork, flows: FlowAssignment) -> CycleDecomposition:
    """Peel a conservative flow into directed cycles, canonically.

    Each round starts at the smallest node (by ``node_key``) with remaining
    outflow, follows the smallest-id positive-flow edge until a node repeats,
    and subtracts the cycle's bottleneck. Terminates because every round
    zeroes at least one edge.
    """
    check_conservation(circ, flows)
    remaining = {e: f for e, f in flows.flow.items() if f > 0}
    if any(f < 0 for f in flows.flow.values()):
        bad = min(e for e, f in flows.flow.items() if f < 0)
        raise InconsistentStateError(f"negative flow on edge {bad}")
    out_positive: dict[NodeId, list[LiabilityEdge]] = {}
    for v in circ.all_nodes():
        out_positive[v] = sorted(
            (e for e in circ.out_edges(v) if remaining.get(e.id, 0) > 0), key=lambda e: e.id
        )
    order = sorted_nodes(circ.all_nodes())
    cycles: list[tuple[EdgeId, ...]] = []
    mults: list[Money] = []
    while True:
        start = next((v for v in order if out_positive[v]), None)
        if start is None:
            break
        path_edges: list[LiabilityEdge] = []
        seen_at: dict[NodeId, int] = {start: 0}
        u = start
        while True:
            e = out_positive[u][0]
            path_edges.append(e)
            u = e.dst
            if u in seen_at:
                cycle = path_edges[seen_at[u] :]
                break
            seen_at[u] = len(path_edges)
        bottleneck = min(remaining[e.id] for e in cycle)
        for e in cycle:
            remaining[e.id] -= bottleneck
            if remaining[e.id] == 0:
                del remaining[e.id]
                out_positive[e.src].remove(e)
        cycles.append(tuple(e.id for e in cycle))
        mults.append(bottleneck)
    return CycleDecomposition(tuple(cycles), tuple(mults))
