"""Network construction, validation, and clearing-state bookkeeping."""

from __future__ import annotations

import copy

import pytest
from hypothesis import given, strategies as st

from finclear import (
    UNBOUNDED,
    ClearingState,
    FinancialNetwork,
    LiabilityEdge,
    revenue,
    validate_network,
)
from finclear.core import (
    FlowAssignment,
    InconsistentStateError,
    UnknownNodeError,
    build_circulation_network,
    check_clearing_consistency,
    decompose_circulation,
    extend_flows_to_circulation,
    node_key,
    total_liabilities,
)


def chain_net() -> FinancialNetwork:
    return FinancialNetwork.build(
        ["a", "b", "c"],
        {"a": 2},
        [(0, "a", "b", 3), (1, "b", "c", 1)],
    )


def state_for(net: FinancialNetwork, flows: dict[int, int]) -> ClearingState:
    full = {e.id: flows.get(e.id, 0) for e in net.edges}
    internal = {
        v: sum(full[e.id] for e in net.in_edges(v)) for v in net.nodes
    }
    assets = {v: net.external(v) + internal[v] for v in net.nodes}
    return ClearingState(
        assets=assets, internal_assets=internal, flows=FlowAssignment(full)
    )


class TestBuild:
    def test_missing_externals_fill_with_zero(self):
        net = chain_net()
        assert net.external("b") == 0
        assert net.external("c") == 0
        assert net.total_external() == 2

    def test_edges_sorted_by_id(self):
        net = FinancialNetwork.build(
            ["a", "b"], {}, [(5, "a", "b", 1), (2, "b", "a", 1)]
        )
        assert [e.id for e in net.edges] == [2, 5]

    def test_nodes_sorted_shortlex(self):
        # "n2" before "n10": shorter ids come first, so numbered ids stay natural.
        net = FinancialNetwork.build(["n10", "n2", "x"], {}, [])
        assert net.nodes == ("x", "n2", "n10")

    def test_edge_tuples_and_objects_mix(self):
        net = FinancialNetwork.build(
            ["a", "b"], {}, [LiabilityEdge(0, "a", "b", 1), (1, "b", "a", 2)]
        )
        assert net.edge(1).weight == 2

    def test_out_edges_unknown_node_raises(self):
        with pytest.raises(UnknownNodeError):
            chain_net().out_edges("zz")

    def test_with_external_replaces_only_one_firm(self):
        net = chain_net().with_external("b", 7)
        assert net.external("b") == 7
        assert net.external("a") == 2


class TestValidate:
    def test_valid_network_is_ok(self):
        assert validate_network(chain_net()).ok

    @pytest.mark.parametrize(
        "nodes,ext,edges,code",
        [
            (["a", "b"], {"a": -1}, [], "negative-external"),
            (["a"], {"ghost": 1}, [], "unknown-external-node"),
            (["a", "b"], {}, [(0, "a", "b", 1), (0, "b", "a", 1)], "duplicate-edge-id"),
            (["a"], {}, [(0, "a", "zz", 1)], "dangling-endpoint"),
            (["a"], {}, [(0, "a", "a", 1)], "self-loop"),
            (["a", "b"], {}, [(0, "a", "b", -2)], "negative-weight"),
            (["a", "b"], {}, [(0, "a", "b", UNBOUNDED)], "unbounded-weight"),
        ],
    )
    def test_violation_codes(self, nodes, ext, edges, code):
        report = validate_network(FinancialNetwork.build(nodes, ext, edges))
        assert code in {v.code for v in report.violations}


def test_unbounded_is_a_singleton_under_copy():
    assert copy.copy(UNBOUNDED) is UNBOUNDED
    assert copy.deepcopy(UNBOUNDED) is UNBOUNDED


@given(st.lists(st.text(alphabet="abn0123456789", min_size=1, max_size=5)))
def test_node_key_orders_by_length_then_text(names):
    ordered = sorted(names, key=node_key)
    assert ordered == sorted(names, key=lambda s: (len(s), s))


def test_total_liabilities_sums_out_weights():
    assert total_liabilities(chain_net(), "a") == 3
    assert total_liabilities(chain_net(), "c") == 0


class TestClearingState:
    def test_revenue_is_externals_plus_flow(self):
        net = chain_net()
        cs = state_for(net, {0: 2, 1: 1})
        assert revenue(net, cs) == 2 + 2 + 1

    def test_flow_over_capacity_rejected(self):
        net = chain_net()
        with pytest.raises(InconsistentStateError):
            check_clearing_consistency(net, state_for(net, {0: 4}))

    def test_asset_identity_enforced(self):
        net = chain_net()
        good = state_for(net, {0: 1})
        bad = ClearingState(
            assets={**good.assets, "b": 99},
            internal_assets=good.internal_assets,
            flows=good.flows,
        )
        with pytest.raises(InconsistentStateError):
            check_clearing_consistency(net, bad)


class TestCirculation:
    def test_source_id_avoids_collision(self):
        net = FinancialNetwork.build(["s", "s'"], {"s": 1}, [])
        circ = build_circulation_network(net)
        assert circ.source not in net.nodes

    def test_aux_edges_cover_all_firms(self):
        net = chain_net()
        circ = build_circulation_network(net)
        # One unbounded surplus edge per firm; source-out only where externals are positive.
        assert {e.src for e in circ.source_in} == set(net.nodes)
        assert all(e.is_unbounded() for e in circ.source_in)
        assert [(e.dst, e.weight) for e in circ.source_out] == [("a", 2)]

    def test_invalid_base_network_rejected(self):
        net = FinancialNetwork.build(["a"], {}, [(0, "a", "a", 1)])
        with pytest.raises(InconsistentStateError):
            build_circulation_network(net)

    def test_extended_state_is_conservative(self):
        net = chain_net()
        circ = build_circulation_network(net)
        cs = state_for(net, {0: 2, 1: 1})
        flows = extend_flows_to_circulation(circ, cs)
        for v in circ.all_nodes():
            inflow = sum(flows.get(e.id) for e in circ.in_edges(v))
            outflow = sum(flows.get(e.id) for e in circ.out_edges(v))
            assert inflow == outflow

    def test_decompose_two_cycle(self):
        net = FinancialNetwork.build(
            ["u", "v"], {}, [(0, "u", "v", 1), (1, "v", "u", 1)]
        )
        circ = build_circulation_network(net)
        cs = state_for(net, {0: 1, 1: 1})
        flows = extend_flows_to_circulation(circ, cs)
        decomp = decompose_circulation(circ, flows)
        assert all(m > 0 for m in decomp.multiplicity)
        recombined = decomp.recompose()
        assert all(
            recombined.get(e.id) == flows.get(e.id) for e in circ.all_edges()
        )
