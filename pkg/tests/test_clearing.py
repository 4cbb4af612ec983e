"""Clearing-state computation: push algorithm, fixed-point oracles, pro-rata."""

from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from finclear import (
    EdgeRankingStrategy,
    FinancialNetwork,
    KleeneStart,
    StrategyProfile,
    clear_pro_rata,
    kleene_clearing,
    revenue,
    top_cycle_increase,
)
from finclear.clearing import ProfileError
from _samplers import random_net, random_profile


def two_cycle(ext_u: int = 1) -> tuple[FinancialNetwork, StrategyProfile]:
    net = FinancialNetwork.build(
        ["u", "v"], {"u": ext_u}, [(0, "u", "v", 1), (1, "v", "u", 1)]
    )
    profile = StrategyProfile.of(
        [EdgeRankingStrategy("u", (0,)), EdgeRankingStrategy("v", (1,))]
    )
    return net, profile


class TestMaximalState:
    def test_single_edge_passes_money_through(self):
        net = FinancialNetwork.build(["a", "b"], {"a": 1}, [(0, "a", "b", 1)])
        profile = StrategyProfile.of([EdgeRankingStrategy("a", (0,))])
        cs = top_cycle_increase(net, profile)
        assert cs.assets == {"a": 1, "b": 1}
        assert cs.flows.get(0) == 1

    def test_no_edges_means_assets_are_externals(self):
        net = FinancialNetwork.build(["a", "b"], {"a": 3, "b": 1}, [])
        cs = top_cycle_increase(net, StrategyProfile.of([]))
        assert cs.assets == {"a": 3, "b": 1}

    def test_two_cycle_with_seed_money(self):
        # One external unit circulates once more through the cycle: a_u = 2.
        net, profile = two_cycle(ext_u=1)
        cs = top_cycle_increase(net, profile)
        assert cs.assets == {"u": 2, "v": 1}
        assert cs.flows.get(0) == 1 and cs.flows.get(1) == 1

    def test_dead_cycle_sustains_itself_in_the_maximal_state(self):
        """With no external money at all, the greatest fixed point still runs
        the cycle at full capacity; the least fixed point is zero everywhere.
        The gap is the defining feature of the maximal-state semantics."""
        net, profile = two_cycle(ext_u=0)
        top = top_cycle_increase(net, profile)
        assert top.assets == {"u": 1, "v": 1}
        bottom = kleene_clearing(net, profile, start=KleeneStart.BOTTOM)
        assert bottom.assets == {"u": 0, "v": 0}

    def test_missing_strategy_rejected(self):
        net, profile = two_cycle()
        partial = StrategyProfile.of([profile.strategy_for("u")])
        with pytest.raises(ProfileError):
            top_cycle_increase(net, partial)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_push_agrees_with_both_kleene_oracles(seed):
    rng = random.Random(seed)
    net = random_net(rng)
    profile = random_profile(rng, net)
    pushed = top_cycle_increase(net, profile)
    from_top = kleene_clearing(net, profile, start=KleeneStart.TOP)
    assert pushed.assets == from_top.assets
    assert pushed.flows.flow == from_top.flows.flow
    from_bottom = kleene_clearing(net, profile, start=KleeneStart.BOTTOM)
    assert all(from_bottom.assets[v] <= pushed.assets[v] for v in net.nodes)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_cycle_choice_never_affects_the_result(seed):
    rng = random.Random(seed)
    net = random_net(rng)
    profile = random_profile(rng, net)
    reference = top_cycle_increase(net, profile)
    for sub in range(3):
        again = top_cycle_increase(
            net, profile, cycle_rng=random.Random(seed * 7 + sub)
        )
        assert again.assets == reference.assets
        assert again.flows.flow == reference.flows.flow


class TestProRata:
    def test_two_cycle_fixed_point_is_exact(self):
        net, _ = two_cycle(ext_u=1)
        result = clear_pro_rata(net)
        assert result.converged
        assert result.state.assets == {"u": Fraction(2), "v": Fraction(1)}

    def test_acyclic_network_settles(self):
        net = FinancialNetwork.build(
            ["a", "b", "c"],
            {"a": 3},
            [(0, "a", "b", 2), (1, "a", "c", 2), (2, "b", "c", 1)],
        )
        result = clear_pro_rata(net)
        assert result.converged
        assert result.state.assets["b"] == Fraction(3, 2)
        assert result.state.assets["c"] == Fraction(5, 2)

    def test_leaky_cycle_contracts_forever(self):
        """An unsaturated cycle with a side drain halves its error every lap,
        so exact iteration never lands on the fixed point; the cap reports
        non-convergence and the iterate stays an upper bound."""
        net = FinancialNetwork.build(
            ["u", "v", "s"],
            {"u": 1},
            [(0, "u", "v", 10), (1, "v", "u", 10), (2, "v", "s", 10)],
        )
        result = clear_pro_rata(net)
        assert not result.converged
        # True fixed point: a_u = 2, a_v = 2, a_s = 1.
        assert result.state.assets["u"] >= 2
        assert result.state.assets["v"] >= 2
        assert result.state.assets["u"] - 2 < Fraction(1, 10**9)

    def test_iteration_cap_is_respected(self):
        net = FinancialNetwork.build(
            ["u", "v", "s"],
            {"u": 1},
            [(0, "u", "v", 10), (1, "v", "u", 10), (2, "v", "s", 10)],
        )
        result = clear_pro_rata(net, max_iterations=5)
        assert result.iterations == 5
        assert not result.converged


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_revenue_identity(seed):
    rng = random.Random(seed)
    net = random_net(rng)
    profile = random_profile(rng, net)
    cs = top_cycle_increase(net, profile)
    total_flow = sum(cs.flows.flow.values())
    assert revenue(net, cs) == net.total_external() + total_flow
