"""Strategic debt clearing: exact fixed points, equilibria, and welfare bounds.

Firms owe each other along weighted edges and choose the order in which
liabilities get paid. The package computes the maximal clearing state of a
strategy profile exactly, searches strategy spaces for best responses and
equilibria, and measures how much revenue strategic behavior can destroy.
"""

from .clearing import (
    IterationLimitError,
    KleeneStart,
    ProRataResult,
    clear_pro_rata,
    kleene_clearing,
    top_cycle_increase,
)
from .core import (
    UNBOUNDED,
    ClearingState,
    FinancialNetwork,
    FinclearError,
    LiabilityEdge,
    ValidationReport,
    Violation,
    check_clearing_consistency,
    revenue,
    validate_network,
)
from .equilibria import (
    BestResponse,
    CycleBound,
    DeviationWitness,
    EnumerationResult,
    EquilibriumFinding,
    EquilibriumReport,
    OptimalStrongEquilibrium,
    SearchBudget,
    SearchSpace,
    SocialOptimum,
    Verdict,
    WelfareMetrics,
    best_response_exact,
    enumerate_equilibria,
    is_nash,
    is_strong_equilibrium,
    min_max_cycle_d,
    optimal_strong_equilibrium,
    social_optimum_edge_ranking,
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
    oracle_exact_cover,
    oracle_max_sat,
)
from .io import (
    NetworkDocument,
    ParseError,
    load_document,
    load_network,
    parse_document,
    render_document,
    render_dot,
    save_document,
)
from .strategies import (
    EdgeRankingStrategy,
    ProRataStrategy,
    StrategyProfile,
    ThresholdRankingStrategy,
    active_segment,
    check_strategy,
    threshold_from_flows,
)

__all__ = [
    "UNBOUNDED",
    "BestResponse",
    "ClearingState",
    "CycleBound",
    "DeviationWitness",
    "EdgeRankingStrategy",
    "EnumerationResult",
    "EquilibriumFinding",
    "EquilibriumReport",
    "FinancialNetwork",
    "FinclearError",
    "IterationLimitError",
    "KleeneStart",
    "LiabilityEdge",
    "NetworkDocument",
    "OptimalStrongEquilibrium",
    "ParseError",
    "ProRataResult",
    "ProRataStrategy",
    "SatFormula",
    "SearchBudget",
    "SearchSpace",
    "SocialOptimum",
    "StrategyProfile",
    "ThreeDmInstance",
    "ThreeDmVariant",
    "ThresholdRankingStrategy",
    "ValidationReport",
    "Verdict",
    "Violation",
    "WelfareMetrics",
    "active_segment",
    "best_response_exact",
    "check_clearing_consistency",
    "check_strategy",
    "clear_pro_rata",
    "enumerate_equilibria",
    "gen_edge_spos_family",
    "gen_from_3dm",
    "gen_from_sat",
    "gen_no_nash",
    "gen_poa_unbounded",
    "gen_pos_unbounded",
    "gen_spoa_family",
    "is_nash",
    "is_strong_equilibrium",
    "kleene_clearing",
    "load_document",
    "load_network",
    "min_max_cycle_d",
    "oracle_exact_cover",
    "oracle_max_sat",
    "optimal_strong_equilibrium",
    "parse_document",
    "render_document",
    "render_dot",
    "revenue",
    "save_document",
    "social_optimum_edge_ranking",
    "top_cycle_increase",
    "validate_network",
    "welfare_metrics",
]

__version__ = "0.1.0"
