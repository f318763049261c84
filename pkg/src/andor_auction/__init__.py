"""Equilibrium tools for two simultaneous first-price auctions with an AND
bidder (wants both items) and an OR bidder (wants either item)."""

__version__ = "0.1.0"

from .errors import AuctionError, BidDomainError, PreconditionError, RegimeError
from .model import Allocation, BidPair, TieBreakRule, default_cap, resolve, sample_outcome, sample_outcomes
from .distributions import (
    AxisDistribution,
    CopulaDistribution,
    DiscreteDistribution,
    JointBidDistribution,
    ks_distance,
)
from .strategies import (
    AndEquilibrium,
    OrEquilibrium,
    and_joint_cdf,
    and_variant,
    independent_and,
    max_correlate,
    or_joint_cdf,
    sample_and,
    sample_or,
)
from .expectations import expected_outcome
from .verifier import (
    best_response_gap,
    check_characterization,
    identical_marginal_equivalences,
    support_diagnostics,
    weak_dominance_check,
)
from .solver import (
    build_grid_game,
    compare_to_analytic,
    enumerate_pure_nash,
    solve_fictitious_play,
    solve_support_enumeration,
)
from .analytics import figure_series, find_poa_minima, monte_carlo_report, poa, prob_and_wins, report, revenue_or

__all__ = [name for name in dir() if not name.startswith("_")]
