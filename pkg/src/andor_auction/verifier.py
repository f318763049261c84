"""Best-response gaps, equilibrium characterization checks, and support diagnostics."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .distributions import AxisDistribution, JointBidDistribution
from .errors import PreconditionError
from .expectations import against_pure_and, against_pure_or, expected_outcome
from .model import TieBreakRule, default_cap
from .strategies import AndMarginal, max_correlate, or_joint_cdf

__all__ = [
    "SupportDiagnostics",
    "EquivalenceReport",
    "bid_grid",
    "EquilibriumReport",
    "Violation",
    "CharacterizationResult",
    "or_utility_of_bid",
    "or_utility_formula",
    "and_utility_of_bid",
    "and_utility_decomposition",
    "best_response_gap",
    "check_characterization",
    "weak_dominance_check",
    "support_diagnostics",
    "identical_marginal_equivalences",
]


@dataclass(frozen=True)
class SupportDiagnostics:
    low_1: float
    low_2: float
    high_1: float
    high_2: float
    atom_at_origin: float


@dataclass
class EquilibriumReport:
    eps_and: float
    eps_or: float
    u_and_star: float
    u_or_star: float
    eps: float
    is_eps_nash: bool
    grid_step: float
    grid_points: int
    best_and_bid: tuple[str, str]  # "x+" marks a right-limit
    best_or_bid: tuple[str, str]  # "x+" marks a right-limit
    notes: str = ""

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Violation:
    clause: str
    location: tuple
    magnitude: float


@dataclass
class CharacterizationResult:
    ok: bool
    violations: list[Violation] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def _tie(tie):
    return tie or TieBreakRule.constant(0.5)


def or_utility_of_bid(F_and: JointBidDistribution, v: float, bid, tie: TieBreakRule | None = None):
    """OR's expected utility from the pure bid ``bid`` against AND mixing by ``F_and``.

    Vectorized over ``bid``.  Ties (including at a zero coordinate against
    an origin atom) are split by ``tie``.
    """
    return against_pure_or(F_and, bid, _tie(tie), v).u_or


def or_utility_formula(F_and: JointBidDistribution, v: float, x, y):
    """Inclusion-exclusion form ``F(x,H)(v-x) + F(H,y)(v-y) - F(x,y) v``.

    Valid for ``x, y > 0`` when ``F_and`` has no atoms at ``x`` or ``y``.
    """
    m1, m2 = F_and.marginal(1), F_and.marginal(2)
    return (np.asarray(m1.cdf(x)) * (v - np.asarray(x)) + np.asarray(m2.cdf(y)) * (v - np.asarray(y))
            - np.asarray(F_and.cdf(x, y)) * v)


def and_utility_of_bid(F_or: JointBidDistribution, bid, tie: TieBreakRule | None = None, v: float = 1.0):
    """AND's expected utility from the pure bid ``bid`` against OR mixing by ``F_or``."""
    return against_pure_and(bid, F_or, _tie(tie), v).u_and


def and_utility_decomposition(F_or: AxisDistribution, x, y):
    """``g1(x) + g2(y)`` with ``g1 = F(x,0)(1-x) - alpha x``, ``g2 = F(0,y)(1-y) - (1-alpha) y``.

    Only meaningful for an atomless axis-supported OR strategy, where
    ``alpha = F(0, H)``.
    """
    if not isinstance(F_or, AxisDistribution):
        raise PreconditionError("decomposition requires an axis-supported OR strategy")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    alpha = float(F_or.marginal(1).cdf(0.0))
    g1 = np.asarray(F_or.cdf(x, 0.0)) * (1 - x) - alpha * x
    g2 = np.asarray(F_or.cdf(0.0, y)) * (1 - y) - (1 - alpha) * y
    return g1 + g2


def _rule_with(tie: TieBreakRule, q1=None, q2=None) -> TieBreakRule:
    const = TieBreakRule.constant
    return TieBreakRule(const(q1).q1 if q1 is not None else tie.q1,
                        const(q2).q2 if q2 is not None else tie.q2,
                        label=f"{tie.label}|limit")


def bid_grid(grid_step: float, H: float) -> np.ndarray:
    """All multiples of ``grid_step`` in ``[0, H]`` plus 0, 1/2 and ``H``."""
    k = np.arange(0, int(np.floor(H / grid_step + 1e-9)) + 1)
    g = np.concatenate([k * grid_step, [0.0, 0.5, H]])
    g = g[(g >= 0) & (g <= H)]
    return np.unique(g)


def _best_pure(utility, X, Y, tie: TieBreakRule, deviator_wins: float, H: float):
    """Max utility over the grid and its right-limits ``(x+, y)``, ``(x, y+)``, ``(x+, y+)``.

    A right-limit bid pays ``x`` but wins every tie at ``x``, which is
    the same as overriding the tie rule in the deviator's favour.
    """
    best, arg = -np.inf, None
    for lim1, lim2 in ((False, False), (True, False), (False, True), (True, True)):
        rule = _rule_with(tie, deviator_wins if lim1 else None, deviator_wins if lim2 else None)
        u = np.asarray(utility(rule), dtype=float)
        if lim1:
            u = np.where(X < H, u, -np.inf)
        if lim2:
            u = np.where(Y < H, u, -np.inf)
        k = int(np.argmax(u))
        if u.flat[k] > best:
            best = float(u.flat[k])
            arg = (float(X.flat[k]), float(Y.flat[k]), lim1, lim2)
    return best, arg


def best_response_gap(F_and: JointBidDistribution, F_or: JointBidDistribution, v: float,
                      tie: TieBreakRule | None = None, grid_step: float = 1 / 512,
                      eps: float | None = None, H: float | None = None) -> EquilibriumReport:
    """Largest gain from a unilateral pure deviation, searched on a bid grid.

    The grid is every multiple of ``grid_step`` in ``[0, H]`` plus the
    landmarks 0, 1/2 and ``H``.  Each grid bid is also evaluated as a
    right-limit in either coordinate, so suprema that are approached but not
    attained just above an opponent atom (e.g. OR near the origin) are
    captured exactly.  Off atoms, utilities are 1-Lipschitz per coordinate,
    so the true gap exceeds the reported one by at most ``2 * grid_step``.
    """
    if grid_step <= 0:
        raise PreconditionError("grid_step must be positive")
    tie = _tie(tie)
    H = default_cap(v) if H is None else H
    eps = grid_step if eps is None else eps
    star = expected_outcome(F_and, F_or, tie, v)
    g = bid_grid(grid_step, H)
    X, Y = np.meshgrid(g, g, indexing="ij")

    best_and, arg_and = _best_pure(lambda r: against_pure_and((X, Y), F_or, r, v).u_and, X, Y, tie, 1.0, H)
    best_or, arg_or = _best_pure(lambda r: against_pure_or(F_and, (X, Y), r, v).u_or, X, Y, tie, 0.0, H)
    eps_and = best_and - float(star.u_and)
    eps_or = best_or - float(star.u_or)
    return EquilibriumReport(
        eps_and=eps_and,
        eps_or=eps_or,
        u_and_star=float(star.u_and),
        u_or_star=float(star.u_or),
        eps=eps,
        is_eps_nash=bool(max(eps_and, eps_or) <= eps),
        grid_step=grid_step,
        grid_points=int(g.size) ** 2,
        best_and_bid=_fmt_bid(arg_and),
        best_or_bid=_fmt_bid(arg_or),
        notes="grid plus right-limits; true gap within 2*grid_step of reported off atoms",
    )


def _fmt_bid(arg):
    x, y, lim1, lim2 = arg
    return (f"{x:.12g}" + ("+" if lim1 else ""), f"{y:.12g}" + ("+" if lim2 else ""))


def check_characterization(F_and: JointBidDistribution, F_or: JointBidDistribution, v: float,
                           tol: float = 1e-9, n_eval: int = 201, H: float | None = None
                           ) -> CharacterizationResult:
    """Check the equilibrium characterization on an evaluation grid.

    Clauses:
      (i) ``F_or`` equals OR's equilibrium CDF everywhere,
      (ii) each marginal of ``F_and`` equals AND's equilibrium marginal,
      (iii) ``F_and(0, 0) = 1 - 1/(2v)``.
    Each violated clause is reported once, at its worst grid point.
    """
    if tol <= 0:
        raise PreconditionError("tol must be positive")
    H = default_cap(v) if H is None else H
    g = np.unique(np.concatenate([np.linspace(0.0, H, n_eval), [0.5]]))
    violations: list[Violation] = []

    X, Y = np.meshgrid(g, g, indexing="ij")
    dev = np.abs(np.asarray(F_or.cdf(X, Y)) - or_joint_cdf(v, X, Y))
    k = int(np.argmax(dev))
    if dev.flat[k] > tol:
        violations.append(Violation("(i) OR strategy", (float(X.flat[k]), float(Y.flat[k])), float(dev.flat[k])))

    target = AndMarginal(v).cdf(g)
    for item in (1, 2):
        dev = np.abs(np.asarray(F_and.marginal(item).cdf(g)) - target)
        k = int(np.argmax(dev))
        if dev[k] > tol:
            violations.append(Violation(f"(ii) AND marginal {item}", (float(g[k]),), float(dev[k])))

    origin = float(F_and.cdf(0.0, 0.0))
    want = 1.0 - 1.0 / (2.0 * v)
    if abs(origin - want) > tol:
        violations.append(Violation("(iii) AND origin mass", (0.0, 0.0), abs(origin - want)))
    return CharacterizationResult(ok=not violations, violations=violations)


def weak_dominance_check(F: JointBidDistribution, tie: TieBreakRule | None, pure_or_bids,
                         v: float = 1.0, tol: float = 1e-10) -> bool:
    """True iff the maximally correlated version of ``F`` does at least as well
    as ``F`` for AND against every supplied pure OR bid."""
    tie = _tie(tie)
    bids = np.asarray(pure_or_bids, dtype=float).reshape(-1, 2)
    bF = max_correlate(F)
    u = against_pure_or(F, (bids[:, 0], bids[:, 1]), tie, v).u_and
    ub = against_pure_or(bF, (bids[:, 0], bids[:, 1]), tie, v).u_and
    return bool(np.all(np.asarray(ub) >= np.asarray(u) - tol))


def support_diagnostics(F: JointBidDistribution) -> SupportDiagnostics:
    """Per-item support bounds and the mass at the origin."""
    lo1, hi1 = F.marginal(1).support()
    lo2, hi2 = F.marginal(2).support()
    return SupportDiagnostics(lo1, lo2, hi1, hi2, float(F.cdf(0.0, 0.0)))


@dataclass
class EquivalenceReport:
    quantities: dict
    holds: dict
    consistent: bool
    payments_equal: bool

    def as_dict(self) -> dict:
        return asdict(self)


def identical_marginal_equivalences(F, F_prime, F_or, v: float, tie: TieBreakRule | None = None,
                                    tol: float = 1e-12, n_check: int = 201) -> EquivalenceReport:
    """Compare two AND strategies with identical marginals against a common OR strategy.

    Computes ``u_and``, ``u_or``, P[AND wins both], P[OR wins an item] and
    P[AND wins none] under both pairings and checks that the five
    orderings (u_and <=, u_or >=, both <=, OR-item >=, none <=) agree.
    """
    tie = _tie(tie)
    g = np.linspace(0.0, default_cap(v), n_check)
    for item in (1, 2):
        d = np.max(np.abs(np.asarray(F.marginal(item).cdf(g)) - np.asarray(F_prime.marginal(item).cdf(g))))
        if d > 1e-9:
            raise PreconditionError(f"marginals differ on item {item} by {d:.3g}")
    a = expected_outcome(F, F_or, tie, v)
    b = expected_outcome(F_prime, F_or, tie, v)
    q = {
        "u_and": (float(a.u_and), float(b.u_and)),
        "u_or": (float(a.u_or), float(b.u_or)),
        "p_and_both": (float(a.p_both), float(b.p_both)),
        "p_or_item": (float(a.p_or_wins_any), float(b.p_or_wins_any)),
        "p_and_none": (float(a.p_none), float(b.p_none)),
        "pay_and": (float(a.pay_and), float(b.pay_and)),
        "pay_or": (float(a.pay_or), float(b.pay_or)),
    }
    holds = {
        "u_and": q["u_and"][0] <= q["u_and"][1] + tol,
        "u_or": q["u_or"][0] >= q["u_or"][1] - tol,
        "p_and_both": q["p_and_both"][0] <= q["p_and_both"][1] + tol,
        "p_or_item": q["p_or_item"][0] >= q["p_or_item"][1] - tol,
        "p_and_none": q["p_and_none"][0] <= q["p_and_none"][1] + tol,
    }
    pay_eq = (abs(q["pay_and"][0] - q["pay_and"][1]) <= 1e-9
              and abs(q["pay_or"][0] - q["pay_or"][1]) <= 1e-9)
    return EquivalenceReport(q, holds, len(set(holds.values())) == 1, pay_eq)

