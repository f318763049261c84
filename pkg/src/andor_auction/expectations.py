"""Expected outcomes when one or both players randomize.

``against_pure_or`` and ``against_pure_and`` are vectorized over the pure
bid, which is what best-response sweeps need.  ``expected_outcome``
integrates one of them over the other player's mixed strategy.
"""

from __future__ import annotations

import numpy as np

from .distributions import AxisDistribution, DiscreteDistribution, JointBidDistribution
from .model import Allocation, TieBreakRule, combine

__all__ = ["against_pure_or", "against_pure_and", "expected_outcome"]

_LT, _EQ, _GT = 0, 1, 2


def _tie_weights(q):
    """AND's win weight indexed by the *AND* bid's relation to OR's."""
    q = np.asarray(q, dtype=float)
    return np.stack([np.zeros_like(q), q, np.ones_like(q)], axis=-1)


def _squeeze(alloc: Allocation) -> Allocation:
    if np.ndim(alloc.p_both) == 0:
        return Allocation(*(float(getattr(alloc, k)) for k in
                            ("p_both", "p_1_only", "p_2_only", "p_none", "pay_and", "pay_or")),
                          v=alloc.v)
    return alloc


def _from_cells(cells, w1, w2, pay_and, pay_or, v) -> Allocation:
    # cells[..., i, j] with i, j the AND-side relation index; w*: (..., 3)
    p_both = np.einsum("...ij,...i,...j->...", cells, w1, w2)
    p_1 = np.einsum("...ij,...i,...j->...", cells, w1, 1 - w2)
    p_2 = np.einsum("...ij,...i,...j->...", cells, 1 - w1, w2)
    p_0 = np.einsum("...ij,...i,...j->...", cells, 1 - w1, 1 - w2)
    return _squeeze(Allocation(p_both, p_1, p_2, p_0, pay_and, pay_or, v))


def against_pure_or(F_and: JointBidDistribution, or_bid, tie: TieBreakRule, v: float) -> Allocation:
    """AND mixes according to ``F_and``; OR plays the pure bid ``(a, b)``."""
    a = np.asarray(or_bid[0], dtype=float)
    b = np.asarray(or_bid[1], dtype=float)
    a, b = np.broadcast_arrays(a, b)
    cells = F_and.cells(a, b)  # relation of AND's bid to OR's
    q1, q2 = np.asarray(tie.q(1, a)), np.asarray(tie.q(2, b))
    w1, w2 = _tie_weights(q1), _tie_weights(q2)
    m1, m2 = F_and.marginal(1), F_and.marginal(2)
    at1, at2 = np.asarray(m1.mass_at(a)), np.asarray(m2.mass_at(b))
    pay_and = (np.asarray(m1.upper_mean(a)) + q1 * a * at1
               + np.asarray(m2.upper_mean(b)) + q2 * b * at2)
    or1 = np.asarray(m1.cdf_left(a)) + (1 - q1) * at1
    or2 = np.asarray(m2.cdf_left(b)) + (1 - q2) * at2
    pay_or = a * or1 + b * or2
    return _from_cells(cells, w1, w2, pay_and, pay_or, v)


def against_pure_and(and_bid, F_or: JointBidDistribution, tie: TieBreakRule, v: float) -> Allocation:
    """AND plays the pure bid ``(x, y)``; OR mixes according to ``F_or``."""
    x = np.asarray(and_bid[0], dtype=float)
    y = np.asarray(and_bid[1], dtype=float)
    x, y = np.broadcast_arrays(x, y)
    cells_or = F_or.cells(x, y)  # relation of OR's bid to AND's
    cells = cells_or[..., ::-1, ::-1]  # flip to AND's relation to OR's
    q1, q2 = np.asarray(tie.q(1, x)), np.asarray(tie.q(2, y))
    w1, w2 = _tie_weights(q1), _tie_weights(q2)
    m1, m2 = F_or.marginal(1), F_or.marginal(2)
    at1, at2 = np.asarray(m1.mass_at(x)), np.asarray(m2.mass_at(y))
    and1 = np.asarray(m1.cdf_left(x)) + q1 * at1
    and2 = np.asarray(m2.cdf_left(y)) + q2 * at2
    pay_and = x * and1 + y * and2
    pay_or = (np.asarray(m1.upper_mean(x)) + (1 - q1) * x * at1
              + np.asarray(m2.upper_mean(y)) + (1 - q2) * y * at2)
    return _from_cells(cells, w1, w2, pay_and, pay_or, v)


_FIELDS = ("p_both", "p_1_only", "p_2_only", "p_none", "pay_and", "pay_or")


def _vec(alloc: Allocation) -> np.ndarray:
    return np.array([getattr(alloc, k) for k in _FIELDS], dtype=float)


def _weighted_sum(allocs: Allocation, weights) -> Allocation:
    vals = [float(np.dot(np.asarray(getattr(allocs, k)), weights)) for k in _FIELDS]
    return Allocation(*vals, v=allocs.v)


def expected_outcome(F_and: JointBidDistribution, F_or: JointBidDistribution,
                     tie: TieBreakRule, v: float) -> Allocation:
    """Expected allocation and payments when both players mix independently.

    Sums over atoms when either side is discrete; otherwise integrates over
    an axis-supported OR strategy by adaptive quadrature.
    """
    if isinstance(F_or, DiscreteDistribution):
        pts = F_or.points
        return _weighted_sum(against_pure_or(F_and, (pts[:, 0], pts[:, 1]), tie, v), F_or.masses)
    if isinstance(F_and, DiscreteDistribution):
        pts = F_and.points
        return _weighted_sum(against_pure_and((pts[:, 0], pts[:, 1]), F_or, tie, v), F_and.masses)
    if isinstance(F_or, AxisDistribution):
        total = np.zeros(len(_FIELDS))
        kinks = _kinks(F_and)
        for weight, item, cond in F_or.branches():
            if weight == 0:
                continue
            if item == 1:
                h = lambda s: _vec(against_pure_or(F_and, (s, 0.0), tie, v))  # noqa: E731
            else:
                h = lambda s: _vec(against_pure_or(F_and, (0.0, s), tie, v))  # noqa: E731
            total += weight * cond.expect(h, points=kinks)
        return Allocation(*total, v=v)
    raise NotImplementedError(
        f"expected_outcome needs a discrete side or an axis-supported OR strategy, "
        f"got {type(F_and).__name__} vs {type(F_or).__name__}"
    )


def _kinks(F: JointBidDistribution):
    pts = set()
    for item in (1, 2):
        m = F.marginal(item)
        pts.update(float(a) for a in m.atom_values)
        pts.update(m.breakpoints)
    return tuple(sorted(pts))
