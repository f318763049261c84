"""Closed-form equilibrium strategies, their samplers, and maximal correlation.

In the equilibrium of the AND-OR game:

* AND bids ``(y, y)`` with ``P(y <= t) = (v - 1/2) / (v - t)`` on ``[0, 1/2]``,
  which puts an atom of mass ``1 - 1/(2v)`` at the origin.
* OR bids ``(x, 0)`` or ``(0, x)`` with equal probability, where
  ``P(x <= t) = t / (1 - t)`` on ``[0, 1/2]``.

Joint CDFs are extended to all of ``[0, H]^2`` by clamping coordinates to
``[0, 1/2]``.
"""

from __future__ import annotations

import math

import numpy as np

from .distributions import (
    AxisDistribution,
    CheckerboardCopula,
    CopulaDistribution,
    DiscreteDistribution,
    DiscreteMarginal,
    JointBidDistribution,
    Marginal1D,
    MinCopula,
    OrdinalSumCopula,
    ProductCopula,
)
from .errors import RegimeError
from .model import BidPair

__all__ = [
    "check_regime",
    "AndMarginal",
    "OrAxisMarginal",
    "AndEquilibrium",
    "OrEquilibrium",
    "and_joint_cdf",
    "or_joint_cdf",
    "and_bid_from_uniform",
    "or_bid_from_uniforms",
    "sample_and",
    "sample_or",
    "sample_and_many",
    "sample_or_many",
    "open_uniform",
    "max_correlate",
    "marginals",
    "and_variant",
    "independent_and",
    "discretized_and",
]


def check_regime(v: float) -> None:
    if not v > 0.5:
        raise RegimeError(
            f"v={v} <= 1/2: no mixed equilibrium of this form "
            "(a Walrasian equilibrium exists at any per-item price in [v, 1/2])"
        )


class AndMarginal(Marginal1D):
    """Per-item marginal of AND's equilibrium bid."""

    breakpoints = ()

    def __init__(self, v: float):
        check_regime(v)
        self.v = float(v)
        self.c = self.v - 0.5
        self.atom_values = np.array([0.0])
        self.atom_masses = np.array([1.0 - 1.0 / (2.0 * self.v)])
        self.continuous_range = (0.0, 0.5)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x < 0, 0.0, self.c / (self.v - np.clip(x, 0.0, 0.5)))
        return out if out.ndim else float(out)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where((x > 0) & (x < 0.5), self.c / (self.v - x) ** 2, 0.0)
        return out if out.ndim else float(out)

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        out = np.where(u <= self.atom_masses[0], 0.0, self.v - self.c / np.maximum(u, 1e-300))
        return out if out.ndim else float(out)

    def _antideriv(self, y):
        # d/dy [v/(v-y) + ln(v-y)] = y/(v-y)^2
        return self.v / (self.v - y) + np.log(self.v - y)

    def upper_mean(self, a):
        a = np.asarray(a, dtype=float)
        start = np.clip(a, 0.0, 0.5)
        out = self.c * (self._antideriv(0.5) - self._antideriv(start))
        return out if out.ndim else float(out)


class OrAxisMarginal(Marginal1D):
    """Law of OR's positive bid: ``P(x <= t) = t / (1 - t)`` on ``[0, 1/2]``."""

    def __init__(self):
        self.atom_values = np.empty(0)
        self.atom_masses = np.empty(0)
        self.continuous_range = (0.0, 0.5)

    def cdf(self, x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, 0.5)
        out = x / (1.0 - x)
        return out if out.ndim else float(out)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where((x > 0) & (x < 0.5), 1.0 / (1.0 - x) ** 2, 0.0)
        return out if out.ndim else float(out)

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        out = u / (1.0 + u)
        return out if out.ndim else float(out)

    def upper_mean(self, a):
        # d/ds [1/(1-s) + ln(1-s)] = s/(1-s)^2
        a = np.clip(np.asarray(a, dtype=float), 0.0, 0.5)
        out = (2.0 - math.log(2.0)) - (1.0 / (1.0 - a) + np.log(1.0 - a))
        return out if out.ndim else float(out)


class AndEquilibrium(CopulaDistribution):
    """AND's equilibrium strategy: diagonal bids with an atom at the origin."""

    def __init__(self, v: float):
        m = AndMarginal(v)
        super().__init__(m, m, MinCopula(), name=f"and_equilibrium(v={v:g})")
        self.v = float(v)
        self.atom_mass = 1.0 - 1.0 / (2.0 * self.v)


class OrEquilibrium(AxisDistribution):
    """OR's equilibrium strategy.  It does not depend on ``v``."""

    def __init__(self, v: float | None = None):
        g = OrAxisMarginal()
        super().__init__(g, g, alpha=0.5, name="or_equilibrium")
        self.v = v


def and_joint_cdf(v: float, x, y):
    """``(v - 1/2) / (v - min(x, y))`` with ``min(x, y)`` clamped to ``[0, 1/2]``."""
    check_regime(v)
    m = np.clip(np.minimum(np.asarray(x, float), np.asarray(y, float)), 0.0, 0.5)
    out = (v - 0.5) / (v - m)
    return out if np.ndim(out) else float(out)


def or_joint_cdf(v, x, y):
    """``x/(2(1-x)) + y/(2(1-y))`` with coordinates clamped to ``[0, 1/2]``.

    ``v`` is accepted for symmetry with :func:`and_joint_cdf`; OR's
    equilibrium does not depend on it.
    """
    xc = np.clip(np.asarray(x, float), 0.0, 0.5)
    yc = np.clip(np.asarray(y, float), 0.0, 0.5)
    out = xc / (2 * (1 - xc)) + yc / (2 * (1 - yc))
    return out if np.ndim(out) else float(out)


def open_uniform(rng: np.random.Generator, size=None):
    """Uniform draws from the open interval ``(0, 1)``."""
    u = rng.random(size)
    if size is None:
        while u == 0.0:
            u = rng.random()
        return u
    zero = u == 0.0
    while np.any(zero):
        u[zero] = rng.random(int(zero.sum()))
        zero = u == 0.0
    return u


def and_bid_from_uniform(v: float, u):
    """Inverse transform for AND's equilibrium: returns the diagonal level ``y``."""
    check_regime(v)
    u = np.asarray(u, dtype=float)
    y = np.where(u <= 1.0 - 1.0 / (2.0 * v), 0.0, v - (v - 0.5) / np.maximum(u, 1e-300))
    return y if y.ndim else float(y)


def or_bid_from_uniforms(on_item1, u):
    """Inverse transform for OR's equilibrium; ``on_item1`` picks the positive axis."""
    u = np.asarray(u, dtype=float)
    x = u / (1.0 + u)
    first = np.asarray(on_item1, dtype=bool)
    out = np.stack([np.where(first, x, 0.0), np.where(first, 0.0, x)], axis=-1)
    return out


def sample_and(v: float, rng: np.random.Generator) -> BidPair:
    y = and_bid_from_uniform(v, open_uniform(rng))
    return BidPair(y, y)


def sample_or(v: float | None, rng: np.random.Generator) -> BidPair:
    on_item1 = rng.random() < 0.5
    x1, x2 = or_bid_from_uniforms(on_item1, open_uniform(rng))
    return BidPair(float(x1), float(x2))


def sample_and_many(v: float, n: int, rng: np.random.Generator) -> np.ndarray:
    y = and_bid_from_uniform(v, open_uniform(rng, n))
    return np.column_stack([y, y])


def sample_or_many(v: float | None, n: int, rng: np.random.Generator) -> np.ndarray:
    on_item1 = rng.random(n) < 0.5
    return or_bid_from_uniforms(on_item1, open_uniform(rng, n))


def _comonotone_discrete(F: DiscreteDistribution) -> DiscreteDistribution:
    m1, m2 = F.marginal(1), F.marginal(2)
    levels = np.unique(np.concatenate([[0.0], m1._cum, m2._cum]))
    levels[-1] = 1.0
    keep = np.concatenate([[True], np.diff(levels) > 1e-12])
    levels = levels[keep]
    mid = 0.5 * (levels[:-1] + levels[1:])
    pts = np.column_stack([m1.ppf(mid), m2.ppf(mid)])
    return DiscreteDistribution(pts, np.diff(levels), kind=F.kind, name=f"max_correlate({F.name})")


def max_correlate(F: JointBidDistribution) -> JointBidDistribution:
    """``min(F(x, H), F(H, y))``: the comonotone coupling of ``F``'s marginals.

    Discrete inputs are materialized by pairing equal quantiles; anything
    else is wrapped parametrically around its marginals.
    """
    if isinstance(F, DiscreteDistribution):
        return _comonotone_discrete(F)
    return CopulaDistribution(F.marginal(1), F.marginal(2), MinCopula(),
                              name=f"max_correlate({F.name})")


def marginals(F: JointBidDistribution):
    """The two per-item marginal CDFs ``x -> F(x, H)`` and ``y -> F(H, y)``."""
    return F.marginal(1).cdf, F.marginal(2).cdf


def independent_and(v: float) -> CopulaDistribution:
    """AND bidding independently on each item with equilibrium marginals.

    Its origin mass is ``(1 - 1/(2v))^2``, so it is *not* an equilibrium.
    """
    m = AndMarginal(v)
    return CopulaDistribution(m, m, ProductCopula(), name=f"independent_and(v={v:g})")


def and_variant(v: float, coupling: str = "max", matrix=None) -> CopulaDistribution:
    """AND strategies with equilibrium marginals and equilibrium origin atom.

    ``coupling`` chooses how the positive parts of the two items are joined:

    * ``"max"``: comonotone (the diagonal equilibrium itself),
    * ``"independent"``: independent above the origin atom,
    * ``"checkerboard"``: a piecewise-uniform coupling given by a doubly
      stochastic ``matrix`` (a seeded random one if omitted).
    """
    m = AndMarginal(v)
    a = float(m.atom_masses[0])
    if coupling == "max":
        upper = MinCopula()
    elif coupling == "independent":
        upper = ProductCopula()
    elif coupling == "checkerboard":
        if matrix is None:
            matrix = _random_doubly_stochastic(6, np.random.default_rng(20240611))
        upper = CheckerboardCopula(matrix)
    else:
        raise ValueError(f"unknown coupling {coupling!r}; use max, independent or checkerboard")
    C = OrdinalSumCopula(a, MinCopula(), upper)
    return CopulaDistribution(m, m, C, name=f"and_variant({coupling}, v={v:g})")


def _random_doubly_stochastic(n: int, rng: np.random.Generator, iters: int = 500) -> np.ndarray:
    # Sinkhorn balancing of a positive random matrix.
    D = rng.random((n, n)) + 0.05
    for _ in range(iters):
        D /= D.sum(1, keepdims=True)
        D /= D.sum(0, keepdims=True)
    return D


def discretized_and(v: float, levels) -> DiscreteDistribution:
    """AND's equilibrium law pushed onto diagonal grid points (mass ``F(g_k) - F(g_{k-1})``)."""
    g = np.unique(np.asarray(levels, dtype=float))
    F = np.asarray(AndMarginal(v).cdf(g))
    w = np.diff(np.concatenate([[0.0], F]))
    return DiscreteDistribution(np.column_stack([g, g]), w / w.sum(), kind="grid",
                                name="discretized_and")

