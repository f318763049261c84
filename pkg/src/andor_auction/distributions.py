"""One- and two-dimensional bid distributions.

A joint bid distribution is anything that can answer
``P(X <= x, Y <= y)`` together with the strict variants ``P(X < x, ...)``.
Those four corner probabilities are enough to recover the probability of
every ``{X <,=,> a} x {Y <,=,> b}`` cell, which is all the auction needs:
first-price outcomes only depend on how the opponent's bid compares with
your own on each item.

Three concrete families cover everything the package builds:

* :class:`CopulaDistribution`: two marginals glued by a copula
  (comonotone, independent, ordinal sums, checkerboards).
* :class:`AxisDistribution`: a bidder who always bids 0 on one item.
* :class:`DiscreteDistribution`: finitely many atoms (grid or empirical).
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

__all__ = [
    "Marginal1D",
    "DiscreteMarginal",
    "MixtureMarginal",
    "ScaledMarginal",
    "Copula",
    "MinCopula",
    "ProductCopula",
    "OrdinalSumCopula",
    "CheckerboardCopula",
    "JointBidDistribution",
    "CopulaDistribution",
    "AxisDistribution",
    "DiscreteDistribution",
    "ks_distance",
]

QUAD_EPSABS = 1e-13


# ---------------------------------------------------------------------------
# One-dimensional marginals
# ---------------------------------------------------------------------------


class Marginal1D:
    """A distribution on the real line: finitely many atoms plus a density.

    Subclasses provide ``atom_values``/``atom_masses``, ``cdf`` and, if they
    have a continuous part, ``pdf`` and ``continuous_range``.
    """

    atom_values: np.ndarray = np.empty(0)
    atom_masses: np.ndarray = np.empty(0)
    continuous_range: tuple[float, float] | None = None
    breakpoints: tuple[float, ...] = ()

    def cdf(self, x):
        raise NotImplementedError

    def pdf(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def ppf(self, u):
        raise NotImplementedError

    def mass_at(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for a, m in zip(self.atom_values, self.atom_masses):
            out = out + np.where(x == a, m, 0.0)
        return out if out.ndim else float(out)

    def cdf_left(self, x):
        """``P(X < x)``."""
        out = np.asarray(self.cdf(x)) - np.asarray(self.mass_at(x))
        out = np.maximum(out, 0.0)
        return out if out.ndim else float(out)

    def support(self) -> tuple[float, float]:
        lo, hi = math.inf, -math.inf
        for a, m in zip(self.atom_values, self.atom_masses):
            if m > 0:
                lo, hi = min(lo, a), max(hi, a)
        if self.continuous_range is not None:
            lo = min(lo, self.continuous_range[0])
            hi = max(hi, self.continuous_range[1])
        return float(lo), float(hi)

    def expect(self, h: Callable, points: Sequence[float] = ()):
        """``E[h(X)]``; ``h`` may be vector valued (numpy array per point)."""
        total = 0.0
        for a, m in zip(self.atom_values, self.atom_masses):
            if m > 0:
                total = total + m * np.asarray(h(float(a)), dtype=float)
        if self.continuous_range is not None:
            lo, hi = self.continuous_range
            pts = sorted({p for p in (*self.breakpoints, *points) if lo < p < hi})
            val, _ = integrate.quad_vec(
                lambda s: np.asarray(h(s), dtype=float) * float(self.pdf(s)),
                lo, hi, epsabs=QUAD_EPSABS, epsrel=1e-12, points=pts or None, limit=500,
            )
            total = total + val
        return total

    def upper_mean(self, a):
        """``E[X ; X > a]`` (vectorized over ``a``)."""
        a_arr = np.atleast_1d(np.asarray(a, dtype=float))
        out = np.empty_like(a_arr)
        for k, ak in enumerate(a_arr):
            acc = float(np.sum(np.where(self.atom_values > ak, self.atom_values * self.atom_masses, 0.0)))
            if self.continuous_range is not None:
                lo, hi = self.continuous_range
                start = max(lo, ak)
                if start < hi:
                    acc += integrate.quad(lambda s: s * float(self.pdf(s)), start, hi,
                                          epsabs=QUAD_EPSABS, epsrel=1e-12, limit=200)[0]
            out[k] = acc
        return out if np.ndim(a) else float(out[0])

    def mean(self) -> float:
        return float(self.upper_mean(-math.inf))


class DiscreteMarginal(Marginal1D):
    """Finitely many atoms."""

    def __init__(self, values, masses):
        values = np.asarray(values, dtype=float)
        masses = np.asarray(masses, dtype=float)
        uniq, inv = np.unique(values, return_inverse=True)
        agg = np.zeros(uniq.shape)
        np.add.at(agg, inv, masses)
        keep = agg > 0
        self.atom_values = uniq[keep]
        self.atom_masses = agg[keep]
        self._cum = np.cumsum(self.atom_masses)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.atom_values, x, side="right")
        cum = np.concatenate([[0.0], self._cum])
        out = np.minimum(cum[idx], 1.0)
        return out if out.ndim else float(out)

    def cdf_left(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.atom_values, x, side="left")
        cum = np.concatenate([[0.0], self._cum])
        out = np.minimum(cum[idx], 1.0)
        return out if out.ndim else float(out)

    def mass_at(self, x):
        out = np.asarray(self.cdf(x)) - np.asarray(self.cdf_left(x))
        return out if out.ndim else float(out)

    def upper_mean(self, a):
        a = np.asarray(a, dtype=float)
        tail = np.concatenate([np.cumsum((self.atom_values * self.atom_masses)[::-1])[::-1], [0.0]])
        out = tail[np.searchsorted(self.atom_values, a, side="right")]
        return out if out.ndim else float(out)

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        idx = np.minimum(np.searchsorted(self._cum, u, side="left"), len(self._cum) - 1)
        out = self.atom_values[idx]
        return out if out.ndim else float(out)


class MixtureMarginal(Marginal1D):
    """Finite mixture ``sum_k w_k F_k``."""

    def __init__(self, components: Sequence[tuple[float, Marginal1D]]):
        self.components = [(float(w), m) for w, m in components if w > 0]
        vals, masses = [], []
        for w, m in self.components:
            vals.extend(m.atom_values)
            masses.extend(w * np.asarray(m.atom_masses))
        disc = DiscreteMarginal(vals, masses) if vals else None
        self.atom_values = disc.atom_values if disc else np.empty(0)
        self.atom_masses = disc.atom_masses if disc else np.empty(0)
        ranges = [m.continuous_range for _, m in self.components if m.continuous_range]
        self.continuous_range = (min(r[0] for r in ranges), max(r[1] for r in ranges)) if ranges else None
        self.breakpoints = tuple(sorted({b for _, m in self.components for b in m.breakpoints}))

    def cdf(self, x):
        return sum(w * np.asarray(m.cdf(x)) for w, m in self.components)

    def pdf(self, x):
        return sum(w * np.asarray(m.pdf(x)) for w, m in self.components)

    def upper_mean(self, a):
        return sum(w * np.asarray(m.upper_mean(a)) for w, m in self.components)


class ScaledMarginal(Marginal1D):
    """Distribution of ``factor * X`` for ``X ~ base``."""

    def __init__(self, base: Marginal1D, factor: float):
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        self.base, self.factor = base, float(factor)
        self.atom_values = np.asarray(base.atom_values) * factor
        self.atom_masses = np.asarray(base.atom_masses)
        r = base.continuous_range
        self.continuous_range = (r[0] * factor, r[1] * factor) if r else None
        self.breakpoints = tuple(b * factor for b in base.breakpoints)

    def cdf(self, x):
        return self.base.cdf(np.asarray(x, dtype=float) / self.factor)

    def pdf(self, x):
        return np.asarray(self.base.pdf(np.asarray(x, dtype=float) / self.factor)) / self.factor

    def ppf(self, u):
        return self.factor * np.asarray(self.base.ppf(u))

    def upper_mean(self, a):
        return self.factor * np.asarray(self.base.upper_mean(np.asarray(a, dtype=float) / self.factor))


# ---------------------------------------------------------------------------
# Copulas
# ---------------------------------------------------------------------------


class Copula:
    def __call__(self, u, v):
        raise NotImplementedError


class MinCopula(Copula):
    """Upper Frechet bound: the comonotone coupling."""

    def __call__(self, u, v):
        return np.minimum(u, v)


class ProductCopula(Copula):
    def __call__(self, u, v):
        return np.asarray(u) * np.asarray(v)


class OrdinalSumCopula(Copula):
    """``lower`` on ``[0, a]^2``, ``upper`` on ``[a, 1]^2``, comonotone across blocks."""

    def __init__(self, a: float, lower: Copula, upper: Copula):
        if not 0.0 <= a <= 1.0:
            raise ValueError("split point must lie in [0, 1]")
        self.a, self.lower, self.upper = float(a), lower, upper

    def __call__(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        a = self.a
        out = np.minimum(u, v)
        if a > 0:
            lo = (u <= a) & (v <= a)
            out = np.where(lo, a * self.lower(np.clip(u / a, 0, 1), np.clip(v / a, 0, 1)), out)
        if a < 1:
            hi = (u >= a) & (v >= a)
            s = 1.0 - a
            out = np.where(hi, a + s * self.upper(np.clip((u - a) / s, 0, 1),
                                                  np.clip((v - a) / s, 0, 1)), out)
        return out


class CheckerboardCopula(Copula):
    """Piecewise-uniform copula from a doubly stochastic ``n x n`` matrix.

    Cell ``(i, j)`` of the unit square gets mass ``D[i, j] / n``.
    """

    def __init__(self, doubly_stochastic):
        D = np.asarray(doubly_stochastic, dtype=float)
        n = D.shape[0]
        if D.shape != (n, n) or np.any(D < 0):
            raise ValueError("need a square nonnegative matrix")
        if not (np.allclose(D.sum(0), 1, atol=1e-12) and np.allclose(D.sum(1), 1, atol=1e-12)):
            raise ValueError("matrix must be doubly stochastic")
        self.n = n
        self.P = D / n

    def __call__(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        shape = np.broadcast(u, v).shape
        uu = np.broadcast_to(u, shape).reshape(-1, 1)
        vv = np.broadcast_to(v, shape).reshape(-1, 1)
        k = np.arange(self.n)
        A = np.clip(self.n * uu - k, 0.0, 1.0)
        B = np.clip(self.n * vv - k, 0.0, 1.0)
        out = np.einsum("ki,ij,kj->k", A, self.P, B)
        return out.reshape(shape)


# ---------------------------------------------------------------------------
# Joint distributions
# ---------------------------------------------------------------------------


def _shape_out(out):
    out = np.asarray(out, dtype=float)
    return out if out.ndim else float(out)


class JointBidDistribution:
    """Base class for a joint distribution of a bid pair ``(X, Y)``.

    ``kind`` is one of ``"parametric"``, ``"grid"`` or ``"empirical"``.
    """

    kind = "parametric"
    name = "joint"

    def prob_le(self, x, y, strict_x: bool = False, strict_y: bool = False):
        """``P(X <= x, Y <= y)``; ``strict_*`` switches to ``<``."""
        raise NotImplementedError

    def marginal(self, item: int) -> Marginal1D:
        raise NotImplementedError

    def cdf(self, x, y):
        return self.prob_le(x, y)

    def marginal_1(self, x):
        return self.marginal(1).cdf(x)

    def marginal_2(self, y):
        return self.marginal(2).cdf(y)

    def atoms(self) -> list[tuple[tuple[float, float], float]]:
        """Explicit atoms ``((x, y), mass)`` in the joint distribution."""
        m1, m2 = self.marginal(1), self.marginal(2)
        out = []
        for a in m1.atom_values:
            for b in m2.atom_values:
                mass = (self.prob_le(a, b) - self.prob_le(a, b, True, False)
                        - self.prob_le(a, b, False, True) + self.prob_le(a, b, True, True))
                if mass > 1e-15:
                    out.append(((float(a), float(b)), float(mass)))
        return out

    def cells(self, a, b):
        """Probabilities of ``X`` vs ``a`` and ``Y`` vs ``b`` in ``{<, =, >}``.

        Returns an array of shape ``(..., 3, 3)`` indexed ``[rel_x, rel_y]``
        with ``0: <``, ``1: =``, ``2: >``.
        """
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        a, b = np.broadcast_arrays(a, b)
        m1, m2 = self.marginal(1), self.marginal(2)
        Lnn = np.asarray(self.prob_le(a, b), dtype=float)
        Lsn = np.asarray(self.prob_le(a, b, True, False), dtype=float)
        Lns = np.asarray(self.prob_le(a, b, False, True), dtype=float)
        Lss = np.asarray(self.prob_le(a, b, True, True), dtype=float)
        F1, F1l = np.asarray(m1.cdf(a)), np.asarray(m1.cdf_left(a))
        F2, F2l = np.asarray(m2.cdf(b)), np.asarray(m2.cdf_left(b))
        c = np.empty(a.shape + (3, 3))
        c[..., 0, 0] = Lss
        c[..., 1, 0] = Lns - Lss
        c[..., 0, 1] = Lsn - Lss
        c[..., 1, 1] = Lnn - Lns - Lsn + Lss
        c[..., 0, 2] = F1l - Lsn
        c[..., 1, 2] = (F1 - F1l) - (Lnn - Lsn)
        c[..., 2, 0] = F2l - Lns
        c[..., 2, 1] = (F2 - F2l) - (Lnn - Lns)
        c[..., 2, 2] = 1.0 - F1 - F2 + Lnn
        return np.clip(c, 0.0, 1.0)


class CopulaDistribution(JointBidDistribution):
    """``F(x, y) = C(F1(x), F2(y))`` for marginals ``F1``, ``F2`` and copula ``C``."""

    def __init__(self, m1: Marginal1D, m2: Marginal1D, copula: Copula,
                 name: str = "copula", kind: str = "parametric"):
        self.m1, self.m2, self.copula = m1, m2, copula
        self.name, self.kind = name, kind

    def marginal(self, item):
        return self.m1 if item == 1 else self.m2

    def prob_le(self, x, y, strict_x=False, strict_y=False):
        u = self.m1.cdf_left(x) if strict_x else self.m1.cdf(x)
        w = self.m2.cdf_left(y) if strict_y else self.m2.cdf(y)
        return _shape_out(self.copula(u, w))


class AxisDistribution(JointBidDistribution):
    """Bid ``(S, 0)`` with probability ``1 - alpha`` and ``(0, T)`` otherwise.

    ``alpha`` is the probability of bidding 0 on item 1.  ``cond1`` and
    ``cond2`` are the distributions of ``S`` and ``T``; their atoms at 0
    are allowed and simply add to the origin.
    """

    def __init__(self, cond1: Marginal1D, cond2: Marginal1D, alpha: float = 0.5,
                 name: str = "axis"):
        if not 0.0 <= alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        self.cond1, self.cond2, self.alpha = cond1, cond2, float(alpha)
        self.name = name
        zero = DiscreteMarginal([0.0], [1.0])
        self._m1 = MixtureMarginal([(1 - self.alpha, cond1), (self.alpha, zero)])
        self._m2 = MixtureMarginal([(self.alpha, cond2), (1 - self.alpha, zero)])

    def marginal(self, item):
        return self._m1 if item == 1 else self._m2

    def prob_le(self, x, y, strict_x=False, strict_y=False):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        s_le = self.cond1.cdf_left(x) if strict_x else self.cond1.cdf(x)
        t_le = self.cond2.cdf_left(y) if strict_y else self.cond2.cdf(y)
        zero_ok_y = (y > 0) if strict_y else (y >= 0)
        zero_ok_x = (x > 0) if strict_x else (x >= 0)
        out = (1 - self.alpha) * np.asarray(s_le) * zero_ok_y + self.alpha * np.asarray(t_le) * zero_ok_x
        return _shape_out(out)

    def branches(self):
        """``[(weight, item_with_positive_bid, conditional)]`` for the two axes."""
        return [(1 - self.alpha, 1, self.cond1), (self.alpha, 2, self.cond2)]


class DiscreteDistribution(JointBidDistribution):
    """Finitely many atoms ``points[k]`` with ``masses[k]``."""

    def __init__(self, points, masses, kind: str = "grid", name: str = "discrete"):
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        ms = np.asarray(masses, dtype=float)
        if np.any(ms < -1e-15):
            raise ValueError("negative mass")
        uniq, inv = np.unique(pts, axis=0, return_inverse=True)
        agg = np.zeros(len(uniq))
        np.add.at(agg, np.ravel(inv), ms)
        keep = agg > 0
        self.points, self.masses = uniq[keep], agg[keep]
        total = self.masses.sum()
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"masses sum to {total}, not 1")
        self.masses = self.masses / total
        self.kind, self.name = kind, name
        self._m = (DiscreteMarginal(self.points[:, 0], self.masses),
                   DiscreteMarginal(self.points[:, 1], self.masses))

    @classmethod
    def from_samples(cls, samples, name: str = "empirical") -> "DiscreteDistribution":
        s = np.asarray(samples, dtype=float).reshape(-1, 2)
        return cls(s, np.full(len(s), 1.0 / len(s)), kind="empirical", name=name)

    def marginal(self, item):
        return self._m[item - 1]

    def prob_le(self, x, y, strict_x=False, strict_y=False):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        x, y = np.broadcast_arrays(x, y)
        flat_x, flat_y = x.reshape(-1), y.reshape(-1)
        px, py = self.points[:, 0], self.points[:, 1]
        out = np.empty(flat_x.shape)
        chunk = max(1, 2_000_000 // max(1, len(px)))
        for s in range(0, len(flat_x), chunk):
            qx = flat_x[s:s + chunk, None]
            qy = flat_y[s:s + chunk, None]
            mx = (px < qx) if strict_x else (px <= qx)
            my = (py < qy) if strict_y else (py <= qy)
            out[s:s + chunk] = (mx & my) @ self.masses
        return _shape_out(out.reshape(x.shape))

    def atoms(self):
        return [((float(p[0]), float(p[1])), float(m)) for p, m in zip(self.points, self.masses)]


def ks_distance(values, masses, target: Marginal1D) -> float:
    """Kolmogorov-Smirnov distance between a discrete CDF and ``target``.

    Exact for any monotone ``target``: between atoms the discrete CDF is
    flat, so the supremum is attained at an atom or as a left limit there.
    """
    m = DiscreteMarginal(values, masses)
    xs = m.atom_values
    E = np.asarray(m.cdf(xs))
    E_left = np.concatenate([[0.0], E[:-1]])
    d_right = np.abs(E - np.asarray(target.cdf(xs)))
    d_left = np.abs(E_left - np.asarray(target.cdf_left(xs)))
    return float(max(d_right.max(initial=0.0), d_left.max(initial=0.0)))
