"""Valuations, bids, tie-breaking, and resolution of a single AND-OR auction.

Two items are sold in simultaneous first-price auctions.  The AND player
values the bundle at 1 and anything less at 0; the OR player values any
nonempty set at ``v``.  Each item goes to the higher bidder, who pays its
own bid.  Ties on item ``i`` at bid ``b`` go to AND with probability
``q_i(b)``, independently across items.

Every function here accepts scalars or numpy arrays (broadcast together),
which is what the grid-game builder and the Monte Carlo code rely on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import BidDomainError

__all__ = [
    "BidPair",
    "TieBreakRule",
    "Allocation",
    "Realization",
    "default_cap",
    "validate_bid",
    "item_win_probabilities",
    "resolve",
    "sample_outcome",
    "sample_outcomes",
]


def default_cap(v: float) -> float:
    """Default maximum bid ``H = max(1, v)``."""
    return max(1.0, float(v))


class BidPair(NamedTuple):
    x1: float
    x2: float


def validate_bid(bid, H: float, who: str = "bid") -> None:
    """Raise :class:`BidDomainError` if any coordinate of ``bid`` is outside ``[0, H]``."""
    for k, coord in enumerate(bid, start=1):
        c = np.asarray(coord, dtype=float)
        bad = ~((c >= 0.0) & (c <= H))
        if np.any(bad):
            val = c[bad].flat[0] if c.ndim else float(c)
            raise BidDomainError(f"{who} coordinate x{k}={val!r} outside [0, {H}]")


def _constant(q: float) -> Callable:
    def rule(b):
        return np.full(np.shape(b), q, dtype=float) if np.ndim(b) else q

    rule.q = q
    return rule


@dataclass(frozen=True)
class TieBreakRule:
    """Per-item probability that AND wins a tie, as a function of the tied bid.

    ``q1`` and ``q2`` must accept scalars or arrays and return values in
    ``[0, 1]``.  They see only the tied bid on their own item.
    """

    q1: Callable
    q2: Callable
    label: str = "custom"

    @classmethod
    def constant(cls, q: float = 0.5) -> "TieBreakRule":
        if not 0.0 <= q <= 1.0:
            raise ValueError(f"tie probability {q} not in [0, 1]")
        return cls(_constant(q), _constant(q), label=f"const:{q:g}")

    @classmethod
    def and_wins(cls) -> "TieBreakRule":
        return cls(_constant(1.0), _constant(1.0), label="and-wins")

    @classmethod
    def or_wins(cls) -> "TieBreakRule":
        return cls(_constant(0.0), _constant(0.0), label="or-wins")

    @classmethod
    def parse(cls, text: str) -> "TieBreakRule":
        """Build a rule from ``"and-wins"``, ``"or-wins"``, or a number in [0, 1]."""
        text = text.strip().lower()
        if text == "and-wins":
            return cls.and_wins()
        if text == "or-wins":
            return cls.or_wins()
        try:
            q = float(text)
        except ValueError:
            raise ValueError(
                f"unknown tie rule {text!r}; use 'and-wins', 'or-wins' or a probability"
            ) from None
        return cls.constant(q)

    def q(self, item: int, bid):
        fn = self.q1 if item == 1 else self.q2
        out = np.asarray(fn(bid), dtype=float)
        return out if out.ndim else float(out)

    def with_zero(self, item: int, q_at_zero: float) -> "TieBreakRule":
        """Copy of this rule with ``q_item(0)`` overridden.

        Used to evaluate right-limits of utilities at a zero bid.
        """
        base = self.q1 if item == 1 else self.q2

        def patched(b):
            return np.where(np.asarray(b) == 0.0, q_at_zero, base(b))

        if item == 1:
            return TieBreakRule(patched, self.q2, label=self.label + "|q1(0)")
        return TieBreakRule(self.q1, patched, label=self.label + "|q2(0)")


@dataclass(frozen=True)
class Allocation:
    """Distribution over the four AND-side allocations plus expected payments.

    Fields may be floats or equally shaped arrays.  Probabilities are from
    AND's point of view: ``p_1_only`` means AND wins item 1 and OR item 2.
    """

    p_both: float
    p_1_only: float
    p_2_only: float
    p_none: float
    pay_and: float
    pay_or: float
    v: float

    @property
    def u_and(self):
        return self.p_both - self.pay_and

    @property
    def u_or(self):
        return (1.0 - self.p_both) * self.v - self.pay_or

    @property
    def p_or_wins_any(self):
        return 1.0 - self.p_both

    @property
    def p_and_item1(self):
        return self.p_both + self.p_1_only

    @property
    def p_and_item2(self):
        return self.p_both + self.p_2_only

    @property
    def welfare(self):
        return self.p_both + (1.0 - self.p_both) * self.v

    def as_dict(self) -> dict:
        keys = ("p_both", "p_1_only", "p_2_only", "p_none", "pay_and", "pay_or")
        d = {k: getattr(self, k) for k in keys}
        d.update(u_and=self.u_and, u_or=self.u_or, welfare=self.welfare)
        return {k: (float(x) if np.ndim(x) == 0 else np.asarray(x)) for k, x in d.items()}


def combine(w1, w2, pay_and, pay_or, v) -> Allocation:
    """Allocation from independent per-item AND win probabilities."""
    return Allocation(
        p_both=w1 * w2,
        p_1_only=w1 * (1.0 - w2),
        p_2_only=(1.0 - w1) * w2,
        p_none=(1.0 - w1) * (1.0 - w2),
        pay_and=pay_and,
        pay_or=pay_or,
        v=v,
    )


def item_win_probabilities(and_bid, or_bid, tie: TieBreakRule):
    """Probability that AND wins each item for fixed pure bids."""
    ws = []
    for item in (1, 2):
        a = np.asarray(and_bid[item - 1], dtype=float)
        o = np.asarray(or_bid[item - 1], dtype=float)
        w = np.where(a > o, 1.0, np.where(a < o, 0.0, tie.q(item, a)))
        ws.append(w if w.ndim else float(w))
    return ws[0], ws[1]


def resolve(and_bid, or_bid, tie: TieBreakRule | None = None, v: float = 1.0,
            H: float | None = None) -> Allocation:
    """Resolve both first-price auctions for fixed pure bids.

    Randomness comes only from tie-breaking.  Each player pays its own bid
    on every item it wins.
    """
    tie = tie or TieBreakRule.constant(0.5)
    H = default_cap(v) if H is None else H
    validate_bid(and_bid, H, "AND bid")
    validate_bid(or_bid, H, "OR bid")
    w1, w2 = item_win_probabilities(and_bid, or_bid, tie)
    pay_and = w1 * np.asarray(and_bid[0]) + w2 * np.asarray(and_bid[1])
    pay_or = (1.0 - w1) * np.asarray(or_bid[0]) + (1.0 - w2) * np.asarray(or_bid[1])
    if np.ndim(pay_and) == 0:
        pay_and, pay_or = float(pay_and), float(pay_or)
    return combine(w1, w2, pay_and, pay_or, v)


@dataclass(frozen=True)
class Realization:
    """One realized auction: who won each item and what was paid."""

    and_item1: bool
    and_item2: bool
    pay_and: float
    pay_or: float
    v: float

    @property
    def and_wins_both(self) -> bool:
        return self.and_item1 and self.and_item2

    @property
    def u_and(self) -> float:
        return float(self.and_wins_both) - self.pay_and

    @property
    def u_or(self) -> float:
        return (0.0 if self.and_wins_both else self.v) - self.pay_or


def sample_outcomes(and_bids, or_bids, tie: TieBreakRule, v: float,
                    rng: np.random.Generator):
    """Vectorized draw of realized allocations.

    ``and_bids`` and ``or_bids`` are ``(n, 2)`` arrays.  Returns a dict of
    arrays: ``and_item1``, ``and_item2`` (bool), ``pay_and``, ``pay_or``.
    Two uniforms are consumed per row, whether or not a tie occurs, so the
    stream position depends only on ``n``.
    """
    a = np.asarray(and_bids, dtype=float)
    o = np.asarray(or_bids, dtype=float)
    w1, w2 = item_win_probabilities((a[:, 0], a[:, 1]), (o[:, 0], o[:, 1]), tie)
    u = rng.random((a.shape[0], 2))
    win1 = u[:, 0] < w1
    win2 = u[:, 1] < w2
    pay_and = np.where(win1, a[:, 0], 0.0) + np.where(win2, a[:, 1], 0.0)
    pay_or = np.where(win1, 0.0, o[:, 0]) + np.where(win2, 0.0, o[:, 1])
    return {"and_item1": win1, "and_item2": win2, "pay_and": pay_and, "pay_or": pay_or}


def sample_outcome(and_bid, or_bid, tie: TieBreakRule | None, v: float,
                   rng: np.random.Generator, H: float | None = None) -> Realization:
    """Draw a single realized allocation consistent with :func:`resolve`."""
    tie = tie or TieBreakRule.constant(0.5)
    H = default_cap(v) if H is None else H
    validate_bid(and_bid, H, "AND bid")
    validate_bid(or_bid, H, "OR bid")
    out = sample_outcomes(np.array([and_bid], float), np.array([or_bid], float), tie, v, rng)
    return Realization(
        and_item1=bool(out["and_item1"][0]),
        and_item2=bool(out["and_item2"][0]),
        pay_and=float(out["pay_and"][0]),
        pay_or=float(out["pay_or"][0]),
        v=v,
    )
