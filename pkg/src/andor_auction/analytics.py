"""Win probability, revenue, welfare and price of anarchy of the equilibrium.

Every closed form has a quadrature twin.  Near ``v = 1`` the closed forms
divide by ``(v - 1)^2`` and lose precision, so inside ``|v - 1| <= SWITCH``
the quadrature value is returned instead.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate

from .model import TieBreakRule, sample_outcomes
from .strategies import check_regime, sample_and_many, sample_or_many

__all__ = [
    "SWITCH",
    "FIGURE_IDS",
    "AnalyticsReport",
    "MonteCarloReport",
    "FigureSeries",
    "prob_and_wins",
    "prob_and_wins_closed",
    "prob_and_wins_quad",
    "revenue_or",
    "revenue_or_closed",
    "revenue_or_quad",
    "welfare",
    "poa",
    "welfare_loss",
    "report",
    "golden_section_min",
    "find_poa_minima",
    "figure_series",
    "monte_carlo_report",
]

SWITCH = 1e-4
LN2 = math.log(2.0)
QUAD_EPSABS = 1e-12


def prob_and_wins_closed(v: float) -> float:
    return ((v - 0.5) * math.log(2.0 - 1.0 / v) - 0.5 * (v - 1.0)) / (v - 1.0) ** 2


def prob_and_wins_quad(v: float) -> float:
    """``int_0^{1/2} F_and'(x) F_or(x) dx``; AND's atom at 0 meets ``F_or(0) = 0``."""
    c = v - 0.5
    return integrate.quad(lambda x: c / (v - x) ** 2 * x / (1.0 - x), 0.0, 0.5,
                          epsabs=QUAD_EPSABS, epsrel=1e-13, limit=200)[0]


def prob_and_wins(v: float) -> float:
    """Probability that AND wins both items in equilibrium."""
    check_regime(v)
    if abs(v - 1.0) <= SWITCH:
        return prob_and_wins_quad(v)
    return prob_and_wins_closed(v)


def revenue_or_closed(v: float) -> float:
    return (v - 0.5) / (v - 1.0) ** 2 * (v - 1.0 - v * LN2 + v * math.log(v / (v - 0.5)))


def revenue_or_quad(v: float) -> float:
    """``int_0^{1/2} x F_or'(x) F_and(x) dx``."""
    c = v - 0.5
    return integrate.quad(lambda x: x / (1.0 - x) ** 2 * c / (v - x), 0.0, 0.5,
                          epsabs=QUAD_EPSABS, epsrel=1e-13, limit=200)[0]


def revenue_or(v: float) -> float:
    """Expected payment of OR in equilibrium."""
    check_regime(v)
    if abs(v - 1.0) <= SWITCH:
        return revenue_or_quad(v)
    return revenue_or_closed(v)


def welfare(v: float) -> float:
    p = prob_and_wins(v)
    return p + (1.0 - p) * v


def poa(v: float) -> float:
    return welfare(v) / max(v, 1.0)


def welfare_loss(v: float) -> float:
    return max(v, 1.0) - welfare(v)


@dataclass
class AnalyticsReport:
    v: float
    p_and_wins: float
    revenue_and: float
    revenue_or: float
    revenue_total: float
    welfare: float
    optimal_welfare: float
    poa: float
    welfare_loss: float
    asymptotic_residual: float

    def as_dict(self) -> dict:
        return asdict(self)


def report(v: float) -> AnalyticsReport:
    """All equilibrium quantities at ``v``.

    ``asymptotic_residual`` is ``welfare - (v - ln2 + 1/2 + (ln2 - 1/2)/v)``.
    Expanding the closed form gives ``welfare = v - ln2 + 1/2 + (1 - ln2)/(2v)
    + O(1/v^2)``, so the residual tends to ``-(1.5 ln2 - 1)/v``.
    """
    p = prob_and_wins(v)
    r_or = revenue_or(v)
    w = p + (1.0 - p) * v
    opt = max(v, 1.0)
    return AnalyticsReport(
        v=v,
        p_and_wins=p,
        revenue_and=p,
        revenue_or=r_or,
        revenue_total=p + r_or,
        welfare=w,
        optimal_welfare=opt,
        poa=w / opt,
        welfare_loss=opt - w,
        asymptotic_residual=w - (v - LN2 + 0.5 + (LN2 - 0.5) / v),
    )


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_min(f, a: float, b: float, tol: float = 1e-9, max_iter: int = 500):
    """Minimize a unimodal ``f`` on ``(a, b)``; returns ``(x_min, f(x_min))``.

    Only interior points are evaluated, so ``f`` may be undefined at the ends.
    """
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


POA_BRACKETS = ((0.5, 1.0), (1.0, 20.0))


def find_poa_minima(tol: float = 1e-9):
    """Minimum of the price of anarchy on ``(1/2, 1)`` and on ``(1, 20)``."""
    return [golden_section_min(poa, a, b, tol=tol) for a, b in POA_BRACKETS]


FIGURE_IDS = {
    "and-wins": ("and_wins", prob_and_wins),
    "revenue-or": ("revenue_or", revenue_or),
    "revenue-total": ("revenue_total", lambda v: prob_and_wins(v) + revenue_or(v)),
    "poa": ("poa", poa),
    "welfare-loss": ("welfare_loss", welfare_loss),
}


@dataclass
class FigureSeries:
    figure_id: str
    quantity: str
    v_min: float
    v_max: float
    step: float
    rows: list[tuple[float, float]] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["v", self.quantity])
        for v, y in self.rows:
            w.writerow([f"{v:.12g}", f"{y:.12g}"])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "figure_id": self.figure_id,
            "quantity": self.quantity,
            "v_min": self.v_min,
            "v_max": self.v_max,
            "step": self.step,
            "rows": [[float(f"{v:.12g}"), float(f"{y:.12g}")] for v, y in self.rows],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def figure_series(figure_id: str, v_min: float = 0.51, v_max: float = 10.0,
                  step: float = 0.01) -> FigureSeries:
    """Tabulate one figure's quantity on ``v_min, v_min + step, ..., v_max``.

    The crossover row ``v = 1`` is always included when it lies in range.
    """
    if figure_id not in FIGURE_IDS:
        raise ValueError(f"unknown figure {figure_id!r}; valid ids: {', '.join(FIGURE_IDS)}")
    if not (0.5 < v_min < v_max) or step <= 0:
        raise ValueError("need 1/2 < v_min < v_max and step > 0")
    quantity, fn = FIGURE_IDS[figure_id]
    n = int(math.floor((v_max - v_min) / step + 1e-9))
    vs = {round(v_min + k * step, 12) for k in range(n + 1)}
    if v_min <= 1.0 <= v_max:
        vs.add(1.0)
    rows = [(v, fn(v)) for v in sorted(vs)]
    return FigureSeries(figure_id, quantity, v_min, v_max, step, rows)


@dataclass
class MonteCarloReport:
    v: float
    samples: int
    estimates: dict
    std_errors: dict
    closed_form: dict

    def within(self, k: float = 3.0) -> dict:
        """Per-quantity flag: estimate within ``k`` standard errors of the closed form."""
        return {q: abs(self.estimates[q] - self.closed_form[q]) <= k * self.std_errors[q]
                for q in self.estimates}

    def as_dict(self) -> dict:
        return asdict(self)


def monte_carlo_report(v: float, samples: int, tie: TieBreakRule | None = None,
                       rng: np.random.Generator | None = None, batch: int = 1_000_000
                       ) -> MonteCarloReport:
    """Simulate equilibrium play and average outcomes.

    Draws are made in fixed-size batches from one generator, so results
    depend only on the seed and ``samples``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    check_regime(v)
    tie = tie or TieBreakRule.constant(0.5)
    rng = rng if rng is not None else np.random.default_rng(0)
    keys = ("p_and_wins", "revenue_and", "revenue_or", "revenue_total", "welfare")
    s1 = dict.fromkeys(keys, 0.0)
    s2 = dict.fromkeys(keys, 0.0)
    done = 0
    while done < samples:
        n = min(batch, samples - done)
        a = sample_and_many(v, n, rng)
        o = sample_or_many(v, n, rng)
        out = sample_outcomes(a, o, tie, v, rng)
        both = (out["and_item1"] & out["and_item2"]).astype(float)
        cols = {
            "p_and_wins": both,
            "revenue_and": out["pay_and"],
            "revenue_or": out["pay_or"],
            "revenue_total": out["pay_and"] + out["pay_or"],
            "welfare": np.where(both > 0, 1.0, v),
        }
        for k in keys:
            s1[k] += float(cols[k].sum())
            s2[k] += float(np.dot(cols[k], cols[k]))
        done += n
    est, se = {}, {}
    for k in keys:
        m = s1[k] / samples
        var = max(s2[k] / samples - m * m, 0.0)
        est[k] = m
        se[k] = math.sqrt(var / max(samples - 1, 1))
    rep = report(v)
    closed = {
        "p_and_wins": rep.p_and_wins,
        "revenue_and": rep.revenue_and,
        "revenue_or": rep.revenue_or,
        "revenue_total": rep.revenue_total,
        "welfare": rep.welfare,
    }
    return MonteCarloReport(v, samples, est, se, closed)
