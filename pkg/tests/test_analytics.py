import json
import math

import numpy as np
import pytest

from andor_auction import analytics
from andor_auction.errors import RegimeError
from andor_auction.model import TieBreakRule

LN2 = math.log(2.0)
V_GRID = (0.6, 0.75, 0.9, 0.99, 1.01, 1.5, 2.0, 5.0, 10.0)

# frozen from a 30-digit mpmath quadrature of E_OR[P(AND bid > x)] and
# E_OR[x P(AND bid <= x)], independent of the package's integrands
ORACLE = {
    0.6: (0.563367319582431, 0.161979608250541),
    2.0: (0.108197662162247, 0.283604675675507),
    5.0: (0.040314999503721, 0.298425002481395),
}


class TestClosedForms:
    @pytest.mark.parametrize("v", sorted(ORACLE))
    def test_against_oracle(self, v):
        p, r = ORACLE[v]
        assert analytics.prob_and_wins(v) == pytest.approx(p, abs=1e-12)
        assert analytics.revenue_or(v) == pytest.approx(r, abs=1e-12)

    def test_v1_values(self):
        assert analytics.prob_and_wins(1.0) == pytest.approx(0.25, abs=1e-12)
        assert analytics.revenue_or(1.0) == pytest.approx(0.25, abs=1e-12)

    @pytest.mark.parametrize("v", V_GRID)
    def test_closed_vs_quadrature(self, v):
        assert abs(analytics.prob_and_wins_closed(v) - analytics.prob_and_wins_quad(v)) <= 1e-8
        assert abs(analytics.revenue_or_closed(v) - analytics.revenue_or_quad(v)) <= 1e-8

    def test_switch_edges_agree(self):
        for v in (1 - 1.0001e-4, 1 + 1.0001e-4):
            assert abs(analytics.prob_and_wins_closed(v) - analytics.prob_and_wins_quad(v)) <= 1e-7
            assert abs(analytics.revenue_or_closed(v) - analytics.revenue_or_quad(v)) <= 1e-7

    def test_band_uses_quadrature(self):
        v = 1 + 5e-5
        assert analytics.prob_and_wins(v) == analytics.prob_and_wins_quad(v)

    def test_slope_at_one(self):
        # the derivative at 1 is -1/3, so +-1e-5 moves the value by ~3.3e-6
        h = 1e-5
        d = (analytics.prob_and_wins(1 + h) - analytics.prob_and_wins(1 - h)) / (2 * h)
        assert d == pytest.approx(-1 / 3, abs=1e-6)

    def test_asymptotics(self):
        v = 1e4
        assert v * analytics.prob_and_wins(v) == pytest.approx(LN2 - 0.5, abs=1e-3)
        assert analytics.revenue_or(v) == pytest.approx(1 - LN2, abs=1e-3)

    @pytest.mark.parametrize("v", [0.5, 0.2])
    def test_regime(self, v):
        with pytest.raises(RegimeError):
            analytics.prob_and_wins(v)
        with pytest.raises(RegimeError):
            analytics.revenue_or(v)


class TestReport:
    @pytest.mark.parametrize("v", V_GRID + (1.0, 50.0))
    def test_identities(self, v):
        r = analytics.report(v)
        assert 0 < r.p_and_wins < 1
        assert r.revenue_and == r.p_and_wins
        assert r.welfare == pytest.approx(r.p_and_wins + (1 - r.p_and_wins) * v, abs=1e-15)
        assert r.poa == pytest.approx(r.welfare / max(v, 1.0))
        assert r.welfare_loss == pytest.approx(max(v, 1.0) - r.welfare)
        assert r.revenue_total == pytest.approx(r.revenue_and + r.revenue_or)
        # surplus accounting: u_and* = 0, u_or* = v - 1/2
        assert r.welfare - r.revenue_total == pytest.approx(v - 0.5, abs=1e-9)
        assert 0 < r.poa <= 1

    def test_v1(self):
        r = analytics.report(1.0)
        assert r.welfare == pytest.approx(1.0)
        assert r.poa == pytest.approx(1.0)
        assert r.welfare_loss == pytest.approx(0.0, abs=1e-12)
        assert r.revenue_total == pytest.approx(0.5, abs=1e-12)

    def test_decreasing_above_one(self):
        vs = np.linspace(1.01, 50, 200)
        p = [analytics.prob_and_wins(v) for v in vs]
        assert np.all(np.diff(p) < 0)

    def test_asymptotic_residual_shrinks(self):
        res = [abs(analytics.report(v).asymptotic_residual) for v in (10.0, 100.0, 1000.0)]
        assert res[0] > res[1] > res[2]

    def test_asymptotic_residual_is_first_order(self):
        # p = c/v + d/v^2 + ..., c = ln2 - 1/2, d = 1.5 ln2 - 1, so
        # welfare = v - c + (c - d)/v + O(1/v^2); the residual against c/v is -d/v
        d = 1.5 * LN2 - 1.0
        for v in (1e3, 1e4):
            assert v * analytics.report(v).asymptotic_residual == pytest.approx(-d, abs=5.0 / v)

    def test_welfare_loss_limit(self):
        assert analytics.welfare_loss(1e4) == pytest.approx(LN2 - 0.5, abs=1e-3)


class TestOptimization:
    def test_golden_section_quadratic(self):
        x, fx = analytics.golden_section_min(lambda t: (t - 0.3) ** 2 + 1, 0.0, 1.0, tol=1e-10)
        assert x == pytest.approx(0.3, abs=1e-7)
        assert fx == pytest.approx(1.0)

    def test_poa_minima(self):
        (v1, p1), (v2, p2) = analytics.find_poa_minima()
        assert (v1, p1) == pytest.approx((0.643028, 0.818485), abs=1e-5)
        assert (v2, p2) == pytest.approx((1.87999, 0.945682), abs=1e-5)
        for (a, b), m in zip(analytics.POA_BRACKETS, (p1, p2)):
            for end in (a + 1e-6, b - 1e-6):
                assert analytics.poa(end) > m


class TestFigures:
    def test_crossover_rows(self):
        for fid in ("and-wins", "revenue-or"):
            rows = dict(analytics.figure_series(fid).rows)
            assert rows[1.0] == pytest.approx(0.25, abs=1e-12)

    def test_poa_series_minimum(self):
        s = analytics.figure_series("poa")
        v, _ = min(s.rows, key=lambda r: r[1])
        assert abs(v - 0.643) <= 0.01

    def test_rows_increasing(self):
        s = analytics.figure_series("welfare-loss", 0.55, 2.0, 0.07)
        vs = [r[0] for r in s.rows]
        assert all(b > a for a, b in zip(vs, vs[1:]))
        assert 1.0 in vs and min(vs) > 0.5

    def test_csv_and_json(self):
        s = analytics.figure_series("revenue-total", 0.9, 1.1, 0.1)
        text = s.to_csv()
        assert text.splitlines()[0] == "v,revenue_total"
        assert "\r" not in text
        doc = json.loads(s.to_json())
        assert doc["figure_id"] == "revenue-total" and len(doc["rows"]) == len(s.rows)

    def test_unknown_id(self):
        with pytest.raises(ValueError, match="and-wins"):
            analytics.figure_series("revenue")

    def test_bad_range(self):
        with pytest.raises(ValueError):
            analytics.figure_series("poa", 0.4, 2.0)


class TestMonteCarlo:
    def test_v2_revenue(self):
        rep = analytics.monte_carlo_report(2.0, 1_000_000, TieBreakRule.constant(0.5), np.random.default_rng(5))
        assert rep.within(3.0)["revenue_or"]
        assert rep.within(3.0)["p_and_wins"]

    def test_reproducible(self):
        a = analytics.monte_carlo_report(1.5, 50_000, None, np.random.default_rng(1), batch=50_000)
        b = analytics.monte_carlo_report(1.5, 50_000, None, np.random.default_rng(1), batch=50_000)
        assert a.estimates == b.estimates

    def test_needs_samples(self):
        with pytest.raises(ValueError):
            analytics.monte_carlo_report(1.0, 0)

    @pytest.mark.slow
    def test_coverage_over_seeds(self):
        # 3-sigma intervals should cover in well over 99% of seeded repetitions
        hits = total = 0
        for v in (1.0, 2.0):
            for seed in range(100):
                rep = analytics.monte_carlo_report(v, 20_000, None, np.random.default_rng(seed))
                flags = rep.within(3.0)
                if v == 1.0:
                    del flags["welfare"]  # constant at v = 1
                hits += sum(flags.values())
                total += len(flags)
        assert hits / total >= 0.99
