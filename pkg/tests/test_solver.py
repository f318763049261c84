import numpy as np
import pytest

from andor_auction.errors import PreconditionError
from andor_auction.model import TieBreakRule, resolve
from andor_auction.solver import (
    GridGame,
    MixedProfile,
    build_grid_game,
    compare_to_analytic,
    enumerate_pure_nash,
    exploitability,
    mirror_average,
    profile_from_csv,
    profile_to_csv,
    solve_fictitious_play,
    solve_support_enumeration,
)
from andor_auction.strategies import AndMarginal, OrAxisMarginal

HALF = TieBreakRule.constant(0.5)
AND_WINS = TieBreakRule.and_wins()


def closed_form_profile(game: GridGame, v: float) -> MixedProfile:
    """Equilibrium laws pushed onto the structured grid (mass F(g_k) - F(g_{k-1}) at g_k)."""
    g = game.grid
    p_and = np.diff(np.concatenate([[0.0], AndMarginal(v).cdf(g)]))
    G = np.asarray(OrAxisMarginal().cdf(g))
    w = np.diff(G)  # positive levels g[1:]
    p_or = np.concatenate([[G[0]], w / 2, w / 2])
    return MixedProfile(game, p_and / p_and.sum(), p_or / p_or.sum(),
                        exploitability(game, p_and, p_or))


def matching_pennies() -> GridGame:
    A = np.array([[1.0, -1.0], [-1.0, 1.0]])
    s = np.array([[0.0, 0.0], [1.0, 1.0]])
    return GridGame(1.0, 1.0, np.array([0.0, 1.0]), "custom", HALF, s, s, A, -A)


class TestBuildGridGame:
    def test_structured_shapes(self):
        g = build_grid_game(1.0, 3, "structured")
        np.testing.assert_array_equal(g.grid, [0.0, 0.5, 1.0])
        assert g.shape == (3, 5)
        assert np.all(g.and_strategies[:, 0] == g.and_strategies[:, 1])
        assert np.all(g.or_strategies.min(axis=1) == 0.0)

    def test_half_is_added(self):
        g = build_grid_game(1.0, 6, "full")
        assert 0.5 in g.grid and len(g.grid) == 7
        assert g.shape == (49, 49)
        assert build_grid_game(1.0, 5, "full").shape == (25, 25)

    def test_grid_levels_exact(self):
        g = build_grid_game(1.0, 11, "full").grid
        assert 0.3 in g.tolist() and 0.4 in g.tolist()

    def test_entries_match_resolve(self):
        v = 1.3
        tie = TieBreakRule.constant(0.3)
        game = build_grid_game(v, 7, "full", tie)
        rng = np.random.default_rng(0)
        for i, j in rng.integers(0, game.shape, (40, 2)):
            a = resolve(tuple(game.and_strategies[i]), tuple(game.or_strategies[j]), tie, v)
            assert game.U_and[i, j] == a.u_and
            assert game.U_or[i, j] == a.u_or

    def test_bad_inputs(self):
        with pytest.raises(PreconditionError):
            build_grid_game(1.0, 1)
        with pytest.raises(ValueError, match="mode"):
            build_grid_game(1.0, 5, "diagonal")


class TestPureNash:
    @pytest.mark.parametrize("v", [0.6, 1.0, 2.0])
    @pytest.mark.parametrize("n", [11, 21])
    def test_none_above_half(self, v, n):
        assert enumerate_pure_nash(build_grid_game(v, n, "full", HALF)) == []

    @pytest.mark.parametrize("v", [0.6, 1.0, 2.0])
    def test_coarse_grid_has_artifacts(self, v):
        # with step 1/4 the discrete game does have pure equilibria; recorded, not hidden
        assert len(enumerate_pure_nash(build_grid_game(v, 5, "full", HALF))) > 0

    def test_uniform_price_profiles_below_half(self):
        game = build_grid_game(0.4, 11, "full", AND_WINS)
        ne = {(tuple(game.and_strategies[i]), tuple(game.or_strategies[j]))
              for i, j in enumerate_pure_nash(game)}
        for p in (0.4, 0.5):
            assert ((p, p), (p, p)) in ne

    def test_order_invariant(self):
        game = build_grid_game(0.4, 6, "full", AND_WINS)
        rng = np.random.default_rng(3)
        pa, po = rng.permutation(game.shape[0]), rng.permutation(game.shape[1])
        shuffled = GridGame(game.v, game.H, game.grid, game.mode, game.tie,
                            game.and_strategies[pa], game.or_strategies[po],
                            game.U_and[np.ix_(pa, po)], game.U_or[np.ix_(pa, po)])

        def as_bids(g):
            return {(tuple(g.and_strategies[i]), tuple(g.or_strategies[j])) for i, j in enumerate_pure_nash(g)}
        assert as_bids(game) == as_bids(shuffled)


class TestFictitiousPlay:
    def test_matching_pennies(self):
        prof = solve_fictitious_play(matching_pennies(), 20_000)
        np.testing.assert_allclose(prof.p_and, 0.5, atol=0.01)
        np.testing.assert_allclose(prof.p_or, 0.5, atol=0.01)

    def test_profile_invariants(self):
        prof = solve_fictitious_play(build_grid_game(1.0, 11), 2_000)
        for p in (prof.p_and, prof.p_or):
            assert np.all(p >= 0) and abs(p.sum() - 1) <= 1e-12
        assert prof.eps >= 0

    def test_bit_reproducible(self):
        game = build_grid_game(1.0, 11)
        a = solve_fictitious_play(game, 5_000, np.random.default_rng(1), randomize_ties=True)
        b = solve_fictitious_play(game, 5_000, np.random.default_rng(1), randomize_ties=True)
        np.testing.assert_array_equal(a.p_and, b.p_and)
        assert a.eps == b.eps and a.history == b.history

    def test_exploitability_shrinks(self):
        prof = solve_fictitious_play(build_grid_game(1.0, 51), 100_000)
        assert prof.history[-1][1] < prof.history[0][1]
        assert prof.eps < 0.01

    def test_symmetrization_is_payoff_neutral(self):
        game = build_grid_game(1.0, 21)
        raw = solve_fictitious_play(game, 20_000, symmetrize=False)
        sym = solve_fictitious_play(game, 20_000)
        assert sym.diagnostics["symmetrized"] and not raw.diagnostics["symmetrized"]
        np.testing.assert_allclose(raw.p_and @ game.U_or @ raw.p_or, sym.p_and @ game.U_or @ sym.p_or, atol=1e-12)
        assert sym.eps == pytest.approx(raw.eps, abs=1e-12)
        np.testing.assert_allclose(mirror_average(game, sym.p_or), sym.p_or)

    def test_needs_iterations(self):
        with pytest.raises(PreconditionError):
            solve_fictitious_play(build_grid_game(1.0, 5), 0)

    @pytest.mark.xfail(strict=True, reason="OR positive-part KS at n=51 is limited by the grid (~0.075 > 0.05)")
    def test_or_positive_coordinate_ks(self):
        prof = solve_fictitious_play(build_grid_game(1.0, 51), 100_000, np.random.default_rng(7))
        assert compare_to_analytic(prof, 1.0)["ks_or_positive"] < 0.05

    def test_or_positive_coordinate_floor(self):
        # even the exact law restricted to the grid sits near 0.077
        exact = compare_to_analytic(closed_form_profile(build_grid_game(1.0, 51), 1.0), 1.0)
        assert exact["ks_or_positive"] > 0.05

    @pytest.mark.slow
    def test_refinement_monotone(self):
        dists = []
        for n in (11, 51, 101):
            prof = solve_fictitious_play(build_grid_game(1.0, n), 10_000 * n, np.random.default_rng(7))
            c = compare_to_analytic(prof, 1.0)
            dists.append(max(c["ks_and_item1"], c["ks_and_item2"], c["ks_or_item1"], c["ks_or_item2"]))
        assert dists[0] >= dists[1] >= dists[2]


class TestSupportEnumeration:
    def test_finds_equilibrium_v1(self):
        game = build_grid_game(1.0, 6)
        found = solve_support_enumeration(game, 4)
        assert found
        for prof in found:
            assert prof.eps <= 1e-9
            assert "singular" in prof.diagnostics

    @pytest.mark.xfail(strict=True, reason="coarse-grid equilibrium differs from the discretized law by KS 1/6")
    def test_close_to_closed_form_on_coarse_grid(self):
        game = build_grid_game(1.0, 6)
        prof = solve_support_enumeration(game, 4)[0]
        assert compare_to_analytic(prof, 1.0)["ks_and_item1"] <= 0.08

    def test_pure_profiles_appear_as_size_one(self):
        game = build_grid_game(0.4, 11, "structured", AND_WINS)
        pure = set(enumerate_pure_nash(game))
        found = {(int(np.argmax(p.p_and)), int(np.argmax(p.p_or))) for p in solve_support_enumeration(game, 1)}
        assert pure and pure == found

    def test_zero_support_rejected(self):
        with pytest.raises(PreconditionError):
            solve_support_enumeration(build_grid_game(1.0, 3), 0)


class TestCompare:
    @pytest.mark.parametrize("n", [11, 51])
    def test_closed_form_within_one_cell(self, n):
        v = 1.0
        game = build_grid_game(v, n)
        cmp = compare_to_analytic(closed_form_profile(game, v), v)
        step = game.grid[1]
        and_cell = float(AndMarginal(v).cdf(0.5) - AndMarginal(v).cdf(0.5 - step))
        or_cell = 0.5 * float(OrAxisMarginal().cdf(0.5) - OrAxisMarginal().cdf(0.5 - step))
        assert cmp["ks_and_item1"] <= and_cell + 1e-12
        assert cmp["ks_or_item1"] <= or_cell + 1e-12
        assert cmp["and_origin_deviation"] <= 1e-12

    def test_moved_atom(self):
        v = 2.0
        game = build_grid_game(v, 11)
        prof = closed_form_profile(game, v)
        p = prof.p_and.copy()
        k = int(np.flatnonzero(np.isclose(game.grid, 0.2))[0])
        p[k] += p[0]
        p[0] = 0.0
        moved = MixedProfile(game, p, prof.p_or, exploitability(game, p, prof.p_or))
        assert compare_to_analytic(moved, v)["and_origin_deviation"] == pytest.approx(1 - 1 / (2 * v))

    def test_csv_round_trip(self):
        game = build_grid_game(1.0, 11)
        prof = solve_fictitious_play(game, 1_000)
        text = profile_to_csv(prof, {"v": 1.0, "seed": 3})
        assert text.startswith("# seed=3\n# v=1.0\nplayer,x1,x2,probability\n")
        parsed = profile_from_csv(text)
        pts, pr = parsed["and"]
        np.testing.assert_allclose(pr.sum(), 1.0, atol=1e-9)
        assert len(pts) == np.count_nonzero(prof.p_and)

    def test_csv_needs_columns(self):
        with pytest.raises(ValueError):
            profile_from_csv("who,x,y\nand,0,0\n")
