"""Finite bimatrix discretizations of the auction and solvers for them.

``full`` mode lets each player bid any pair of grid levels.  ``structured``
mode restricts AND to the diagonal and OR to the axes, which is where the
continuum equilibrium lives; it keeps the game small enough for support
enumeration.
"""

from __future__ import annotations

import csv
import io
import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from .distributions import DiscreteMarginal, ks_distance
from .errors import PreconditionError
from .model import TieBreakRule, default_cap, resolve
from .strategies import AndMarginal, OrAxisMarginal

__all__ = [
    "GridGame",
    "MixedProfile",
    "build_grid_game",
    "enumerate_pure_nash",
    "exploitability",
    "mirror_average",
    "solve_fictitious_play",
    "solve_support_enumeration",
    "compare_to_analytic",
    "profile_to_csv",
    "profile_from_csv",
]

log = logging.getLogger(__name__)


@dataclass
class GridGame:
    v: float
    H: float
    grid: np.ndarray
    mode: str
    tie: TieBreakRule
    and_strategies: np.ndarray  # (n_and, 2)
    or_strategies: np.ndarray  # (n_or, 2)
    U_and: np.ndarray
    U_or: np.ndarray

    @property
    def shape(self):
        return self.U_and.shape


@dataclass
class MixedProfile:
    game: GridGame
    p_and: np.ndarray
    p_or: np.ndarray
    eps: float
    history: list[tuple[int, float]] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def marginal(self, player: str, item: int) -> DiscreteMarginal:
        strat = self.game.and_strategies if player == "and" else self.game.or_strategies
        p = self.p_and if player == "and" else self.p_or
        return DiscreteMarginal(strat[:, item - 1], p)

    @property
    def and_origin_mass(self) -> float:
        s = self.game.and_strategies
        return float(self.p_and[(s[:, 0] == 0) & (s[:, 1] == 0)].sum())


def _grid(n_levels: int, H: float) -> np.ndarray:
    g = np.arange(n_levels) * H / (n_levels - 1)
    if not np.any(g == 0.5) and 0.5 <= H:
        g = np.sort(np.append(g, 0.5))
    return g


def build_grid_game(v: float, n_levels: int, mode: str = "structured",
                    tie: TieBreakRule | None = None, H: float | None = None) -> GridGame:
    """Discretize bids to ``{0, H/(n-1), ..., H}`` (plus 1/2) and fill both payoff matrices."""
    if n_levels < 2:
        raise PreconditionError("n_levels must be >= 2")
    tie = tie or TieBreakRule.constant(0.5)
    H = default_cap(v) if H is None else H
    g = _grid(n_levels, H)
    if mode == "full":
        a = np.array(list(itertools.product(g, g)))
        o = a.copy()
    elif mode == "structured":
        a = np.column_stack([g, g])
        pos = g[g > 0]
        o = np.vstack([[[0.0, 0.0]], np.column_stack([pos, np.zeros_like(pos)]),
                       np.column_stack([np.zeros_like(pos), pos])])
    else:
        raise ValueError(f"unknown mode {mode!r}; use 'full' or 'structured'")
    A1, O1 = np.meshgrid(a[:, 0], o[:, 0], indexing="ij")
    A2, O2 = np.meshgrid(a[:, 1], o[:, 1], indexing="ij")
    alloc = resolve((A1, A2), (O1, O2), tie, v, H)
    return GridGame(v, H, g, mode, tie, a, o, np.asarray(alloc.u_and), np.asarray(alloc.u_or))


def enumerate_pure_nash(game: GridGame, tol: float = 1e-12) -> list[tuple[int, int]]:
    """All pure profiles where neither player has a strictly improving pure deviation."""
    best_and = game.U_and.max(axis=0, keepdims=True)
    best_or = game.U_or.max(axis=1, keepdims=True)
    ok = (game.U_and >= best_and - tol) & (game.U_or >= best_or - tol)
    return [(int(i), int(j)) for i, j in zip(*np.nonzero(ok))]


def exploitability(game: GridGame, p_and, p_or) -> float:
    """Largest gain either player gets from a unilateral pure deviation."""
    ua = game.U_and @ p_or
    uo = p_and @ game.U_or
    gain_and = float(ua.max() - p_and @ ua)
    gain_or = float(uo.max() - uo @ p_or)
    return max(gain_and, gain_or, 0.0)


def solve_fictitious_play(game: GridGame, iterations: int, rng: np.random.Generator | None = None,
                          randomize_ties: bool = False, checkpoints: int = 20,
                          symmetrize: bool | None = None) -> MixedProfile:
    """Simultaneous fictitious play.

    Each round both players best-respond to the opponent's empirical mix so
    far.  Ties among best responses go to the lowest index unless
    ``randomize_ties`` is set, in which case ``rng`` picks among them.

    In structured mode OR's ``(g, 0)`` and ``(0, g)`` earn identical payoffs
    against any diagonal AND mix when ties are symmetric, so the split
    between axes is arbitrary; lowest-index play puts it all on item 1.
    ``symmetrize`` (default: on exactly in that case) averages each mirror
    pair, which leaves both players' payoffs and ``eps`` unchanged.
    """
    if iterations < 1:
        raise PreconditionError("iterations must be >= 1")
    if randomize_ties and rng is None:
        raise PreconditionError("randomize_ties needs an rng")
    n_and, n_or = game.shape
    U_and, U_or = game.U_and, game.U_or
    cum_and = np.zeros(n_and)  # AND's cumulative payoff per strategy vs OR's history
    cum_or = np.zeros(n_or)
    count_and = np.zeros(n_and)
    count_or = np.zeros(n_or)
    marks = set(np.unique(np.geomspace(1, iterations, checkpoints).astype(int)))

    def pick(vec):
        if not randomize_ties:
            return int(np.argmax(vec))
        top = np.flatnonzero(vec >= vec.max() - 1e-12)
        return int(top[rng.integers(len(top))])

    history = []
    i, j = 0, 0
    for t in range(1, iterations + 1):
        if t > 1:
            i, j = pick(cum_and), pick(cum_or)
        count_and[i] += 1
        count_or[j] += 1
        cum_and += U_and[:, j]
        cum_or += U_or[i, :]
        if t in marks:
            history.append((t, exploitability(game, count_and / t, count_or / t)))
    p_and = count_and / iterations
    p_or = count_or / iterations
    if symmetrize is None:
        symmetrize = game.mode == "structured" and _symmetric_ties(game)
    if symmetrize:
        p_or = mirror_average(game, p_or)
    return MixedProfile(game, p_and, p_or, exploitability(game, p_and, p_or), history,
                        diagnostics={"symmetrized": bool(symmetrize)})


def _symmetric_ties(game: GridGame) -> bool:
    g = game.grid
    return bool(np.all(np.asarray(game.tie.q(1, g)) == np.asarray(game.tie.q(2, g))))


def mirror_average(game: GridGame, p_or: np.ndarray) -> np.ndarray:
    """Average OR's mass over each structured-mode mirror pair ``(g, 0)``/``(0, g)``."""
    if game.mode != "structured":
        raise PreconditionError("mirror averaging only applies to structured mode")
    n = (len(game.or_strategies) - 1) // 2
    out = p_or.copy()
    pair = 0.5 * (p_or[1:n + 1] + p_or[n + 1:])
    out[1:n + 1] = pair
    out[n + 1:] = pair
    return out


def solve_support_enumeration(game: GridGame, max_support_size: int, tol: float = 1e-9
                              ) -> list[MixedProfile]:
    """Exact equilibria with equal-size supports up to ``max_support_size``.

    For each support pair the indifference system of each player is solved;
    a candidate is kept when probabilities are nonnegative and no pure
    strategy outside the support does better.  Singular systems are
    skipped and counted in ``diagnostics["singular"]``.
    """
    if max_support_size < 1:
        raise PreconditionError("max_support_size must be >= 1")
    A, B = game.U_and, game.U_or
    m, n = A.shape
    found: list[MixedProfile] = []
    singular = 0
    seen = set()
    for k in range(1, min(max_support_size, m, n) + 1):
        for I in itertools.combinations(range(m), k):
            B_I = B[list(I), :]
            for J in itertools.combinations(range(n), k):
                # AND's mix over I makes OR indifferent on J, and vice versa.
                x = _indifferent_mix(B_I[:, list(J)].T)
                if x is None:
                    singular += 1
                    continue
                if np.any(x < -tol):
                    continue
                y = _indifferent_mix(A[np.ix_(I, J)])
                if y is None:
                    singular += 1
                    continue
                if np.any(y < -tol):
                    continue
                p_and = np.zeros(m)
                p_or = np.zeros(n)
                p_and[list(I)] = np.clip(x, 0, None)
                p_or[list(J)] = np.clip(y, 0, None)
                p_and /= p_and.sum()
                p_or /= p_or.sum()
                eps = exploitability(game, p_and, p_or)
                if eps > tol:
                    continue
                key = (tuple(np.round(p_and, 9)), tuple(np.round(p_or, 9)))
                if key in seen:
                    continue
                seen.add(key)
                found.append(MixedProfile(game, p_and, p_or, eps))
    for prof in found:
        prof.diagnostics["singular"] = singular
    log.debug("support enumeration: %d equilibria, %d singular systems", len(found), singular)
    return found


def _indifferent_mix(M):
    """Solve ``M @ p = w * 1``, ``sum(p) = 1`` for the mix ``p`` over M's columns."""
    k = M.shape[1]
    if k == 1:
        return np.ones(1)
    lhs = np.zeros((k + 1, k + 1))
    lhs[:k, :k] = M
    lhs[:k, k] = -1.0
    lhs[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    try:
        sol = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(sol)):
        return None
    return sol[:k]


def compare_to_analytic(profile: MixedProfile, v: float) -> dict:
    """KS distances of the profile's per-item marginals to the equilibrium marginals.

    Also reports the KS distance of OR's positive-coordinate law to
    ``x / (1 - x)`` and the deviation of AND's origin mass from ``1 - 1/(2v)``.
    """
    and_target = AndMarginal(v)
    or_item = _OrItemMarginal()
    out = {}
    for item in (1, 2):
        ma = profile.marginal("and", item)
        mo = profile.marginal("or", item)
        out[f"ks_and_item{item}"] = ks_distance(ma.atom_values, ma.atom_masses, and_target)
        out[f"ks_or_item{item}"] = ks_distance(mo.atom_values, mo.atom_masses, or_item)
    o = profile.game.or_strategies
    positive = np.maximum(o[:, 0], o[:, 1])
    keep = positive > 0
    w = profile.p_or[keep]
    out["ks_or_positive"] = (ks_distance(positive[keep], w / w.sum(), OrAxisMarginal())
                             if w.sum() > 0 else 1.0)
    out["and_origin_deviation"] = abs(profile.and_origin_mass - (1.0 - 1.0 / (2.0 * v)))
    out["max_ks"] = max(v_ for k, v_ in out.items() if k.startswith("ks_"))
    return out


class _OrItemMarginal(DiscreteMarginal):
    """OR's per-item marginal: 0 w.p. 1/2, else ``x/(1-x)``."""

    def __init__(self):
        self.atom_values = np.array([0.0])
        self.atom_masses = np.array([0.5])
        self._g = OrAxisMarginal()

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x < 0, 0.0, 0.5 + 0.5 * np.asarray(self._g.cdf(x)))
        return out if out.ndim else float(out)

    def cdf_left(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x <= 0, 0.0, 0.5 + 0.5 * np.asarray(self._g.cdf(x)))
        return out if out.ndim else float(out)


def profile_to_csv(profile: MixedProfile, meta: dict | None = None) -> str:
    """Rows ``player,x1,x2,probability`` for every strategy with positive mass."""
    buf = io.StringIO()
    for k, val in sorted((meta or {}).items()):
        buf.write(f"# {k}={val}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["player", "x1", "x2", "probability"])
    for player, strat, p in (("and", profile.game.and_strategies, profile.p_and),
                             ("or", profile.game.or_strategies, profile.p_or)):
        for (x1, x2), pr in zip(strat, p):
            if pr > 0:
                w.writerow([player, f"{x1:.12g}", f"{x2:.12g}", f"{pr:.12g}"])
    return buf.getvalue()


def profile_from_csv(text: str) -> dict:
    """Parse :func:`profile_to_csv` output into ``{"and": (points, probs), "or": ...}``."""
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    rows = list(csv.DictReader(lines))
    if not rows or not {"player", "x1", "x2", "probability"} <= set(rows[0]):
        raise ValueError("profile CSV needs columns player,x1,x2,probability")
    out = {}
    for player in ("and", "or"):
        sel = [r for r in rows if r["player"].strip().lower() == player]
        if sel:
            pts = np.array([[float(r["x1"]), float(r["x2"])] for r in sel])
            pr = np.array([float(r["probability"]) for r in sel])
            out[player] = (pts, pr)
    return out
