"""Command-line front end: ``andor-auction {simulate,verify,solve,figures}``.

Exit codes: 0 success, 1 regime error (v <= 1/2), 2 bad configuration or
I/O, 3 verification failure.  Every output file carries ``v``, ``seed`` and
the package version, and reruns with the same flags produce identical bytes.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import FIGURE_IDS, figure_series, find_poa_minima, monte_carlo_report, welfare_loss
from .distributions import DiscreteDistribution
from .errors import AuctionError, RegimeError
from .model import TieBreakRule
from .solver import (
    build_grid_game,
    compare_to_analytic,
    enumerate_pure_nash,
    profile_from_csv,
    profile_to_csv,
    solve_fictitious_play,
    solve_support_enumeration,
)
from .strategies import AndEquilibrium, OrEquilibrium, check_regime
from .verifier import best_response_gap, check_characterization

OUTPUT_ENV = "ANDOR_OUTPUT_DIR"
DEFAULT_SEED = 20240611

EXIT_OK, EXIT_REGIME, EXIT_CONFIG, EXIT_NOT_NASH = 0, 1, 2, 3


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # one-line diagnostic instead of argparse's usage dump
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _positive_int(text):
    try:
        val = int(float(text))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if val < 1 or val != float(text):
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text!r}")
    return val


def _seed(text):
    val = int(text)
    if not 0 <= val < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return val


def _positive_float(text):
    val = float(text)
    if not (val > 0 and math.isfinite(val)):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return val


def _tie(text):
    try:
        return TieBreakRule.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="andor-auction", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, seed=True):
        sp.add_argument("--v", type=_positive_float, required=True, help="OR player's value")
        sp.add_argument("--tie", type=_tie, default=TieBreakRule.constant(0.5),
                        help="tie rule: probability AND wins a tie, 'and-wins' or 'or-wins'")
        sp.add_argument("--out", type=Path, default=None,
                        help=f"output directory (default ${OUTPUT_ENV} or .)")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        if seed:
            sp.add_argument("--seed", type=_seed, default=DEFAULT_SEED)

    sp = sub.add_parser("simulate", help="Monte Carlo estimate of equilibrium outcomes")
    common(sp)
    sp.add_argument("--samples", type=_positive_int, default=1_000_000)

    sp = sub.add_parser("verify", help="best-response gaps and characterization checks")
    common(sp, seed=False)
    sp.add_argument("--grid-step", type=_positive_float, default=1 / 512)
    sp.add_argument("--eps", type=_positive_float, default=None,
                    help="epsilon for the Nash test (default: grid step)")
    sp.add_argument("--char-tol", type=_positive_float, default=1e-9)
    sp.add_argument("--profile", type=Path, default=None,
                    help="CSV profile (player,x1,x2,probability); missing players use the closed form")

    sp = sub.add_parser("solve", help="solve a discretized game")
    common(sp)
    sp.add_argument("--mode", choices=("structured", "full"), default="structured")
    sp.add_argument("--grid", type=_positive_int, default=51, help="number of grid levels")
    sp.add_argument("--iters", type=_positive_int, default=100_000)
    sp.add_argument("--solver", choices=("fp", "support"), default="fp")
    sp.add_argument("--max-support", type=_positive_int, default=3)
    sp.add_argument("--randomize-ties", action="store_true",
                    help="seeded random choice among tied best responses")
    sp.add_argument("--pure", action="store_true", help="enumerate pure Nash equilibria only")

    sp = sub.add_parser("figures", help="tabulate figure data")
    sp.add_argument("--v-min", type=float, default=0.51)
    sp.add_argument("--v-max", type=float, default=10.0)
    sp.add_argument("--step", type=_positive_float, default=0.01)
    sp.add_argument("--figure", choices=tuple(FIGURE_IDS), action="append", default=None)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--out", type=Path, default=None)
    return p


def _outdir(args) -> Path:
    d = args.out or Path(os.environ.get(OUTPUT_ENV, "."))
    d.mkdir(parents=True, exist_ok=True)
    return d


def _meta(args, **extra) -> dict:
    m = {"command": args.command, "version": __version__}
    for k in ("v", "seed"):
        if hasattr(args, k):
            m[k] = getattr(args, k)
    if hasattr(args, "tie"):
        m["tie"] = args.tie.label
    m.update(extra)
    return m


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def _write(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _dump(path: Path, doc: dict, fmt: str) -> Path:
    doc = _clean(doc)
    if fmt == "json":
        path = path.with_suffix(".json")
        _write(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    else:
        path = path.with_suffix(".csv")
        rows = ["key,value"]
        for section in sorted(doc):
            body = doc[section]
            if isinstance(body, dict):
                rows += [f"{section}.{k},{_csv_val(body[k])}" for k in sorted(body)]
            else:
                rows.append(f"{section},{_csv_val(body)}")
        _write(path, "\n".join(rows) + "\n")
    return path


def _csv_val(v):
    if isinstance(v, float):
        return f"{v:.12g}"
    if isinstance(v, (list, dict)):
        return '"' + json.dumps(v, sort_keys=True).replace('"', '""') + '"'
    return str(v)


def cmd_simulate(args) -> int:
    check_regime(args.v)
    rng = np.random.default_rng(args.seed)
    rep = monte_carlo_report(args.v, args.samples, args.tie, rng)
    doc = {
        "meta": _meta(args, samples=args.samples),
        "estimates": rep.estimates,
        "std_errors": rep.std_errors,
        "closed_form": rep.closed_form,
        "within_3se": rep.within(3.0),
    }
    path = _dump(_outdir(args) / "simulate", doc, args.format)
    p, se = rep.estimates["p_and_wins"], rep.std_errors["p_and_wins"]
    print(f"p_and_wins={p:.6f} +/- {se:.6f} (closed form {rep.closed_form['p_and_wins']:.6f}) -> {path}")
    return EXIT_OK


def _load_profile(path: Path, v: float):
    try:
        parsed = profile_from_csv(path.read_text(encoding="utf-8"))
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot read profile {path}: {exc}") from None
    F_and = (DiscreteDistribution(*parsed["and"], kind="grid", name="profile_and")
             if "and" in parsed else AndEquilibrium(v))
    F_or = (DiscreteDistribution(*parsed["or"], kind="grid", name="profile_or")
            if "or" in parsed else OrEquilibrium(v))
    return F_and, F_or


def cmd_verify(args) -> int:
    check_regime(args.v)
    if args.profile is not None:
        F_and, F_or = _load_profile(args.profile, args.v)
    else:
        F_and, F_or = AndEquilibrium(args.v), OrEquilibrium(args.v)
    rep = best_response_gap(F_and, F_or, args.v, args.tie, args.grid_step, eps=args.eps)
    char = check_characterization(F_and, F_or, args.v, tol=args.char_tol)
    doc = {
        "meta": _meta(args, grid_step=args.grid_step, profile=str(args.profile) if args.profile else None),
        "equilibrium": rep.as_dict(),
        "characterization": {
            "ok": char.ok,
            "violations": [{"clause": x.clause, "location": list(x.location), "magnitude": x.magnitude}
                           for x in char.violations],
        },
    }
    path = _dump(_outdir(args) / "verify", doc, args.format)
    status = "eps-Nash" if rep.is_eps_nash else "NOT eps-Nash"
    print(f"eps_and={rep.eps_and:.3g} eps_or={rep.eps_or:.3g} u_or_star={rep.u_or_star:.12g} "
          f"[{status}; characterization {'ok' if char.ok else 'violated'}] -> {path}")
    for x in char.violations:
        print(f"  violation {x.clause} at {x.location}: {x.magnitude:.3g}")
    return EXIT_OK if rep.is_eps_nash else EXIT_NOT_NASH


def cmd_solve(args) -> int:
    game = build_grid_game(args.v, args.grid, args.mode, args.tie)
    out = _outdir(args)
    meta = _meta(args, mode=args.mode, grid=args.grid)
    if args.pure:
        ne = enumerate_pure_nash(game)
        pure = [{"and": game.and_strategies[i].tolist(), "or": game.or_strategies[j].tolist()} for i, j in ne]
        path = _dump(out / "solve", {"meta": meta, "pure_nash": pure}, args.format)
        print(f"{len(pure)} pure Nash equilibria -> {path}")
        return EXIT_OK

    if args.solver == "fp":
        rng = np.random.default_rng(args.seed)
        prof = solve_fictitious_play(game, args.iters, rng, randomize_ties=args.randomize_ties)
        meta.update(solver="fictitious-play", iters=args.iters)
    else:
        found = solve_support_enumeration(game, args.max_support)
        if not found:
            print("support enumeration found no equilibrium with the given support bound", file=sys.stderr)
            return EXIT_NOT_NASH
        prof = found[0]
        meta.update(solver="support-enumeration", max_support=args.max_support, n_found=len(found))
    cmp = compare_to_analytic(prof, args.v) if args.v > 0.5 else None
    prof_path = out / "solve_profile.csv"
    _write(prof_path, profile_to_csv(prof, meta))
    doc = {"meta": meta, "eps": prof.eps, "comparison": cmp,
           "history": [list(h) for h in prof.history], "profile_file": prof_path.name}
    path = _dump(out / "solve", doc, args.format)
    summary = f"eps={prof.eps:.4g}"
    if cmp:
        summary += f" max_ks={cmp['max_ks']:.4f} and_origin_deviation={cmp['and_origin_deviation']:.4f}"
    print(f"{summary} -> {path}, {prof_path}")
    return EXIT_OK


def cmd_figures(args) -> int:
    if not (0.5 < args.v_min < args.v_max):
        raise ConfigError("need 1/2 < --v-min < --v-max")
    out = _outdir(args)
    ids = args.figure or list(FIGURE_IDS)
    written = []
    for fid in ids:
        series = figure_series(fid, args.v_min, args.v_max, args.step)
        path = out / f"{fid}.{args.format}"
        _write(path, series.to_csv() if args.format == "csv" else series.to_json())
        written.append(path.name)
    minima = find_poa_minima()
    summary = {
        "meta": {"command": "figures", "version": __version__, "v_min": args.v_min,
                 "v_max": args.v_max, "step": args.step, "figures": ids},
        "poa_minima": [{"bracket": list(b), "v": v, "poa": y}
                       for b, (v, y) in zip(((0.5, 1.0), (1.0, 20.0)), minima)],
        "asymptotic_loss": {"v": 1e4, "welfare_loss": welfare_loss(1e4),
                            "limit_ln2_minus_half": math.log(2) - 0.5},
    }
    _write(out / "summary.json", json.dumps(_clean(summary), indent=2, sort_keys=True) + "\n")
    print(f"wrote {', '.join(written)}, summary.json -> {out}")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "verify": cmd_verify, "solve": cmd_solve, "figures": cmd_figures}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except RegimeError as exc:
        print(f"regime error: {exc}. For v <= 1/2 see `solve --pure --tie and-wins` "
              "(Walrasian pure equilibria).", file=sys.stderr)
        return EXIT_REGIME
    except (ConfigError, AuctionError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
