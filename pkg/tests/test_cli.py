import csv
import json
import math
import subprocess
import sys

import pytest

from andor_auction import __version__
from andor_auction.cli import OUTPUT_ENV, main


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def load(path):
    return json.loads(path.read_text())


class TestSimulate:
    def test_v1_report(self, tmp_path):
        assert run(tmp_path, "simulate", "--v", "1", "--samples", "1000000", "--seed", "7") == 0
        doc = load(tmp_path / "simulate.json")
        est, se = doc["estimates"]["p_and_wins"], doc["std_errors"]["p_and_wins"]
        assert abs(est - 0.25) <= 3 * se
        assert doc["meta"] == {"command": "simulate", "v": 1.0, "seed": 7, "samples": 1000000,
                               "tie": "const:0.5", "version": __version__}

    def test_byte_identical_reruns(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for d in (a, b):
            assert run(d, "simulate", "--v", "1.5", "--samples", "20000", "--seed", "7") == 0
        assert (a / "simulate.json").read_bytes() == (b / "simulate.json").read_bytes()

    def test_csv_format(self, tmp_path):
        assert run(tmp_path, "simulate", "--v", "2", "--samples", "1000", "--format", "csv") == 0
        rows = dict(csv.reader((tmp_path / "simulate.csv").read_text().splitlines()))
        assert float(rows["meta.v"]) == 2.0 and "estimates.revenue_or" in rows

    def test_regime_exit(self, tmp_path, capsys):
        assert run(tmp_path, "simulate", "--v", "0.3") == 1
        assert "regime" in capsys.readouterr().err

    def test_env_output_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "env"))
        assert main(["simulate", "--v", "1", "--samples", "100"]) == 0
        assert (tmp_path / "env" / "simulate.json").exists()


class TestConfigErrors:
    @pytest.mark.parametrize("args", [
        ["simulate", "--v", "1", "--samples", "0"],
        ["simulate", "--v", "-1"],
        ["simulate", "--v", "1", "--format", "xml"],
        ["simulate", "--v", "1", "--tie", "sometimes"],
        ["simulate", "--v", "1", "--seed", "-3"],
        ["solve", "--v", "1", "--grid", "2.5"],
        ["figures", "--figure", "histogram"],
        ["bogus"],
    ])
    def test_exit_2_one_line(self, tmp_path, capsys, args):
        with pytest.raises(SystemExit) as exc:
            run(tmp_path, *args)
        assert exc.value.code == 2
        err = capsys.readouterr().err.strip()
        assert len(err.splitlines()) == 1

    def test_missing_profile(self, tmp_path, capsys):
        assert run(tmp_path, "verify", "--v", "1", "--profile", str(tmp_path / "nope.csv")) == 2
        assert "nope.csv" in capsys.readouterr().err

    def test_bad_figure_range(self, tmp_path):
        assert run(tmp_path, "figures", "--v-min", "2", "--v-max", "1") == 2


class TestVerify:
    def test_equilibrium(self, tmp_path):
        assert run(tmp_path, "verify", "--v", "1", "--grid-step", "0.001953125") == 0
        doc = load(tmp_path / "verify.json")
        assert doc["equilibrium"]["eps_and"] <= 1e-9
        assert doc["equilibrium"]["u_or_star"] == pytest.approx(0.5, abs=1e-12)
        assert doc["characterization"]["ok"]

    def test_perturbed_profile(self, tmp_path, capsys):
        prof = tmp_path / "perturbed.csv"
        prof.write_text("player,x1,x2,probability\nand,0.2,0.2,0.5\nand,0,0,0.5\n")
        assert run(tmp_path, "verify", "--v", "2", "--profile", str(prof), "--grid-step", "0.0078125") == 3
        doc = load(tmp_path / "verify.json")
        assert not doc["equilibrium"]["is_eps_nash"]
        assert doc["characterization"]["violations"]
        assert "violation" in capsys.readouterr().out


class TestSolve:
    def test_fictitious_play(self, tmp_path):
        assert run(tmp_path, "solve", "--v", "1", "--mode", "structured", "--grid", "51",
                   "--iters", "100000", "--seed", "7") == 0
        doc = load(tmp_path / "solve.json")
        for k in ("ks_and_item1", "ks_and_item2", "ks_or_item1", "ks_or_item2"):
            assert doc["comparison"][k] < 0.05
        assert doc["eps"] < 0.01
        text = (tmp_path / "solve_profile.csv").read_text()
        assert "# v=1.0" in text and "player,x1,x2,probability" in text

    def test_pure_below_half(self, tmp_path):
        assert run(tmp_path, "solve", "--v", "0.4", "--pure", "--tie", "and-wins") == 0
        pure = load(tmp_path / "solve.json")["pure_nash"]
        # structured mode: OR bids on one axis
        assert {"and": [0.4, 0.4], "or": [0.4, 0.0]} in pure

    def test_pure_v1_empty(self, tmp_path):
        assert run(tmp_path, "solve", "--v", "1", "--pure") == 0
        assert load(tmp_path / "solve.json")["pure_nash"] == []

    def test_support_solver(self, tmp_path):
        assert run(tmp_path, "solve", "--v", "1", "--grid", "5", "--solver", "support",
                   "--max-support", "3") == 0
        assert load(tmp_path / "solve.json")["eps"] <= 1e-9


class TestFigures:
    def test_all(self, tmp_path):
        assert run(tmp_path, "figures") == 0
        for fid in ("and-wins", "revenue-or", "revenue-total", "poa", "welfare-loss"):
            assert (tmp_path / f"{fid}.csv").exists()
        rows = list(csv.DictReader((tmp_path / "poa.csv").read_text().splitlines()))
        best = min(rows, key=lambda r: float(r["poa"]))
        assert abs(float(best["v"]) - 0.643) <= 0.01
        summary = load(tmp_path / "summary.json")
        assert summary["asymptotic_loss"]["welfare_loss"] == pytest.approx(math.log(2) - 0.5, abs=1e-3)
        assert [m["v"] for m in summary["poa_minima"]] == pytest.approx([0.643028, 1.87999], abs=1e-3)

    def test_single(self, tmp_path):
        assert run(tmp_path, "figures", "--figure", "and-wins") == 0
        assert sorted(p.name for p in tmp_path.glob("*.csv")) == ["and-wins.csv"]

    def test_deterministic(self, tmp_path):
        for d in ("a", "b"):
            assert run(tmp_path / d, "figures", "--figure", "poa", "--step", "0.1") == 0
        for name in ("poa.csv", "summary.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "andor_auction.cli", "--version"],
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == __version__
