import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from rqmc_ci.cli import main, parse_config, read_values, CliError


def run(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "rqmc_ci", *map(str, args)],
                          capture_output=True, text=True, cwd=cwd)


def _json_rows(text):
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def _csv_rows(text):
    return list(csv.DictReader(text.splitlines()))


@pytest.fixture
def halves(tmp_path):
    p = tmp_path / "halves.txt"
    p.write_text("0.5\n" * 64)
    return p


class TestCi:
    def test_hoeffding_constant_file(self, halves):
        r = run("ci", halves, "--method", "hoeffding", "--alpha", "0.05")
        assert r.returncode == 0, r.stderr
        (row,) = _json_rows(r.stdout)
        hw = math.sqrt(math.log(40) / 128)
        assert row["method"] == "hoeffding"
        assert row["lo"] == pytest.approx(0.5 - hw, rel=1e-8)
        assert row["hi"] == pytest.approx(0.5 + hw, rel=1e-8)

    def test_all_methods_by_default(self, halves):
        r = run("ci", halves, "--format", "csv")
        assert r.returncode == 0
        assert [row["method"] for row in _csv_rows(r.stdout)] == [
            "hoeffding", "maurer_pontil", "clt", "ebci", "hbci"]

    def test_hbci_contains_mean(self, tmp_path):
        y = (np.random.default_rng(4).random(500) < 0.3).astype(int)
        p = tmp_path / "bern.txt"
        p.write_text("\n".join(map(str, y)) + "\n")
        (row,) = _json_rows(run("ci", p, "--method", "hbci").stdout)
        assert row["lo"] <= y.mean() <= row["hi"]

    def test_header_line_is_skipped(self, tmp_path):
        p = tmp_path / "h.csv"
        p.write_text("y\n0.25\n0.75\n")
        assert read_values(p) == [0.25, 0.75]

    def test_empty_file(self, tmp_path):
        p = tmp_path / "empty.txt"
        p.write_text("")
        r = run("ci", p)
        assert r.returncode == 2

    def test_out_of_range_names_line(self, tmp_path):
        p = tmp_path / "bad.txt"
        p.write_text("0.1\n0.2\n1.5\n")
        r = run("ci", p)
        assert r.returncode == 2
        assert "line 3" in r.stderr

    def test_non_numeric_value(self, tmp_path):
        p = tmp_path / "bad.txt"
        p.write_text("0.1\nabc\n")
        assert run("ci", p).returncode == 2

    def test_missing_file(self, tmp_path):
        assert run("ci", tmp_path / "nope.txt").returncode == 1

    def test_unknown_method(self, halves):
        assert run("ci", halves, "--method", "magic").returncode == 2

    @pytest.mark.parametrize("alpha", ["0", "1", "-0.2"])
    def test_bad_alpha(self, halves, alpha):
        assert main(["ci", str(halves), "--alpha", alpha]) == 2

    def test_out_file(self, halves, tmp_path):
        out = tmp_path / "o.jsonl"
        assert main(["ci", str(halves), "--method", "clt", "--out", str(out)]) == 0
        assert _json_rows(out.read_text())[0]["method"] == "clt"


class TestAllocate:
    def test_guidance_bound(self):
        r = run("allocate", "--N", 1024, "--theta", 2, "--sigma0-sq", 0.25)
        assert r.returncode == 0
        (row,) = _json_rows(r.stdout)
        assert row["guidance_bound"] < 7
        assert row["n"] in (math.floor(row["n_continuous"]), math.ceil(row["n_continuous"]))

    def test_theta_one(self):
        (row,) = _json_rows(run("allocate", "--N", 4096, "--theta", 1, "--sigma0-sq", 0.2).stdout)
        assert row["n"] == 1

    def test_largest_budget(self):
        r = run("allocate", "--N", "2^28", "--theta", 2, "--sigma0-sq", "2/9", "--pow2")
        (row,) = _json_rows(r.stdout)
        assert row["n"] == 512

    def test_invalid_theta(self):
        assert run("allocate", "--N", 64, "--theta", 0.5, "--sigma0-sq", 0.1).returncode == 2


class TestOracleTable:
    def test_indicator_rows(self):
        rows = _csv_rows(run("oracle-table", "--format", "csv").stdout)
        got = [(int(r["log2N"]), int(r["n"])) for r in rows]
        assert got == [(0, 1), (4, 2), (7, 4), (10, 8), (13, 16), (16, 32), (19, 64), (22, 128),
                       (25, 256), (28, 512)]
        for r in rows[1:]:
            assert float(r["scaled_W"]) == pytest.approx(4.826379, abs=1e-6)

    def test_smooth_last_row(self):
        rows = _csv_rows(run("oracle-table", "--integrand", "smooth_1d", "--format", "csv").stdout)
        assert int(rows[-1]["n"]) == 128
        assert float(rows[-1]["scaled_W"]) == pytest.approx(4.188651, abs=1e-6)

    def test_single_budget(self):
        rows = _json_rows(run("oracle-table", "--kmin", 12, "--kmax", 12, "--format", "json").stdout)
        assert len(rows) == 1 and rows[0]["N"] == 4096

    def test_range_checked(self):
        assert run("oracle-table", "--kmax", 29).returncode == 2


SMOKE = """# tiny grid
integrands = jump, kink
dims = 1, 2
budgets = 2^6, 128
sizes = 1, 4
methods = hbci, ebci, clt
reps = 2
seed = 17
"""


class TestExperiment:
    def test_smoke_and_determinism(self, tmp_path):
        cfg = tmp_path / "smoke.cfg"
        cfg.write_text(SMOKE)
        a, b = tmp_path / "a", tmp_path / "b"
        r1 = run("experiment", cfg, "--out", a)
        r2 = run("experiment", cfg, "--out", b, "--jobs", 2)
        assert r1.returncode == 0 and r2.returncode == 0, r1.stderr
        assert r1.stdout == ""
        assert r1.stderr
        recs = _csv_rows((a / "records.csv").read_text())
        assert len(recs) == 2 * 2 * 2 * 2 * 3 * 2
        for name in ("records.csv", "summary.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_json_lines(self, tmp_path):
        cfg = tmp_path / "smoke.cfg"
        cfg.write_text(SMOKE)
        assert run("experiment", cfg, "--out", tmp_path, "--format", "json", "--reps", 1).returncode == 0
        assert len(_json_rows((tmp_path / "records.jsonl").read_text())) == 2 * 2 * 2 * 2 * 3
        assert (tmp_path / "summary.csv").exists()

    def test_unknown_key(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("reps = 2\nbudgetz = 256\n")
        r = run("experiment", cfg)
        assert r.returncode == 2
        assert "budgetz" in r.stderr

    def test_invalid_grid(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("budgets = 100\n")
        assert run("experiment", cfg, "--out", tmp_path).returncode == 2

    def test_parse_config(self):
        assert parse_config("budgets = 2^8, 1024  # comment\nalpha=0.1\n\n") == {
            "budgets": (256, 1024), "alpha": 0.1}
        with pytest.raises(CliError):
            parse_config("no equals sign")

    def test_missing_config(self, tmp_path):
        assert run("experiment", tmp_path / "missing.cfg").returncode == 1


class TestRatioStudy:
    def test_rows(self):
        r = run("ratio-study", "--budgets", 256, "--sizes", "1,4", "--reps", 2, "--format", "csv")
        assert r.returncode == 0
        rows = _csv_rows(r.stdout)
        assert [int(x["n"]) for x in rows] == [1, 4]
        for x in rows:
            assert float(x["ratio"]) == pytest.approx(
                float(x["mean_hbci_width"]) / float(x["bennett_width"]), rel=1e-7)


def test_no_subcommand():
    assert run().returncode == 2
