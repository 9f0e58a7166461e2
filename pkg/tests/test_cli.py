"""Command-line interface: schemas, round-trips, determinism, exit codes."""

import csv
import io
import json
import math

import pytest

from bfdr import cli
from bfdr.numkernel import IntegralValue, QuadratureNonConvergence


def run_cli(argv, capsys):
    code = cli.main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parse_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    return header, [dict(zip(header, row)) for row in body]


class TestCoeffs:
    def test_normal_normal_row(self, capsys):
        code, out, err = run_cli(
            ["coeffs", "--model", "normal-mean", "--prior", "normal:1", "--alpha", "0.05"],
            capsys,
        )
        assert code == 0
        header, rows = parse_csv(out)
        assert len(rows) == 1
        assert float(rows[0]["c1"]) == pytest.approx(0.016670169437766601, abs=1e-9)
        assert float(rows[0]["d1"]) == pytest.approx(1.3290734831629425, abs=1e-8)

    def test_median_requires_n(self, capsys):
        code, out, err = run_cli(
            ["coeffs", "--model", "normal-median", "--prior", "normal:1", "--alpha", "0.05"],
            capsys,
        )
        assert code == 2
        record = json.loads(err)
        assert record["error"] == "config"
        assert any("parity" in v for v in record["violations"])


class TestRatesAndSweep:
    def test_sweep_reproduces_expansion_accuracy(self, capsys):
        code, out, err = run_cli(
            [
                "sweep", "--rates",
                "--model", "normal-mean", "--prior", "normal:1",
                "--alpha-grid", "0.05:0.15:0.05", "--n", "10", "--method", "both",
            ],
            capsys,
        )
        assert code == 0
        header, rows = parse_csv(out)
        assert len(rows) == 3
        assert {"alpha", "n", "fdr_exact", "far_exact", "fdr_series3", "far_series3",
                "fdr_gap", "far_gap"} <= set(header)
        assert all(float(r["fdr_gap"]) <= 0.01 for r in rows)

    def test_sweep_requires_rates_flag_and_grid(self, capsys):
        code, out, err = run_cli(
            ["sweep", "--model", "normal-mean", "--prior", "normal:1",
             "--alpha", "0.05", "--n", "10"],
            capsys,
        )
        assert code == 2
        record = json.loads(err)
        assert len(record["violations"]) == 2

    def test_json_carries_identical_values(self, capsys):
        args = ["rates", "--model", "exp-rate", "--prior", "gamma-mode1:2",
                "--alpha", "0.05", "--n", "10", "--method", "both"]
        code1, out_csv, _ = run_cli(args, capsys)
        code2, out_json, _ = run_cli(args + ["--format", "json"], capsys)
        assert code1 == code2 == 0
        header, rows = parse_csv(out_csv)
        jrows = json.loads(out_json)
        assert len(jrows) == len(rows)
        for crow, jrow in zip(rows, jrows):
            for key in header:
                assert float(crow[key]) == jrow[key]

    def test_round_trip_all_cells_numeric(self, capsys):
        code, out, _ = run_cli(
            ["rates", "--model", "cauchy-median", "--prior", "cauchy:1",
             "--alpha", "0.05", "--n-grid", "5,10", "--method", "series"],
            capsys,
        )
        assert code == 0
        header, rows = parse_csv(out)
        assert len(rows) == 2
        for row in rows:
            for key in header:
                float(row[key])  # parses

    def test_theta0_override(self, capsys):
        # H0: theta >= 2 for the rate family; the alternative mass follows
        code, out, _ = run_cli(
            ["coeffs", "--model", "exp-rate", "--prior", "gamma-mode1:2",
             "--alpha", "0.05", "--theta0", "2.0"],
            capsys,
        )
        assert code == 0
        header, rows = parse_csv(out)
        lam = float(rows[0]["lambda_alt"])
        assert lam == pytest.approx(1.0 - 3.0 * math.exp(-2.0), rel=1e-9)


class TestSim:
    def test_deterministic_across_runs_and_workers(self, tmp_path, capsys):
        base = ["sim", "--model", "normal-mean", "--prior", "normal:1",
                "--alpha", "0.05", "--n", "10", "--m", "5000",
                "--seed", "42", "--replications", "3"]
        outs = []
        for extra in ([], [], ["--workers", "3"]):
            path = tmp_path / f"sim{len(outs)}.csv"
            code, _, _ = run_cli(base + ["--out", str(path)] + extra, capsys)
            assert code == 0
            outs.append(path.read_bytes())
        assert outs[0] == outs[1]
        assert outs[0] == outs[2]

    def test_schema(self, capsys):
        code, out, _ = run_cli(
            ["sim", "--model", "normal-mean", "--prior", "normal:1",
             "--alpha", "0.05", "--n", "10", "--m", "2000", "--seed", "7",
             "--replications", "2"],
            capsys,
        )
        assert code == 0
        header, rows = parse_csv(out)
        assert header == ["m", "replication", "V", "S", "R", "fdr_hat", "delta_hat", "se"]
        assert len(rows) == 2
        assert int(rows[0]["V"]) + int(rows[0]["S"]) == int(rows[0]["R"])

    def test_seed_is_mandatory(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["sim", "--model", "normal-mean", "--prior", "normal:1",
                      "--alpha", "0.05", "--n", "10", "--m", "100"])
        assert exc.value.code == 2


class TestOtherCommands:
    def test_nalpha_table(self, capsys):
        code, out, _ = run_cli(
            ["nalpha", "--model", "normal-mean", "--prior", "normal:1",
             "--alpha", "0.05", "--tau-grid", "0.5,1,2"],
            capsys,
        )
        assert code == 0
        header, rows = parse_csv(out)
        assert header == ["tau", "n_alpha"]
        values = [int(r["n_alpha"]) for r in rows]
        assert values[0] >= values[1] >= values[2]

    def test_spiky_table(self, capsys):
        code, out, _ = run_cli(
            ["spiky", "--model", "normal-mean", "--prior", "normal:1",
             "--alpha", "0.05", "--n", "10", "--tau-grid", "0.001,1000"],
            capsys,
        )
        assert code == 0
        header, rows = parse_csv(out)
        assert abs(float(rows[0]["fdr"]) - 0.5) <= 0.05
        assert float(rows[1]["fdr"]) <= 0.01

    def test_compare_table(self, capsys):
        code, out, _ = run_cli(
            ["compare", "--prior", "normal:1", "--alpha", "0.05"], capsys
        )
        assert code == 0
        header, rows = parse_csv(out)
        assert float(rows[0]["c1_gap"]) == pytest.approx(0.004222789590031064, abs=1e-9)

    def test_geometric_tau_grid(self, capsys):
        code, out, _ = run_cli(
            ["spiky", "--model", "normal-mean", "--prior", "normal:1",
             "--alpha", "0.05", "--n", "5", "--tau-grid", "0.5:2:3"],
            capsys,
        )
        assert code == 0
        header, rows = parse_csv(out)
        taus = [float(r["tau"]) for r in rows]
        assert taus == pytest.approx([0.5, 1.0, 2.0], rel=1e-12)


class TestValidationAndErrors:
    def test_all_violations_listed(self, capsys):
        code, out, err = run_cli(
            ["coeffs", "--model", "normal-mean", "--prior", "bogus:1",
             "--alpha", "2.0"],
            capsys,
        )
        assert code == 2
        record = json.loads(err)
        assert record["error"] == "config"
        assert len(record["violations"]) == 2

    def test_unknown_flag_rejected(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["coeffs", "--model", "normal-mean", "--prior", "normal:1",
                      "--alpha", "0.05", "--frobnicate"])
        assert exc.value.code == 2

    def test_help_enumerates_commands(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["--help"])
        assert exc.value.code == 0
        out = capsys.readouterr().out
        for command in ("coeffs", "rates", "sweep", "sim", "nalpha", "spiky", "compare"):
            assert command in out

    def test_numerical_failure_exit_code(self, capsys, monkeypatch):
        def explode(*args, **kwargs):
            raise QuadratureNonConvergence(IntegralValue(0.1, 0.05, converged=False))

        monkeypatch.setattr(cli.exact, "exact_joint", explode)
        code, out, err = run_cli(
            ["rates", "--model", "normal-mean", "--prior", "normal:1",
             "--alpha", "0.05", "--n", "10", "--method", "exact"],
            capsys,
        )
        assert code == 3
        record = json.loads(err)
        assert record["error"] == "numerical"
        assert record["best_estimate"] == 0.1

    def test_out_dir_env(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("BFDR_OUT_DIR", str(tmp_path))
        code, _, _ = run_cli(
            ["compare", "--prior", "normal:1", "--alpha", "0.05",
             "--out", "gaps.csv"],
            capsys,
        )
        assert code == 0
        assert (tmp_path / "gaps.csv").exists()
