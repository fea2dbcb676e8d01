import csv
import io
import json
import math

import pytest

from orbitdensity import cli, fuchsian
from orbitdensity.errors import UsageError


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def json_lines(out):
    return [json.loads(line) for line in out.strip().splitlines()]


class TestParsing:
    def test_parse_point_formats(self):
        assert cli.parse_point("i").as_complex == 1j
        assert cli.parse_point("2i").as_complex == 2j
        assert cli.parse_point("0.5+0.866i").as_complex == 0.5 + 0.866j
        with pytest.raises(UsageError):
            cli.parse_point("1.0")
        with pytest.raises(UsageError):
            cli.parse_point("nonsense")

    def test_parse_grid(self):
        assert cli.parse_grid("400x400") == (400, 400)
        with pytest.raises(UsageError):
            cli.parse_grid("400")
        with pytest.raises(UsageError):
            cli.parse_grid("4x4")


class TestExitCodes:
    def test_usage_error_on_bad_n_max(self, capsys):
        code, _, err = run_cli(capsys, "finite-scan", "--n-max", "0")
        assert code == 2
        assert "n_max" in err

    def test_usage_error_on_alpha_one(self, capsys):
        code, _, _ = run_cli(
            capsys, "bergman-density", "--alpha", "1.0", "--z", "i", "--ball", "3"
        )
        assert code == 2

    def test_unknown_command_exits_two(self, capsys):
        assert cli.main(["no-such-command"]) == 2

    def test_scan_success(self, capsys):
        code, out, _ = run_cli(
            capsys, "finite-scan", "--n-max", "2", "--windows", "3", "--seed", "1",
            "--format", "csv",
        )
        assert code == 0
        assert out.splitlines()[0].startswith("n,subgroup_order")


class TestDeterminism:
    def test_scan_byte_identical(self, capsys):
        args = ("finite-scan", "--n-max", "3", "--windows", "4", "--seed", "7", "--format", "csv")
        _, out1, _ = run_cli(capsys, *args)
        _, out2, _ = run_cli(capsys, *args)
        assert out1 == out2

    def test_density_byte_identical(self, capsys):
        args = (
            "bergman-density", "--alpha", "2", "--z", "i", "--ball", "4",
            "--probes", "12", "--format", "json",
        )
        _, out1, _ = run_cli(capsys, *args)
        _, out2, _ = run_cli(capsys, *args)
        assert out1 == out2


class TestFormatParity:
    def test_ball_csv_json_same_content(self, capsys):
        code, out_json, _ = run_cli(
            capsys, "ball", "--lattice", "psl2z", "--norm", "2", "--format", "json"
        )
        assert code == 0
        code, out_csv, _ = run_cli(
            capsys, "ball", "--lattice", "psl2z", "--norm", "2", "--format", "csv"
        )
        assert code == 0
        records = [r for r in json_lines(out_json) if r["type"] == "element"]
        rows = list(csv.DictReader(io.StringIO(out_csv)))
        assert len(rows) == len(records) == 10
        for rec, row in zip(records, rows):
            for key in ("a", "b", "c", "d", "frobenius_norm"):
                assert float(row[key]) == pytest.approx(rec[key], rel=1e-15)

    def test_scan_csv_json_same_content(self, capsys):
        args = ("finite-scan", "--n-max", "2", "--windows", "4", "--seed", "3")
        _, out_csv, _ = run_cli(capsys, *args, "--format", "csv")
        _, out_json, _ = run_cli(capsys, *args, "--format", "json")
        csv_rows = list(csv.DictReader(io.StringIO(out_csv)))
        json_rows = [r for r in json_lines(out_json) if r["type"] == "scan_row"]
        assert len(csv_rows) == len(json_rows)
        for c_row, j_row in zip(csv_rows, json_rows):
            assert set(c_row) == set(j_row) - {"type"}
            for key, text in c_row.items():
                value = j_row[key]
                if isinstance(value, bool):
                    assert text == ("true" if value else "false")
                elif isinstance(value, (int, float)):
                    assert float(text) == pytest.approx(value, rel=1e-15)
                else:
                    assert text == str(value)

    def test_floats_have_17_significant_digits(self, capsys):
        _, out, _ = run_cli(
            capsys, "formal-degree", "--alpha", "2", "--grid", "128x64", "--format", "csv"
        )
        row = list(csv.DictReader(io.StringIO(out)))[0]
        value = float(row["formal_degree"])
        assert f"{value:.17g}" == row["formal_degree"]


class TestBallCommand:
    def test_matches_integer_oracle(self, capsys):
        code, out, _ = run_cli(
            capsys, "ball", "--lattice", "psl2z", "--norm", "3", "--format", "json"
        )
        assert code == 0
        records = json_lines(out)
        elements = {
            (r["a"], r["b"], r["c"], r["d"]) for r in records if r["type"] == "element"
        }
        oracle = {
            (m.a, m.b, m.c, m.d)
            for m in fuchsian.brute_force_integer_ball(3.0).elements
        }
        assert elements == oracle
        summary = records[-1]
        assert summary["type"] == "summary"
        assert summary["closure_certified"] is True


class TestStabilizerCommand:
    def test_snapped_elliptic_point(self, capsys):
        code, out, _ = run_cli(
            capsys, "stabilizer", "--lattice", "psl2z", "--z", "0.5+0.866i",
            "--ball", "4", "--format", "json",
        )
        assert code == 0
        record = json_lines(out)[0]
        assert record["order"] == 3
        assert record["order_kernel"] == 3
        assert record["paths_agree"] is True

    def test_exact_point(self, capsys):
        code, out, _ = run_cli(
            capsys, "stabilizer", "--z", "2i", "--ball", "5", "--format", "json"
        )
        assert code == 0
        assert json_lines(out)[0]["order"] == 1


class TestFormalDegreeCommand:
    def test_alpha_four_default_tolerance(self, capsys):
        code, out, _ = run_cli(
            capsys, "formal-degree", "--alpha", "4", "--grid", "400x400", "--format", "json"
        )
        assert code == 0
        record = json_lines(out)[0]
        expected = 3.0 / (4.0 * math.pi)
        assert abs(record["formal_degree"] - expected) <= 0.01 * expected

    def test_requested_tolerance_failure_exits_three(self, capsys):
        code, _, err = run_cli(
            capsys, "formal-degree", "--alpha", "2", "--grid", "16x16",
            "--rel-tol", "1e-8",
        )
        assert code == 3
        assert "error" in err.lower() or "failure" in err.lower()


class TestDensityCommand:
    def test_reference_run(self, capsys):
        code, out, _ = run_cli(
            capsys, "bergman-density", "--lattice", "psl2z", "--alpha", "2",
            "--z", "i", "--ball", "6", "--probes", "40", "--format", "json",
        )
        assert code == 0
        records = json_lines(out)
        reports = [r for r in records if r["type"] == "frame_report"]
        summary = records[-1]
        assert len(reports) == 3
        assert summary["stab_order"] == 2
        assert abs(summary["density_product"] - 1.0 / 12.0) <= 0.02 / 12.0
        assert summary["verdict_i_pass"] is True
        assert summary["verdict_consistency"] == "pass"
        assert reports[-1]["diag_s_relation_residual"] <= 1e-8

    def test_haar_scale_invariance(self, capsys):
        base_args = (
            "bergman-density", "--alpha", "2", "--z", "i", "--ball", "4",
            "--probes", "10", "--format", "json",
        )
        _, out1, _ = run_cli(capsys, *base_args)
        _, out3, _ = run_cli(capsys, *base_args, "--haar-scale", "3")
        s1 = json_lines(out1)[-1]
        s3 = json_lines(out3)[-1]
        assert abs(s3["covolume"] - 3.0 * s1["covolume"]) <= 1e-12 * s1["covolume"]
        assert abs(s3["formal_degree"] - s1["formal_degree"] / 3.0) <= 1e-12 * s1["formal_degree"]
        assert abs(s3["density_product"] - s1["density_product"]) <= 1e-12 * s1["density_product"]
        assert s3["verdict_consistency"] == s1["verdict_consistency"]


class TestConfigFile:
    def test_config_supplies_parameters(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("norm = 2\nformat = json\n")
        code, out, _ = run_cli(capsys, "ball", "--config", str(cfg))
        assert code == 0
        assert json_lines(out)[-1]["size"] == 10

    def test_flags_override_config(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("norm = 2\n")
        code, out, _ = run_cli(
            capsys, "ball", "--config", str(cfg), "--norm", "1.5", "--format", "json"
        )
        assert code == 0
        assert json_lines(out)[-1]["size"] == 2

    def test_unknown_key_rejected(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("norm = 2\nturbo = yes\n")
        code, _, err = run_cli(capsys, "ball", "--config", str(cfg))
        assert code == 2
        assert "turbo" in err

    def test_custom_lattice_block(self, capsys, tmp_path):
        cfg = tmp_path / "lat.cfg"
        cfg.write_text(
            "lattice.name = halfcont\n"
            "lattice.generators = 1,2,0,1; 0,-1,1,0\n"
            f"lattice.covolume = {2.0 * math.pi}\n"
            "lattice.integral = false\n"
        )
        code, out, _ = run_cli(
            capsys, "ball", "--config", str(cfg), "--lattice", "halfcont",
            "--norm", "3", "--format", "json",
        )
        assert code == 0
        summary = json_lines(out)[-1]
        assert summary["lattice"] == "halfcont"
        assert summary["closure_certified"] is False

    def test_out_file(self, capsys, tmp_path):
        out_path = tmp_path / "report.json"
        code = cli.main(
            ["ball", "--norm", "2", "--format", "json", "--out", str(out_path)]
        )
        assert code == 0
        lines = [json.loads(l) for l in out_path.read_text().strip().splitlines()]
        assert lines[-1]["size"] == 10
