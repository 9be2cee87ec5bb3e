"""End-to-end runs of the command line on small problems."""

import json

import pytest

from mcblab.main import main
from mcblab.schemas.analysis import TestReport
from mcblab.storage import ArtifactStore, read_table


def run(out_dir, *argv) -> int:
    return main(["--out", str(out_dir), "--seed", "5", *argv])


class TestMeasures:
    def test_bounds_table(self, out_dir, capsys):
        assert run(out_dir, "measures", "--table", "nu-bounds") == 0
        assert capsys.readouterr().out.splitlines()[0] == "quantity,x,value,bound"
        _, rows = read_table(out_dir / "nu_bounds.csv")
        assert all(float(r["value"]) <= float(r["bound"]) for r in rows)

    def test_unknown_table_is_a_usage_error(self, out_dir):
        with pytest.raises(SystemExit) as info:
            run(out_dir, "measures", "--table", "nu-everything")
        assert info.value.code == 2


class TestSimulate:
    ARGS = ("simulate", "--n-sites", "4", "--horizon", "0.1", "--replicas", "3")

    def test_writes_paths(self, out_dir):
        assert run(out_dir, *self.ARGS) == 0
        meta, rows = read_table(out_dir / "paths.csv")
        assert meta["seed"] == "5"
        assert len(rows) == 3 * 11
        assert (out_dir / "paths.svg").exists()

    def test_rerun_is_byte_identical(self, out_dir):
        assert run(out_dir, *self.ARGS) == 0
        first = (out_dir / "paths.csv").read_text()
        assert run(out_dir, "--workers", "2", *self.ARGS) == 0
        assert (out_dir / "paths.csv").read_text() == first

    def test_bad_config_exits_2(self, out_dir, tmp_path):
        config = tmp_path / "bad.ini"
        config.write_text("[run]\nn_site = 3\n")
        assert main(["--config", str(config), "--out", str(out_dir), "simulate"]) == 2

    def test_tau_leap_from_config(self, out_dir, tmp_path):
        config = tmp_path / "tau.ini"
        config.write_text(
            "[run]\nn_sites = 6\nscheme = tau_leap\ndelta = 0.05\nhorizon = 0.1\n"
            "replicas = 2\nrecord_mode = jump_log\n[output]\nplots = false\n"
        )
        assert main(["--config", str(config), "--out", str(out_dir), "simulate"]) == 0
        assert (out_dir / "paths_events.csv").exists()
        assert not (out_dir / "paths.svg").exists()

    def test_seed_out_of_range(self, out_dir):
        with pytest.raises(SystemExit):
            main(["--seed", "-1", "--out", str(out_dir), *self.ARGS])

    def test_step_budget_keeps_partial_paths(self, out_dir, monkeypatch):
        monkeypatch.setenv("MCBLAB_MAX_STEPS", "3")
        monkeypatch.setenv("MCBLAB_BLOCK_SIZE", "2")
        assert run(out_dir, "--workers", "2", *self.ARGS) == 1
        _, rows = read_table(out_dir / "paths.csv")
        assert len(rows) == 3 * 4
        manifest = json.loads((out_dir / "error_manifest.json").read_text())
        assert manifest["error"] == "ResourceLimitError"
        assert "paths.csv" in manifest["artifacts"]

    @pytest.mark.parametrize(
        "suite, grid",
        [("theorem0", "gamma_grid = 10,50"), ("theorem1", "n_grid = 4,8"), ("theorem2", "n_grid = 4,8")],
    )
    def test_suite_from_config(self, out_dir, tmp_path, capsys, suite, grid):
        config = tmp_path / f"{suite}.ini"
        config.write_text(
            f"[run]\nn_sites = 4\nreplicas = 60\nblock_size = 30\n"
            f"[suite]\nname = {suite}\n{grid}\nt = 0.2\n[output]\nplots = false\n"
        )
        code = main(["--config", str(config), "--out", str(out_dir), "simulate"])
        summary = json.loads((out_dir / f"{suite}_summary.json").read_text())
        _, rows = read_table(out_dir / f"{suite}_reports.csv")
        assert summary["suite"] == suite
        assert summary["n_reports"] == len(rows) > 0
        assert code == (0 if summary["passed"] else 1)
        assert (out_dir / f"{suite}.csv").exists()
        printed = [line for line in capsys.readouterr().out.splitlines() if line.startswith(("pass ", "fail "))]
        assert len(printed) == len(rows)


class TestReference:
    def test_limit_diffusion(self, out_dir):
        assert run(out_dir, "reference", "--process", "limit_diffusion", "--horizon", "0.01", "--replicas", "2") == 0
        assert (out_dir / "paths.csv").exists()

    def test_y_theta(self, out_dir):
        argv = ("reference", "--process", "y_theta", "--theta", "1:1", "--horizon", "0.5", "--h", "0.1")
        assert run(out_dir, *argv, "--replicas", "4") == 0

    def test_y_theta_needs_target(self, out_dir):
        assert run(out_dir, "reference", "--process", "y_theta", "--horizon", "0.1") == 2
        assert (out_dir / "error_manifest.json").exists()

    def test_mcb_gamma_needs_gamma(self, out_dir):
        assert run(out_dir, "reference", "--process", "mcb_gamma", "--horizon", "0.01") == 2


class TestDualityAndVerify:
    def test_boundary_harmonicity(self, out_dir):
        assert run(out_dir, "duality", "--check", "harmonicity", "--theta", "2:0", "--samples", "10") == 0
        _, rows = read_table(out_dir / "duality_harmonicity_reports.csv")
        assert len(rows) == 6

    def test_closed_form_item(self, out_dir, capsys):
        assert run(out_dir, "--quick", "verify", "--only", "1") == 0
        assert "[PASS]  1. closed forms" in capsys.readouterr().out
        assert (out_dir / "item1_summary.json").exists()

    def test_quick_after_subcommand(self, out_dir, capsys):
        assert run(out_dir, "verify", "--quick", "--only", "1") == 0
        assert "[PASS]  1. closed forms" in capsys.readouterr().out

    def test_unknown_item(self, out_dir):
        assert run(out_dir, "verify", "--only", "99") == 2


class TestReportCommand:
    def test_counts_failures(self, out_dir, capsys):
        store = ArtifactStore(out_dir, "0" * 16, 5)
        store.write_reports("demo_reports", [TestReport.judge("ok", 0.0, 1.0), TestReport.judge("bad", 2.0, 1.0)])
        assert main(["report", "--from", str(out_dir)]) == 1
        assert "FAIL bad" in capsys.readouterr().out

    def test_redraws_paths(self, out_dir, capsys):
        assert run(out_dir, "simulate", "--n-sites", "4", "--horizon", "0.05", "--replicas", "2") == 0
        (out_dir / "paths.svg").unlink()
        assert main(["report", "--from", str(out_dir)]) == 0
        assert (out_dir / "paths.svg").exists()

    def test_missing_directory(self, tmp_path):
        assert main(["report", "--from", str(tmp_path / "absent")]) == 2
