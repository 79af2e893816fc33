"""Command-line front end: configs, artifacts, exit codes."""

import json

import numpy as np
import pytest

from galnn.cli import (
    ConfigError,
    load_config,
    main,
    parse_flat_config,
    resolve_run_plan,
)
from galnn.driver import default_schedules


def run_cli(argv):
    return main(argv)


def strip_wall_time(csv_text):
    return [line.rsplit(",", 1)[0] for line in csv_text.strip().split("\n")]


class TestConfigParsing:
    def test_flat_values(self):
        tree = parse_flat_config(
            "# comment\n"
            "problem = string_1d\n"
            "run.seed = 3\n"
            "schedules.tol = 1e-8\n"
            "schedules.width = 5, 10, 20\n"
            "schedules.beta.kind = constant\n"
            "schedules.beta.base = 2.5\n"
        )
        assert tree["problem"] == "string_1d"
        assert tree["run"]["seed"] == 3
        assert tree["schedules"]["tol"] == 1e-8
        assert tree["schedules"]["width"] == [5, 10, 20]
        assert tree["schedules"]["beta"] == {"kind": "constant", "base": 2.5}

    def test_flat_rejects_junk(self):
        with pytest.raises(ConfigError, match="key = value"):
            parse_flat_config("problem string_1d\n")
        with pytest.raises(ConfigError, match="empty key"):
            parse_flat_config("= 3\n")
        with pytest.raises(ConfigError, match="non-section"):
            parse_flat_config("run.seed = 3\nrun.seed.deeper = 4\n")
        with pytest.raises(ConfigError, match="non-section"):
            # dotting below a key that already holds a list
            parse_flat_config("schedules.width = 5, 10\nschedules.width.kind = constant\n")

    def test_json_and_flat_agree(self, tmp_path):
        flat = tmp_path / "c.cfg"
        flat.write_text("problem = l2_fit\nschedules.epochs = 7\n", encoding="utf-8")
        as_json = tmp_path / "c.json"
        as_json.write_text(
            json.dumps({"problem": "l2_fit", "schedules": {"epochs": 7}}),
            encoding="utf-8")
        assert load_config(str(flat)) == load_config(str(as_json))

    def test_missing_file(self):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config("/nonexistent/path.cfg")


class TestRunPlan:
    class Args:
        problem = None
        seed = None
        tol = None
        epochs = None
        max_iterations = None

    def test_defaults_fill_in(self):
        plan = resolve_run_plan({"problem": "string_1d"}, self.Args())
        assert plan.schedules == default_schedules("string_1d")
        assert plan.seed == 0 and plan.quadrature == {}

    def test_partial_schedule_override_keeps_rest(self):
        config = {"problem": "string_1d", "schedules": {"tol": 1e-9}}
        plan = resolve_run_plan(config, self.Args())
        base = default_schedules("string_1d")
        assert plan.schedules.tol == 1e-9
        assert plan.schedules.width == base.width
        assert plan.schedules.epochs == base.epochs

    def test_flags_beat_config(self):
        args = self.Args()
        args.seed = 9
        args.tol = 0.5
        config = {"problem": "l2_fit", "run": {"seed": 1}, "schedules": {"tol": 1e-3}}
        plan = resolve_run_plan(config, args)
        assert plan.seed == 9 and plan.schedules.tol == 0.5

    def test_results_section_ignored(self):
        config = {"problem": "l2_fit", "results": {"final_eta": 0.1}}
        plan = resolve_run_plan(config, self.Args())
        assert plan.problem_name == "l2_fit"

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError, match="unknown config key"):
            resolve_run_plan({"problem": "l2_fit", "solver": {}}, self.Args())
        with pytest.raises(ConfigError, match="unknown schedules key"):
            resolve_run_plan(
                {"problem": "l2_fit", "schedules": {"wdith": 5}}, self.Args())
        with pytest.raises(ConfigError, match="no problem named"):
            resolve_run_plan({}, self.Args())


@pytest.fixture()
def outdir(tmp_path, monkeypatch):
    monkeypatch.setenv("GALNN_OUT", str(tmp_path))
    return tmp_path


class TestRunCommand:
    def test_artifacts_and_exit_code(self, outdir):
        code = run_cli(["run", "l2_fit", "--epochs", "10",
                        "--max-iterations", "2", "--quiet"])
        assert code == 0
        rundir = outdir / "l2_fit_seed0"
        for name in ("manifest.json", "history.csv", "epochs.csv",
                     "diagnostics.csv", "solution.csv", "basis_01.csv",
                     "basis_02.csv"):
            assert (rundir / name).exists(), name

        manifest = json.loads((rundir / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["problem"] == "l2_fit"
        assert manifest["results"]["terminated_reason"] == "max_iterations"
        assert manifest["results"]["iterations"] == 2
        assert manifest["schedules"]["epochs"] == 10

        history = (rundir / "history.csv").read_text(encoding="utf-8").strip().split("\n")
        assert len(history) == 3

        solution = np.loadtxt(rundir / "solution.csv", delimiter=",", skiprows=1)
        assert solution.shape == (512, 2)
        assert solution[0, 0] == 0.0 and solution[-1, 0] == 1.0

        basis = np.loadtxt(rundir / "basis_01.csv", delimiter=",", skiprows=1)
        assert basis.shape == (4, 3)

    def test_manifest_reruns_identically(self, outdir):
        assert run_cli(["run", "l2_fit", "--epochs", "8",
                        "--max-iterations", "2", "--quiet"]) == 0
        first = outdir / "l2_fit_seed0"
        manifest = first / "manifest.json"
        assert run_cli(["run", "--config", str(manifest),
                        "--out", str(outdir / "again"), "--quiet"]) == 0
        again = outdir / "again"

        a = (first / "history.csv").read_text(encoding="utf-8")
        b = (again / "history.csv").read_text(encoding="utf-8")
        assert strip_wall_time(a) == strip_wall_time(b)
        for name in ("epochs.csv", "diagnostics.csv", "solution.csv",
                     "basis_01.csv", "basis_02.csv"):
            assert (first / name).read_bytes() == (again / name).read_bytes(), name

        m1 = json.loads(manifest.read_text(encoding="utf-8"))
        m2 = json.loads((again / "manifest.json").read_text(encoding="utf-8"))
        m1["results"].pop("wall_time")
        m2["results"].pop("wall_time")
        assert m1 == m2

    def test_degenerate_exit_code(self, outdir, tmp_path):
        cfg = tmp_path / "degenerate.cfg"
        cfg.write_text(
            "problem = string_1d\n"
            "run.condition_cap = 1.0\n"
            "schedules.epochs = 3\n",
            encoding="utf-8")
        code = run_cli(["run", "--config", str(cfg), "--quiet"])
        assert code == 3
        manifest = json.loads(
            (outdir / "string_1d_seed0" / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["results"]["terminated_reason"] == "degenerate"

    def test_no_solution_file_when_no_basis(self, outdir):
        code = run_cli(["run", "l2_fit", "--tol", "1e9",
                        "--epochs", "1", "--quiet"])
        assert code == 0
        rundir = outdir / "l2_fit_seed0"
        assert (rundir / "history.csv").exists()
        assert not (rundir / "solution.csv").exists()
        assert not (rundir / "basis_01.csv").exists()

    def test_2d_solution_masked_to_domain(self, outdir):
        code = run_cli(["run", "membrane_2d", "--epochs", "2",
                        "--max-iterations", "1", "--quiet", "--seed", "1"])
        assert code == 0
        sol = np.loadtxt(outdir / "membrane_2d_seed1" / "solution.csv",
                         delimiter=",", skiprows=1)
        assert sol.shape[1] == 3
        radii = np.hypot(sol[:, 0], sol[:, 1])
        assert radii.max() <= 1.0 + 1e-12
        assert sol.shape[0] < 128 * 128  # corners of the grid fall outside

    def test_exit_2_on_unknown_problem(self, outdir, capsys):
        assert run_cli(["run", "not_a_problem", "--quiet"]) == 2
        assert "not_a_problem" in capsys.readouterr().err

    def test_exit_2_on_bad_config(self, outdir, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("problem = l2_fit\nschedules.tol = 0\n", encoding="utf-8")
        assert run_cli(["run", "--config", str(cfg), "--quiet"]) == 2


class TestListCommand:
    def test_table(self, capsys):
        assert run_cli(["list"]) == 0
        out = capsys.readouterr().out
        lines = out.strip().split("\n")
        assert len(lines) == 10  # header plus nine problems
        assert lines[0].split()[:4] == ["name", "dim", "form", "exact"]
        lshape = next(line for line in lines if line.startswith("l_shaped"))
        assert " no " in lshape

    def test_json(self, capsys):
        assert run_cli(["list", "--json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert len(doc) == 9
        assert doc["l_shaped"]["exact_solution"] is False
        assert doc["string_1d"]["exact_solution"] is True
        assert doc["plate_2d"]["dim"] == 2
        sched = doc["beam_couple"]["default_schedules"]
        assert sched["beta"]["kind"] == "geometric"


class TestQuadratureStudy:
    def test_gauss_at_default_count_reproduces_run(self, outdir):
        # the catalog default uses 512 interior nodes, so a gauss study at
        # 512 repeats the same discrete problem as a plain run
        assert run_cli(["run", "l2_fit", "--epochs", "6",
                        "--max-iterations", "2", "--quiet"]) == 0
        assert run_cli(["quadrature-study", "--nodes", "512", "--rule", "gauss",
                        "--epochs", "6", "--max-iterations", "2", "--quiet"]) == 0
        study = (outdir / "quadrature_study" / "history_gauss_512.csv").read_text(
            encoding="utf-8")
        full = (outdir / "l2_fit_seed0" / "history.csv").read_text(encoding="utf-8")
        assert strip_wall_time(study) == strip_wall_time(full)

    def test_coarse_riemann_has_error_floor(self, outdir):
        assert run_cli(["quadrature-study", "--nodes", "16,32",
                        "--rule", "riemann", "--quiet"]) == 0
        rows = (outdir / "quadrature_study" / "study.csv").read_text(
            encoding="utf-8").strip().split("\n")
        assert rows[0] == "rule,nodes,iterations,final_eta,final_true_l2,reason"
        assert len(rows) == 3
        for row in rows[1:]:
            cells = row.split(",")
            assert cells[0] == "riemann"
            final_eta, final_l2 = float(cells[3]), float(cells[4])
            # the discrete estimator keeps shrinking but the true error
            # stalls on the quadrature bias of the one-sided rule
            assert final_l2 > 10.0 * final_eta
            assert final_l2 > 1e-6

    def test_bad_nodes_exit_2(self, outdir):
        assert run_cli(["quadrature-study", "--nodes", ",", "--quiet"]) == 2
        assert run_cli(["quadrature-study", "--nodes", "0", "--quiet"]) == 2
