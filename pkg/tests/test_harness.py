import re

import numpy as np
import pytest

from magsplit.cli import main
from magsplit.harness import (
    ConfigError,
    ExperimentConfig,
    ExperimentResult,
    ResultRow,
    build_problem,
    emit_csv,
    emit_plotdata,
    load_config,
    parse_csv,
    run_experiment,
    run_tables,
    tables_experiment,
)
from magsplit.integrators import SchemeConfig, integrate
from magsplit.metrics import convergence_rate


def small_sweep(workers=1, schemes=None, dts=(0.02, 0.01)):
    return ExperimentConfig(
        name="mini",
        problem="bernoulli",
        params={"lambda1": -1.0, "lambda2": -2.0, "m": 2},
        schemes=schemes or [SchemeConfig(scheme="strang"),
                            SchemeConfig(scheme="successive_standard", J=1)],
        dts=list(dts),
        finals=[1.0],
        norms=["l2_time", "linf_time"],
        workers=workers,
    )


def zero_seconds(result):
    text_rows = []
    for row in result.rows:
        text_rows.append(ResultRow(**{**row.__dict__, "seconds": 0.0}))
    return ExperimentResult(text_rows)


class TestRunExperiment:
    def test_empty_scheme_list_gives_empty_result(self, tmp_path):
        cfg = small_sweep()
        cfg.schemes = []
        result = run_experiment(cfg)
        assert result.rows == []
        path = emit_csv(result, tmp_path / "empty.csv")
        assert path.read_text().strip() == path.read_text().splitlines()[0]

    def test_sweep_shape_and_labels(self):
        result = run_experiment(small_sweep())
        assert len(result.rows) == 2 * 2 * 2  # schemes x dts x norms
        assert {r.scheme for r in result.rows} == {"strang", "successive_standard"}
        assert all(r.problem == "bernoulli(lambda1=-1;lambda2=-2;m=2;T=1)"
                   for r in result.rows)

    def test_rates_only_on_rows_with_halved_partner(self):
        result = run_experiment(small_sweep())
        for row in result.rows:
            if row.dt == 0.02:
                assert row.rate is not None
            else:
                assert row.rate is None

    def test_rate_column_recomputes_from_errors(self):
        result = run_experiment(small_sweep(dts=(0.02, 0.01, 0.005)))
        by_key = {}
        for row in result.rows:
            by_key.setdefault(row.group_key(), {})[row.dt] = row
        for group in by_key.values():
            for dt, row in group.items():
                partner = group.get(dt / 2.0)
                if row.rate is not None:
                    assert partner is not None
                    expected = convergence_rate(row.error, partner.error)
                    assert abs(row.rate - expected) < 1e-12

    def test_determinism_up_to_timing(self, tmp_path):
        cfg = small_sweep()
        r1 = run_experiment(cfg)
        r2 = run_experiment(cfg)
        p1 = emit_csv(zero_seconds(r1), tmp_path / "a.csv")
        p2 = emit_csv(zero_seconds(r2), tmp_path / "b.csv")
        assert p1.read_bytes() == p2.read_bytes()

    def test_worker_count_does_not_change_results(self):
        serial = zero_seconds(run_experiment(small_sweep(workers=1)))
        threaded = zero_seconds(run_experiment(small_sweep(workers=4)))
        assert serial == threaded

    def test_multiple_final_times_share_one_run(self):
        cfg = small_sweep(dts=(0.02,))
        cfg.finals = [0.5, 1.0]
        cfg.rates = False
        result = run_experiment(cfg)
        assert len(result.rows) == 2 * 2 * 2
        labels = {r.problem for r in result.rows}
        assert labels == {
            "bernoulli(lambda1=-1;lambda2=-2;m=2;T=0.5)",
            "bernoulli(lambda1=-1;lambda2=-2;m=2;T=1)",
        }

    def test_refinement_study_rows(self):
        cfg = ExperimentConfig(
            name="refine",
            problem="fisher2d",
            kind="refinement",
            params={"K": 1.0},
            schemes=[SchemeConfig(scheme="strang")],
            dt=0.1,
            finals=[0.2],
            dxs=[0.2, 0.1],
            ref_dx=0.05,
            relative=True,
            norms=["l2"],
        )
        result = run_experiment(cfg)
        assert [r.dx for r in result.rows] == [0.2, 0.1]
        assert result.rows[0].rate is not None
        assert result.rows[1].rate is None
        assert result.rows[0].error > result.rows[1].error > 0


class TestConfigValidation:
    def test_unknown_problem(self):
        cfg = small_sweep()
        cfg.problem = "kdv"
        with pytest.raises(ConfigError, match="unknown problem"):
            run_experiment(cfg)

    def test_unsorted_dts(self):
        cfg = small_sweep(dts=(0.01, 0.02))
        with pytest.raises(ConfigError, match="descending"):
            cfg.validate()

    def test_rates_demand_halvings(self):
        cfg = small_sweep(dts=(0.02, 0.015))
        with pytest.raises(ConfigError, match="halvings"):
            cfg.validate()

    def test_non_integer_step_count(self):
        cfg = small_sweep(dts=(0.03,))
        cfg.rates = False
        with pytest.raises(ConfigError, match="non-integer"):
            cfg.validate()

    def test_pde_norm_on_ode_problem(self):
        cfg = small_sweep()
        cfg.norms = ["l2"]
        with pytest.raises(ConfigError, match="not valid"):
            cfg.validate()

    def test_sweep_without_reference_rejected(self):
        cfg = ExperimentConfig(
            name="bad", problem="fisher2d", dts=[0.1],
            schemes=[SchemeConfig(scheme="ab")],
        )
        with pytest.raises(ConfigError, match="refinement"):
            cfg.validate()

    def test_build_problem_rejects_unknown_params(self):
        with pytest.raises(ConfigError, match="unknown parameters"):
            build_problem("bernoulli", {"lambda9": 1.0})


class TestCsv:
    def test_round_trip(self, tmp_path):
        result = run_experiment(small_sweep())
        path = emit_csv(result, tmp_path / "r.csv")
        back = parse_csv(path)
        assert back == result

    def test_floats_carry_17_significant_digits(self, tmp_path):
        rows = [ResultRow(problem="p", scheme="s", magnus="", quadrature="",
                          reconstruction="", correction_ic="", dt=1.0 / 3.0, dx=None,
                          norm="l2", relative=False, error=np.pi, rate=None,
                          seconds=0.0)]
        path = emit_csv(ExperimentResult(rows), tmp_path / "f.csv")
        line = path.read_text().splitlines()[1]
        assert "0.33333333333333331" in line
        assert "3.1415926535897931" in line

    def test_header_only_for_empty(self, tmp_path):
        path = emit_csv(ExperimentResult([]), tmp_path / "e.csv")
        assert path.read_text(encoding="utf-8").splitlines() == [
            "problem,scheme,magnus,quadrature,reconstruction,correction_ic,"
            "dt,dx,norm,relative,error,rate,seconds"
        ]


class TestPlotData:
    def test_field_snapshot_at_t0_reproduces_initial(self, tmp_path):
        prob = build_problem("fisher1d", {})
        traj = integrate(prob, prob.initial, 0.0, 0.1, 0.05,
                         SchemeConfig(scheme="strang"))
        paths = emit_plotdata(traj, tmp_path, prefix="f_", times=[0.0])
        field = [p for p in paths if "field" in p.name][0]
        data = np.loadtxt(field)
        np.testing.assert_allclose(data[:, 0], prob.grid.axis_points(0))
        np.testing.assert_allclose(data[:, 1], prob.initial)

    def test_solution_norm_series_grows_toward_capacity(self, tmp_path):
        prob = build_problem("fisher1d", {"K": 1.0})
        traj = integrate(prob, prob.initial, 0.0, 2.0, 0.05,
                         SchemeConfig(scheme="strang"))
        paths = emit_plotdata(traj, tmp_path, prefix="n_")
        l1 = [p for p in paths if p.name.endswith("norm_l1.dat")][0]
        data = np.loadtxt(l1)
        assert np.all(np.diff(data[:, 1]) > 0)

    def test_error_series_from_result(self, tmp_path):
        result = run_experiment(small_sweep())
        paths = emit_plotdata(result, tmp_path)
        assert len(paths) == 4  # 2 schemes x 2 norms
        data = np.loadtxt(paths[0], ndmin=2)
        assert data.shape == (2, 2)

    def test_file_names_are_injective_over_groups(self, tmp_path):
        result = run_experiment(run_tables_cfg())
        paths = emit_plotdata(result, tmp_path)
        groups = {row.group_key() for row in result.rows}
        assert len(paths) == len(set(paths)) == len(groups)


def run_tables_cfg():
    cfg = tables_experiment(lambda2=-2.0)
    cfg.dts = [0.02, 0.01]
    return cfg


class TestCli:
    def test_run_missing_config_names_file(self, capsys):
        code = main(["run", "missing.toml"])
        assert code == 1
        assert "missing.toml" in capsys.readouterr().err

    def test_unknown_subcommand_exits_1(self, capsys):
        assert main(["frobnicate"]) == 1

    def test_unknown_flag_exits_1(self, capsys):
        assert main(["tables", "--frobnicate"]) == 1

    def test_tables_writes_three_csvs(self, tmp_path, capsys):
        code = main(["tables", "--out", str(tmp_path)])
        assert code == 0
        for name in ("table1.csv", "table2.csv", "table3.csv"):
            assert (tmp_path / name).exists()
        table1 = parse_csv(tmp_path / "table1.csv")
        assert {r.dt for r in table1.rows} == {0.01}
        table3 = parse_csv(tmp_path / "table3.csv")
        assert all(r.rate is not None and r.norm == "l2_time" for r in table3.rows)

    def test_run_config_file(self, tmp_path, capsys):
        cfg_text = """
schema_version = 1

[[experiment]]
name = "mini"
problem = "bernoulli"
dts = [0.02, 0.01]
norms = ["l2_time"]

  [experiment.params]
  lambda1 = -1.0
  lambda2 = -2.0

  [[experiment.scheme]]
  scheme = "ab"
"""
        cfg_file = tmp_path / "exp.toml"
        cfg_file.write_text(cfg_text)
        out = tmp_path / "results"
        assert main(["run", str(cfg_file), "--out", str(out)]) == 0
        rows = parse_csv(out / "mini.csv").rows
        assert len(rows) == 2 and rows[0].scheme == "ab"

    def test_env_var_output_override(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("MAGSPLIT_OUT", str(tmp_path / "envdir"))
        assert main(["tables"]) == 0
        assert (tmp_path / "envdir" / "table2.csv").exists()

    def test_schema_version_required(self, tmp_path, capsys):
        bad = tmp_path / "bad.toml"
        bad.write_text("[[experiment]]\nname='x'\nproblem='bernoulli'\n")
        assert main(["run", str(bad)]) == 1
        assert "schema_version" in capsys.readouterr().err

    def test_malformed_toml(self, tmp_path, capsys):
        bad = tmp_path / "bad.toml"
        bad.write_text("schema_version = [unclosed")
        assert main(["run", str(bad)]) == 1

    def test_selftest_passes(self, capsys):
        assert main(["selftest"]) == 0
        out = capsys.readouterr().out
        assert "all checks passed" in out
        assert len(re.findall(r"\[PASS\]", out)) >= 7


class TestLoadConfig:
    def test_full_round_trip(self, tmp_path):
        cfg_text = """
schema_version = 1

[[experiment]]
name = "refine2d"
problem = "fisher2d"
kind = "refinement"
dt = 0.1
finals = [0.2]
dxs = [0.2, 0.1]
ref_dx = 0.05
relative = true
norms = ["l1", "l2", "linf"]

  [experiment.params]
  K = 0.5

  [[experiment.scheme]]
  scheme = "strang"
"""
        path = tmp_path / "r.toml"
        path.write_text(cfg_text)
        (cfg,) = load_config(path)
        assert cfg.kind == "refinement"
        assert cfg.ref_dx == 0.05
        assert cfg.schemes[0].scheme == "strang"
        assert cfg.params == {"K": 0.5}

    def test_unknown_keys_rejected(self, tmp_path):
        path = tmp_path / "u.toml"
        path.write_text(
            "schema_version = 1\n[[experiment]]\nname='x'\nproblem='bernoulli'\n"
            "frumious = true\n"
        )
        with pytest.raises(ConfigError, match="unknown experiment keys"):
            load_config(path)

    def test_unknown_scheme_keys_rejected(self, tmp_path):
        path = tmp_path / "s.toml"
        path.write_text(
            "schema_version = 1\n[[experiment]]\nname='x'\nproblem='bernoulli'\n"
            "dts=[0.1]\n[[experiment.scheme]]\nscheme='ab'\nwhirl=3\n"
        )
        with pytest.raises(ConfigError, match="unknown scheme keys"):
            load_config(path)
