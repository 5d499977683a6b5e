import csv
import json
import zipfile
from dataclasses import replace

import numpy as np
import pytest
from click.testing import CliRunner
from numpy.testing import assert_allclose

from app import cli
from blueprints.bench import OfflineModel, dd_identity_error, run_offline, run_online, run_sweep, train
from blueprints.report import build_report, format_table
from extensions import init_registry
from models.run_models import RunLog
from utils.artifact_utils import ARTIFACT_NAME, list_artifacts
from utils.config import RunConfig, apply_env, apply_overrides, load_preset, resolve_config
from utils.errors import ArtifactMismatchError, ConfigError, StageError
from utils.frequency import ParameterPoint
from utils.problems import PROBLEMS, heat_problem

# ----------------- Configuration -----------------


def test_presets_carry_the_published_settings():
    heat, rd1, rd2 = (load_preset(p) for p in ("heat", "rd1", "rd2"))
    assert (heat.nx, heat.tau, heat.omega_max, heat.n_omega) == (50, 5e-4, 20.0, 20)
    assert (heat.n_gamma, heat.n_i) == (1, (4, 4))
    assert (rd1.n_gamma, rd1.n_i, rd1.omega_max) == (3, (2, 2), 15.0)
    assert (rd2.n_gamma, rd2.n_i, rd2.tau) == (4, (4, 4), 1e-3)
    assert all(c.n_train == 10 and c.m_samples == 1000 for c in (heat, rd1, rd2))


def test_overrides_and_environment():
    config = apply_overrides(load_preset("heat"), ["training.n_gamma=2", "nx=10", "evaluation.time_levels=[0.5]"])
    assert config.n_gamma == 2 and config.nx == 10 and config.time_levels == (0.5,)
    with pytest.raises(ConfigError):
        apply_overrides(config, ["training.bogus=1"])
    with pytest.raises(ConfigError):
        apply_overrides(config, ["no_equals_sign"])
    env = apply_env(config, {"FTDDVS_SEED": "99", "FTDDVS_WORKERS": "3", "FTDDVS_OUTPUT_DIR": "/tmp/x"})
    assert (env.seed, env.workers, env.output_dir) == (99, 3, "/tmp/x")
    with pytest.raises(ConfigError):
        apply_env(config, {"FTDDVS_SEED": "many"})


def test_validation_errors():
    with pytest.raises(ConfigError):
        RunConfig(nx=7).validate()
    with pytest.raises(ConfigError):
        RunConfig(eps_x=0.0).validate()
    with pytest.raises(ConfigError):
        RunConfig(problem="wave").validate()
    with pytest.raises(ConfigError):
        resolve_config(preset="heat", overrides=["time.tau=0.3"], environ={})


def test_time_step_is_checked_against_the_problem_final_time(monkeypatch):
    monkeypatch.setitem(PROBLEMS, "long", lambda: replace(heat_problem(), id="long", final_time=2.0))
    ok = RunConfig(problem="long", tau=0.4, time_levels=(1.5, 2.0)).validate()
    assert ok.tau == 0.4
    with pytest.raises(ConfigError, match="does not divide"):
        RunConfig(problem="long", tau=0.3).validate()
    with pytest.raises(ConfigError, match="time_levels"):
        RunConfig(problem="long", tau=0.4, time_levels=(2.5,)).validate()
    with pytest.raises(ConfigError, match="does not divide"):
        RunConfig(problem="heat", tau=0.4).validate()
    with pytest.raises(ConfigError, match="time_levels"):
        RunConfig(problem="heat", tau=0.5, time_levels=(1.5,)).validate()


def test_config_hash_ignores_runtime_fields():
    base = RunConfig()
    assert base.config_hash() == replace(base, output_dir="elsewhere", workers=4).config_hash()
    assert base.config_hash() != replace(base, seed=1).config_hash()
    assert base.run_dir().name == f"heat-{base.config_hash()}"
    assert RunConfig.from_dict(base.to_dict()) == base


# ----------------- Offline / online -----------------


def test_stage_errors_name_the_failing_stage(tiny_config):
    with pytest.raises(StageError) as info:
        train(replace(tiny_config, nx=7))
    assert info.value.stage == "assemble"


def test_offline_artifact_round_trip(tiny_config):
    model = run_offline(tiny_config)
    path = tiny_config.run_dir() / ARTIFACT_NAME
    assert path.exists()
    loaded = OfflineModel.load(path, tiny_config)
    assert loaded.term_counts() == model.term_counts()
    mu = ParameterPoint(2.5, (1.2, 1.7))
    assert_allclose(loaded.evaluate(mu, loaded.online_context()), model.evaluate(mu, model.online_context()))
    with zipfile.ZipFile(path) as z:
        meta = json.loads(z.read("metadata.json"))
    assert meta["problem"] == "heat" and meta["mesh"] == [6, 6] and meta["format_version"] == 2
    assert len(meta["training_samples"]) == tiny_config.n_train
    assert list_artifacts(tiny_config.output_dir)[0]["path"] == str(path)


def test_artifact_must_match_the_config(tiny_config):
    run_offline(tiny_config)
    path = tiny_config.run_dir() / ARTIFACT_NAME
    with pytest.raises(ArtifactMismatchError):
        OfflineModel.load(path, replace(tiny_config, nx=8, ny=8))
    with pytest.raises(ArtifactMismatchError):
        OfflineModel.load(path, replace(tiny_config, problem="rd2"))


def test_artifact_format_version_is_checked(tiny_config, tmp_path):
    bad = tmp_path / "bad.zip"
    with zipfile.ZipFile(bad, "w") as z:
        z.writestr("metadata.json", json.dumps({"format_version": 99}))
        z.writestr("arrays.npz", b"")
    with pytest.raises(ArtifactMismatchError):
        OfflineModel.load(bad, tiny_config)


def test_online_outputs_and_determinism(tiny_config):
    model = run_offline(tiny_config)
    report = run_online(tiny_config, model=model)
    out = tiny_config.run_dir() / "online"
    assert len(report.sample_errors) == tiny_config.m_samples
    assert np.isfinite(report.epsilon_u) and report.epsilon_u >= 0
    assert set(report.epsilon_hat) == {"interface", "interior1", "interior2", "full"}
    assert set(report.time_levels) == {"0.5"}
    for name in ("samples.csv", "timings.csv", "time_errors.csv", "report.json", "mean_fields.npz"):
        assert (out / name).exists()
    with open(out / "samples.csv", newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["sample", "xi1", "xi2", "error", "error_t0.5"]
    assert len(rows) == tiny_config.m_samples + 1
    first = (out / "samples.csv").read_bytes()
    run_online(tiny_config, model=model)
    assert (out / "samples.csv").read_bytes() == first


def test_worker_threads_give_the_same_errors(tiny_config):
    model = train(tiny_config)
    serial = run_online(tiny_config, model=model)
    threaded = run_online(replace(tiny_config, workers=2), model=model)
    assert_allclose(threaded.sample_errors, serial.sample_errors)


def test_dd_identity_diagnostic(tiny_config):
    model = train(tiny_config)
    assert dd_identity_error(model.disc, ParameterPoint(4.0, (1.1, 1.9))) < 1e-9


def test_sweep_and_report(tiny_config):
    model = run_offline(tiny_config)
    run_online(tiny_config, model=model)
    rows = run_sweep(tiny_config)
    curves = {r["curve"] for r in rows}
    assert {"S1", "G", "I1", "I2", "global"} <= curves
    assert all(r["N"] <= tiny_config.sweep_max for r in rows)
    assert (tiny_config.run_dir() / "sweep" / "decay.csv").exists()

    written = build_report([tiny_config.run_dir()])
    names = sorted(p.name for p in written["figures"])
    h = tiny_config.config_hash()
    assert names == sorted(f"{h}-{n}.svg" for n in ("error_vs_N", "sample_errors", "error_vs_t", "mean_solution"))
    before = {p: p.read_bytes() for p in written["figures"]}
    build_report([tiny_config.run_dir()])
    assert all(p.read_bytes() == data for p, data in before.items())
    table = written["tables"]["text"].read_text(encoding="utf-8")
    assert "FT-DD-VS" in table and "FEM-BE" in table


def test_format_table_aligns_columns():
    text = format_table([["heat", "abc", "FT-DD-VS", 2, "1e-3", "0.1", "0.2", "5.0"]])
    lines = text.splitlines()
    assert lines[0].startswith("problem")
    assert set(lines[1].replace(" ", "")) == {"-"}
    assert len(lines) == 3


# ----------------- CLI & registry -----------------


def test_cli_offline_online_report(tiny_config, tmp_path, monkeypatch):
    out = tmp_path / "cli_runs"
    monkeypatch.setenv("FTDDVS_OUTPUT_DIR", str(out))
    sets = ["--set", "mesh.nx=6", "--set", "mesh.ny=6", "--set", "time.tau=0.05",
            "--set", "frequency.omega_max=8.0", "--set", "frequency.n_omega=6",
            "--set", "training.n_train=4", "--set", "training.n_s=1", "--set", "training.n_f=1",
            "--set", "training.n_i=1", "--set", "evaluation.m_samples=2", "--set", "evaluation.n_validation=1"]
    runner = CliRunner()
    result = runner.invoke(cli, ["offline", "--preset", "heat", *sets])
    assert result.exit_code == 0, result.output
    assert "N_G" in result.output
    result = runner.invoke(cli, ["online", "--preset", "heat", *sets])
    assert result.exit_code == 0, result.output
    assert "epsilon_u" in result.output
    result = runner.invoke(cli, ["report", "--latest", "1"])
    assert result.exit_code == 0, result.output
    assert "FT-DD-VS" in result.output
    assert (out / "activity.log").exists()
    assert (out / "runs.sqlite3").exists()


def test_cli_reports_bad_configuration(tmp_path, monkeypatch):
    monkeypatch.setenv("FTDDVS_OUTPUT_DIR", str(tmp_path))
    result = CliRunner().invoke(cli, ["offline", "--set", "mesh.nx=7"])
    assert result.exit_code != 0
    assert "even" in result.output


def test_cli_missing_artifact_is_a_clean_error(tmp_path, monkeypatch):
    monkeypatch.setenv("FTDDVS_OUTPUT_DIR", str(tmp_path))
    result = CliRunner().invoke(cli, ["online", "--set", "mesh.nx=6", "--set", "mesh.ny=6"])
    assert result.exit_code == 1
    assert "artifact not found" in result.output


def test_registry_latest(tmp_path):
    init_registry(tmp_path / "registry.sqlite3")
    RunLog.record("online", "heat", "aaa", path="/x/online", epsilon_u=1e-3)
    RunLog.record("offline", "heat", "aaa", path="/x")
    RunLog.record("online", "rd1", "bbb", path="/y/online", epsilon_u=2e-3)
    rows = RunLog.latest("online", 2)
    assert [r.config_hash for r in rows] == ["bbb", "aaa"]
    assert rows[0].epsilon_u == 2e-3
