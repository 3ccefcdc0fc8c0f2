#!/usr/bin/env python3
"""
Tests for the run pipeline: stages, run state, manifests and batches
"""

import logging

import pytest

from engine.orchestrator import PipelineConfig, SimulationPipeline, configure_logging
from utils.file_manager import FileManager


@pytest.fixture
def pipeline(tmp_path):
    return SimulationPipeline(PipelineConfig(output_dir=str(tmp_path / "out")))


@pytest.mark.asyncio
async def test_successful_run_writes_every_artifact(pipeline, write_scenario, tmp_path):
    plots = {"output": {"plots": "trajectory_xy, velocity_error"}}
    outcome = await pipeline.run_scenario(write_scenario(overrides=plots))
    assert outcome.success, outcome.error
    assert outcome.exit_code == 0
    assert outcome.name == "small"
    assert [stage.stage_id for stage in outcome.stages] == ["parse", "simulate", "diagnostics", "csv",
                                                           "manifest", "plots"]
    out = tmp_path / "out"
    for name in ("small.csv", "small.meta.json", "small.trajectory_xy.svg", "small.velocity_error.svg"):
        assert (out / name).is_file(), name
    assert str(out / "small.csv") in outcome.artifacts()
    assert outcome.summary["edges_lost"] == 0

    state = FileManager().read_json(out / "run_state.json")
    entry = state[outcome.run_id]
    assert entry["status"] == "completed"
    assert entry["name"] == "small"
    assert set(entry["stages"]) == {"parse", "simulate", "diagnostics", "csv", "manifest", "plots"}
    assert all(stage["status"] == "success" for stage in entry["stages"].values())


@pytest.mark.asyncio
async def test_manifest_records_the_csv_hash(pipeline, write_scenario, tmp_path):
    outcome = await pipeline.run_scenario(write_scenario())
    assert outcome.success, outcome.error
    files = FileManager(tmp_path / "out")
    manifest = files.read_json("small.meta.json")
    assert manifest["csv"] == {"file": "small.csv", "sha256": files.calculate_file_hash("small.csv"), "rows": 21}
    assert manifest["initial_edges"] == [[0, 1], [0, 2], [1, 2]]
    assert manifest["controller"] == "const_velocity"
    assert set(manifest["gain_report"]) == {"sigma_l", "lambda_min_h0", "threshold", "alpha", "satisfied"}
    assert manifest["diagnostics"]["edges_lost"] == 0


@pytest.mark.asyncio
async def test_invalid_scenario_stops_at_parse(pipeline, write_scenario, tmp_path):
    outcome = await pipeline.run_scenario(write_scenario(overrides={"integration": {"dt": "0 s"}}))
    assert not outcome.success
    assert outcome.exit_code == 4
    assert [stage.stage_id for stage in outcome.stages] == ["parse"]
    assert "integration.dt" in outcome.stages[0].message
    assert outcome.artifacts() == []
    state = FileManager().read_json(tmp_path / "out" / "run_state.json")
    assert state[outcome.run_id]["status"] == "failed"
    assert state[outcome.run_id]["stages"]["parse"]["status"] == "failed"


@pytest.mark.asyncio
async def test_plots_can_be_skipped(write_scenario, tmp_path):
    pipeline = SimulationPipeline(PipelineConfig(output_dir=str(tmp_path / "out"), write_plots=False))
    outcome = await pipeline.run_scenario(write_scenario(overrides={"output": {"plots": "trajectory_xy"}}))
    assert outcome.success
    assert outcome.stages[-1].stage_id == "manifest"
    assert not list((tmp_path / "out").glob("*.svg"))


@pytest.mark.asyncio
async def test_batch_runs_each_scenario(pipeline, write_scenario, tmp_path):
    first = write_scenario(name="first.cfg", overrides={"output": {"name": "first"}})
    second = write_scenario(name="second.cfg", overrides={"output": {"name": "second"}})
    broken = write_scenario(name="broken.cfg", text="[plant\nmasses = 1 kg\n")
    outcomes = await pipeline.run_batch([first, second, broken])
    assert [outcome.success for outcome in outcomes] == [True, True, False]
    assert outcomes[2].exit_code == 3
    assert {outcome.name for outcome in outcomes[:2]} == {"first", "second"}
    state = FileManager().read_json(tmp_path / "out" / "run_state.json")
    assert {state[o.run_id]["status"] for o in outcomes} == {"completed", "failed"}


@pytest.mark.asyncio
async def test_previous_state_is_kept(write_scenario, tmp_path):
    config = PipelineConfig(output_dir=str(tmp_path / "out"))
    first = await SimulationPipeline(config).run_scenario(write_scenario())
    reloaded = SimulationPipeline(config)
    assert reloaded.run_state[first.run_id]["status"] == "completed"


def test_unreadable_state_is_ignored(tmp_path):
    (tmp_path / "run_state.json").write_text("{broken", encoding="utf-8")
    assert SimulationPipeline(PipelineConfig(output_dir=str(tmp_path))).run_state == {}


def test_state_path_defaults(monkeypatch, tmp_path):
    monkeypatch.setenv("FLOCKSIM_OUTPUT_DIR", str(tmp_path / "env"))
    assert PipelineConfig().state_path() == tmp_path / "env" / "run_state.json"
    assert PipelineConfig(output_dir="elsewhere").state_path().as_posix() == "elsewhere/run_state.json"


def test_log_level_from_environment(monkeypatch):
    monkeypatch.setenv("FLOCKSIM_LOG_LEVEL", "warning")
    assert configure_logging() == "WARNING"
    assert logging.getLogger().level == logging.WARNING
    assert configure_logging("debug") == "DEBUG"
