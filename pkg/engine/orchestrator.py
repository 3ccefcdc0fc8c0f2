#!/usr/bin/env python3
"""
Run Pipeline
Drives one scenario through parse -> simulate -> diagnostics -> csv ->
manifest -> plots, and several scenarios side by side on worker threads.
Every stage reports a StageResult instead of raising.
"""

import asyncio
import logging
import os
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Union
from uuid import uuid4

import structlog
from dotenv import load_dotenv

from engine.diagnostics import Diagnostics, diagnostics
from engine.scenario import Scenario, parse_scenario
from engine.simulator import SimLog, Simulator
from utils.errors import FlockingError
from utils.file_manager import SimLogFileManager, manifest_path
from utils.plotter import emit_plot, plot_data_from_log

logger = structlog.get_logger("orchestrator")

STAGES = ("parse", "simulate", "diagnostics", "csv", "manifest", "plots")


def configure_logging(level: Optional[str] = None) -> str:
    """Route structlog through stdlib logging on stderr; level from the argument or FLOCKSIM_LOG_LEVEL"""
    load_dotenv()
    level = (level or os.environ.get("FLOCKSIM_LOG_LEVEL") or "INFO").upper()
    logging.basicConfig(level=level, format="%(message)s", stream=sys.stderr, force=True)
    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.dev.ConsoleRenderer(colors=sys.stderr.isatty()),
        ],
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )
    return level


# --- Data Classes ---

@dataclass
class PipelineConfig:
    output_dir: Optional[str] = None     # overrides [output] directory of every scenario
    state_file: str = "run_state.json"
    write_plots: bool = True

    def state_path(self) -> Path:
        root = self.output_dir or os.environ.get("FLOCKSIM_OUTPUT_DIR", "output")
        return Path(root) / self.state_file


@dataclass
class StageResult:
    stage_id: str
    success: bool
    output_file: Optional[str] = None
    message: Optional[str] = None
    error: Optional[BaseException] = None
    payload: Any = field(default=None, repr=False)


@dataclass
class RunOutcome:
    scenario_path: str
    run_id: str
    stages: List[StageResult] = field(default_factory=list)
    name: Optional[str] = None
    summary: Dict[str, Any] = field(default_factory=dict)
    gain_report: Dict[str, Any] = field(default_factory=dict)

    @property
    def success(self) -> bool:
        return bool(self.stages) and all(stage.success for stage in self.stages)

    @property
    def error(self) -> Optional[BaseException]:
        return next((stage.error for stage in self.stages if not stage.success), None)

    @property
    def exit_code(self) -> int:
        if self.success:
            return 0
        return getattr(self.error, "exit_code", 1)

    def artifacts(self) -> List[str]:
        return [stage.output_file for stage in self.stages if stage.success and stage.output_file
                and stage.stage_id in ("csv", "manifest", "plots")]


def build_manifest(scenario: Scenario, log: SimLog, diag: Diagnostics, csv_file: Path,
                   csv_sha256: str) -> Dict[str, Any]:
    """Run metadata written next to the CSV; carries no wall-clock data so reruns stay identical"""
    return {
        "name": scenario.name,
        "n": scenario.n,
        "p": scenario.p,
        "controller": scenario.controller.kind,
        "dt": scenario.integration.dt,
        "t_end": scenario.integration.t_end,
        "R": scenario.potential.radius,
        "d_bar": scenario.potential.minimum_distance,
        "initial_edges": sorted(log.initial_graph.edge_set()),
        "edge_events": [{"t": e.t, "step": e.step, "kind": e.kind, "edge": list(e.edge)}
                        for e in log.edge_events],
        "diagnostics": diag.summary(),
        "gain_report": scenario.gain_report().as_dict(),
        "csv": {"file": csv_file.name, "sha256": csv_sha256, "rows": log.samples},
    }


# --- Orchestrator ---

class SimulationPipeline:
    def __init__(self, config: Optional[PipelineConfig] = None):
        self.config = config or PipelineConfig()
        self.run_state: Dict[str, Any] = {}
        self.load_previous_state()

    def load_previous_state(self):
        state_path = self.config.state_path()
        try:
            self.run_state = SimLogFileManager().read_json(state_path) if state_path.exists() else {}
        except FlockingError as e:
            logger.warning(f"⚠️ Ignoring unreadable run state: {e}")
            self.run_state = {}

    def save_state(self):
        SimLogFileManager().write_json(self.config.state_path(), self.run_state)

    def generate_run_id(self) -> str:
        return f"run_{uuid4().hex[:8]}"

    def output_directory(self, scenario: Scenario) -> Path:
        return Path(self.config.output_dir or scenario.output.directory)

    async def run_stage(self, run_id: str, stage_id: str, func: Callable, *args,
                        output_file: Optional[str] = None) -> StageResult:
        logger.debug(f"🚀 Running stage: {stage_id}", run_id=run_id)
        started = time.perf_counter()
        try:
            value = await asyncio.to_thread(func, *args)
        except FlockingError as e:
            logger.error(f"❌ Stage {stage_id} failed: {e}", run_id=run_id, exit_code=e.exit_code)
            result = StageResult(stage_id, False, message=str(e), error=e)
        except Exception as e:
            logger.exception(f"❌ Unexpected error in {stage_id}: {e}", run_id=run_id)
            result = StageResult(stage_id, False, message=f"{type(e).__name__}: {e}", error=e)
        else:
            if isinstance(value, (str, Path)) and output_file is None:
                output_file = str(value)
            result = StageResult(stage_id, True, output_file=output_file, message="Completed", payload=value)

        self.run_state[run_id]["stages"][stage_id] = {
            "status": "success" if result.success else "failed",
            "output_file": result.output_file,
            "message": result.message,
            "seconds": round(time.perf_counter() - started, 3),
            "timestamp": datetime.now().isoformat(),
        }
        self.save_state()
        return result

    async def run_scenario(self, scenario_path: Union[str, Path]) -> RunOutcome:
        run_id = self.generate_run_id()
        outcome = RunOutcome(scenario_path=str(scenario_path), run_id=run_id)
        logger.info(f"🚀 Running scenario: {scenario_path}", run_id=run_id)
        self.run_state[run_id] = {
            "scenario_file": str(scenario_path),
            "start_time": datetime.now().isoformat(),
            "status": "running",
            "stages": {},
        }
        self.save_state()

        result = await self.run_stage(run_id, "parse", parse_scenario, scenario_path, output_file=str(scenario_path))
        outcome.stages.append(result)
        if result.success:
            await self._run_parsed(run_id, result.payload, outcome)

        status = "completed" if outcome.success else "failed"
        self.run_state[run_id].update({"status": status, "end_time": datetime.now().isoformat()})
        self.save_state()
        if outcome.success:
            logger.info(f"✅ Run completed: {outcome.name}", run_id=run_id, artifacts=outcome.artifacts())
        else:
            failed = outcome.stages[-1].stage_id
            logger.error(f"🛑 Run halted at {failed}", run_id=run_id, exit_code=outcome.exit_code)
        return outcome

    async def _run_parsed(self, run_id: str, scenario: Scenario, outcome: RunOutcome):
        outcome.name = scenario.name
        outcome.gain_report = scenario.gain_report().as_dict()
        self.run_state[run_id]["name"] = scenario.name
        out_dir = self.output_directory(scenario)
        files = SimLogFileManager(out_dir)
        csv_name = f"{scenario.name}.csv"
        csv_file = files.resolve(csv_name)
        logger.info(f"📋 Scenario {scenario.name}", run_id=run_id, n=scenario.n,
                    controller=scenario.controller.kind, steps=scenario.steps, output=str(out_dir))

        result = await self.run_stage(run_id, "simulate", lambda: Simulator(scenario).run())
        outcome.stages.append(result)
        if not result.success:
            return
        log: SimLog = result.payload

        result = await self.run_stage(run_id, "diagnostics", diagnostics, log, scenario)
        outcome.stages.append(result)
        if not result.success:
            return
        diag: Diagnostics = result.payload
        outcome.summary = diag.summary()

        result = await self.run_stage(run_id, "csv", files.emit_csv, log, csv_name, diag)
        outcome.stages.append(result)
        if not result.success:
            return

        def write_manifest() -> Path:
            manifest = build_manifest(scenario, log, diag, csv_file, files.calculate_file_hash(csv_name))
            return files.write_manifest(manifest_path(csv_name), manifest)

        result = await self.run_stage(run_id, "manifest", write_manifest)
        outcome.stages.append(result)
        if not result.success or not self.config.write_plots:
            return

        def write_plots() -> str:
            data = plot_data_from_log(log)
            written = [emit_plot(data, files.resolve(f"{scenario.name}.{kind}.svg"), kind)
                       for kind in scenario.output.plots]
            return ", ".join(str(path) for path in written)

        outcome.stages.append(await self.run_stage(run_id, "plots", write_plots))

    async def run_batch(self, scenario_paths: List[Union[str, Path]]) -> List[RunOutcome]:
        """Independent scenarios run concurrently; each writes only under its own name"""
        logger.info(f"🔁 Starting batch of {len(scenario_paths)} scenario(s)")
        outcomes = await asyncio.gather(*(self.run_scenario(path) for path in scenario_paths))
        failed = sum(1 for outcome in outcomes if not outcome.success)
        if failed:
            logger.warning(f"⚠️ {failed} of {len(outcomes)} scenario(s) failed")
        else:
            logger.info(f"✅ Batch completed: {len(outcomes)} scenario(s)")
        return list(outcomes)


# --- Entry Point ---

def main(scenario_paths: List[str], output_dir: Optional[str] = None) -> List[RunOutcome]:
    configure_logging()
    pipeline = SimulationPipeline(PipelineConfig(output_dir=output_dir))
    return asyncio.run(pipeline.run_batch(scenario_paths))


if __name__ == "__main__":
    outcomes = main(sys.argv[1:] or ["input/case1.cfg"])
    sys.exit(max((outcome.exit_code for outcome in outcomes), default=0))
