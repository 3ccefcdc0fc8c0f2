#!/usr/bin/env python3
"""
Scenario Files
Sectioned key/value text with explicit units, validated into a frozen
Scenario model. Unknown keys and sections are rejected; missing keys are
reported with their dotted key path.
"""

import configparser
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
import structlog
from pydantic import (BaseModel, BeforeValidator, ConfigDict, NonNegativeFloat, PositiveFloat,
                      PositiveInt, ValidationError)
from pydantic_core import PydanticCustomError
from scipy.spatial.distance import pdist

from engine.leader import LeaderTrajectory
from utils.agent_interface import ControllerFactory
from utils.errors import ConfigurationError, ScenarioParseError, ScenarioValidationError, UnitError
from utils.plant import EARTH_MU, SpacecraftParams, SpacecraftPlant
from utils.potential import PotentialSpec
from utils.topology import build_graph, matrices, min_eig_sym
from utils.units import (DIMENSIONLESS, parse_quantity, parse_quantity_list, parse_vector,
                         parse_vector_list)

logger = structlog.get_logger(__name__)

PLOT_KINDS = ("trajectory_xy", "velocity_error")
VECTOR_KEYS = ("initial_position", "velocity", "drift", "amplitude", "phase")


def _units(parser, dimension: str):
    """Convert '<number> <unit>' text at validation time; SI numbers pass through"""
    def convert(value):
        if not isinstance(value, str):
            return value
        try:
            return parser(value, dimension)
        except UnitError as e:
            raise PydanticCustomError("unit_error", str(e))
    return BeforeValidator(convert)


def _words(value):
    if isinstance(value, str):
        return tuple(word.strip() for word in value.split(",") if word.strip())
    return value


PositiveLength = Annotated[PositiveFloat, _units(parse_quantity, "length")]
Time = Annotated[NonNegativeFloat, _units(parse_quantity, "time")]
PositiveTime = Annotated[PositiveFloat, _units(parse_quantity, "time")]
Force = Annotated[PositiveFloat, _units(parse_quantity, "force")]
GravParam = Annotated[PositiveFloat, _units(parse_quantity, "gravitational_parameter")]
Masses = Annotated[Tuple[PositiveFloat, ...], _units(parse_quantity_list, "mass")]
Estimates = Annotated[Tuple[float, ...], _units(parse_quantity_list, "mass")]
Times = Annotated[Tuple[float, ...], _units(parse_quantity_list, "time")]
PositionVector = Annotated[Tuple[float, ...], _units(parse_vector, "length")]
VelocityVector = Annotated[Tuple[float, ...], _units(parse_vector, "velocity")]
AngleVector = Annotated[Tuple[float, ...], _units(parse_vector, "angle")]
Positions = Annotated[Tuple[Tuple[float, ...], ...], _units(parse_vector_list, "length")]
Velocities = Annotated[Tuple[Tuple[float, ...], ...], _units(parse_vector_list, "velocity")]
AnglePerLength = Annotated[PositiveFloat, _units(parse_quantity, "angle_per_length")]
Gain = Annotated[NonNegativeFloat, _units(parse_quantity, DIMENSIONLESS)]
PositiveGain = Annotated[PositiveFloat, _units(parse_quantity, DIMENSIONLESS)]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class PlantSection(_Section):
    model: Literal["spacecraft"] = "spacecraft"
    masses: Masses
    orbit_radius: PositiveLength
    gravitational_parameter: GravParam = EARTH_MU
    initial_positions: Positions
    initial_velocities: Optional[Velocities] = None


class LeaderSection(_Section):
    kind: Literal["constant_velocity", "sinusoidal", "table"]
    initial_position: Optional[PositionVector] = None
    velocity: Optional[VelocityVector] = None
    drift: Optional[VelocityVector] = None
    amplitude: Optional[VelocityVector] = None
    period: Optional[PositiveTime] = None
    phase: Optional[AngleVector] = None
    knot_times: Optional[Times] = None
    knot_positions: Optional[Positions] = None


class PotentialSection(_Section):
    radius: PositiveLength
    minimum_distance: PositiveLength
    inner_scale: PositiveGain = 250.0
    barrier_scale: PositiveGain = 25.0
    cosine_rate: AnglePerLength = 0.1 * math.pi


class ControllerSection(_Section):
    kind: str
    gamma: Optional[Gain] = None
    alpha: Optional[Gain] = None
    gamma1: Optional[PositiveGain] = None
    gamma2: Optional[PositiveGain] = None
    adaptation_gain: Optional[PositiveGain] = None
    initial_estimate: Optional[Estimates] = None
    sign_mode: Optional[Literal["exact", "tanh"]] = None
    sign_sharpness: Optional[PositiveGain] = None
    gain_law: Optional[Literal["per_edge", "printed"]] = None
    gain_deadband: Optional[Gain] = None
    initial_alpha: Optional[Gain] = None
    initial_beta: Optional[Gain] = None
    alpha_bar: Optional[Gain] = None
    beta_bar: Optional[Gain] = None

    def gains(self) -> Dict[str, Any]:
        """Law gains as given in the scenario, None where the descriptor default applies"""
        return self.model_dump(exclude={"kind", "initial_estimate", "alpha_bar", "beta_bar"})


class IntegrationSection(_Section):
    dt: PositiveTime
    t_end: Time
    gradient_cap: Force = 1.0e3
    decimation: Annotated[PositiveInt, _units(parse_quantity, DIMENSIONLESS)] = 10


class OutputSection(_Section):
    name: str = "scenario"
    directory: str = "output"
    plots: Annotated[Tuple[Literal["trajectory_xy", "velocity_error"], ...], BeforeValidator(_words)] = PLOT_KINDS


@dataclass(frozen=True)
class GainReport:
    """Leader-acceleration bound against the discontinuous law's gain condition"""
    sigma_l: float
    lambda_min_h0: float
    threshold: float
    alpha: Optional[float] = None
    satisfied: Optional[bool] = None

    def as_dict(self) -> Dict[str, Any]:
        return {"sigma_l": self.sigma_l, "lambda_min_h0": self.lambda_min_h0,
                "threshold": self.threshold, "alpha": self.alpha, "satisfied": self.satisfied}


class Scenario(_Section):
    plant: PlantSection
    leader: LeaderSection
    potential: PotentialSection
    controller: ControllerSection
    integration: IntegrationSection
    output: OutputSection = OutputSection()

    @property
    def name(self) -> str:
        return self.output.name

    @property
    def n(self) -> int:
        return len(self.plant.masses)

    @property
    def p(self) -> int:
        return len(self.plant.initial_positions[0])

    @property
    def steps(self) -> int:
        return int(round(self.integration.t_end / self.integration.dt))

    def plants(self) -> List[SpacecraftPlant]:
        return [SpacecraftPlant(SpacecraftParams(mass=m, r_0=self.plant.orbit_radius,
                                                 mu_e=self.plant.gravitational_parameter))
                for m in self.plant.masses]

    def potential_spec(self) -> PotentialSpec:
        section = self.potential
        return PotentialSpec(R=section.radius, d_bar=section.minimum_distance,
                             inner_scale=section.inner_scale, barrier_scale=section.barrier_scale,
                             cosine_rate=section.cosine_rate)

    def leader_trajectory(self) -> LeaderTrajectory:
        section = self.leader
        start = section.initial_position
        if section.kind == "table":
            start = section.knot_positions[0]
        return LeaderTrajectory(kind=section.kind, initial_position=tuple(start),
                                t_end=self.integration.t_end,
                                velocity=section.velocity or (), drift=section.drift or (),
                                amplitude=section.amplitude or (), period=section.period or 0.0,
                                phase=section.phase or (), knot_times=section.knot_times or (),
                                knot_positions=section.knot_positions or ())

    def initial_positions(self) -> np.ndarray:
        return np.array(self.plant.initial_positions, dtype=float)

    def initial_velocities(self) -> np.ndarray:
        given = self.plant.initial_velocities
        if not given:
            return np.zeros((self.n, self.p))
        return np.broadcast_to(np.array(given, dtype=float), (self.n, self.p)).copy()

    def initial_estimates(self) -> np.ndarray:
        given = self.controller.initial_estimate or (0.0,)
        return np.broadcast_to(np.array(given, dtype=float), (self.n,)).reshape(self.n, 1).copy()

    def gain_report(self) -> GainReport:
        """sigma_l, lambda_min[H(0)] and the threshold max{sigma_l, sigma_l / sqrt(lambda_min)}"""
        trajectory = self.leader_trajectory()
        sigma_l = trajectory.sigma_l(self.n)
        q_0 = trajectory.state(0.0)[0]
        graph = build_graph(q_0, self.initial_positions(), self.potential.radius)
        lam = min_eig_sym(matrices(graph).H)
        if lam > 0:
            threshold = max(sigma_l, sigma_l / math.sqrt(lam))
        else:
            threshold = math.inf if sigma_l > 0 else 0.0
        if self.controller.kind != "varying_velocity":
            return GainReport(sigma_l=sigma_l, lambda_min_h0=lam, threshold=threshold)
        alpha = float(self.controller.alpha)
        return GainReport(sigma_l=sigma_l, lambda_min_h0=lam, threshold=threshold,
                          alpha=alpha, satisfied=alpha > threshold)


def _fail(message: str, key_path: str):
    raise ScenarioValidationError(message, key_path)


def _check_consistency(scenario: Scenario) -> Scenario:
    """Cross-field rules that single fields cannot express"""
    plant, leader, n = scenario.plant, scenario.leader, scenario.n

    positions = plant.initial_positions
    if len(positions) != n:
        _fail(f"expected {n} positions (one per mass), got {len(positions)}", "plant.initial_positions")
    if any(len(q) != 3 for q in positions):
        _fail("spacecraft positions have three components", "plant.initial_positions")
    if plant.initial_velocities and len(plant.initial_velocities) not in (1, n):
        _fail(f"expected 1 or {n} velocities", "plant.initial_velocities")
    if plant.initial_velocities and any(len(v) != 3 for v in plant.initial_velocities):
        _fail("spacecraft velocities have three components", "plant.initial_velocities")

    required = {"constant_velocity": ("initial_position", "velocity"),
                "sinusoidal": ("initial_position", "drift", "amplitude", "period", "phase"),
                "table": ("knot_times", "knot_positions")}[leader.kind]
    for key in required:
        value = getattr(leader, key)
        if value is None:
            _fail(f"required for a {leader.kind} leader", f"leader.{key}")
        if key in VECTOR_KEYS and len(value) != 3:
            _fail("expected three components", f"leader.{key}")

    if scenario.potential.minimum_distance >= scenario.potential.radius:
        _fail("must be smaller than the sensing radius", "potential.minimum_distance")

    dt, t_end = scenario.integration.dt, scenario.integration.t_end
    if 0.0 < t_end < dt:
        _fail(f"must be 0 or at least dt={dt} s", "integration.t_end")

    estimate = scenario.controller.initial_estimate
    if estimate is not None and len(estimate) not in (1, n):
        _fail(f"expected 1 or {n} values", "controller.initial_estimate")

    try:
        trajectory = scenario.leader_trajectory()
    except ConfigurationError as e:
        _fail(str(e), "leader.knot_times" if leader.kind == "table" else "leader.kind")
    stacked = np.vstack([trajectory.state(0.0)[0], np.array(positions, dtype=float)])
    if np.min(pdist(stacked)) <= 0.0:
        _fail("agents must start at distinct positions", "plant.initial_positions")

    try:
        descriptor = ControllerFactory.descriptor(scenario.controller.kind)
    except ConfigurationError as e:
        _fail(str(e), "controller.kind")
    given = scenario.controller.model_dump()
    filled = {key: value for key, value in descriptor.gains.items()
              if key in given and given[key] is None}
    if filled:
        scenario = scenario.model_copy(
            update={"controller": scenario.controller.model_copy(update=filled)})
    return scenario


def scenario_from_dict(data: Dict[str, Any]) -> Scenario:
    """Validate a nested section -> key -> value mapping (text with units or SI numbers)"""
    try:
        scenario = Scenario.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        key_path = ".".join(str(part) for part in first["loc"])
        if first["type"] == "unit_error":
            raise UnitError(first["msg"], key_path) from None
        raise ScenarioValidationError(first["msg"], key_path) from None
    scenario = _check_consistency(scenario)

    report = scenario.gain_report()
    if report.satisfied is False:
        logger.warning("gain condition not met", scenario=scenario.name, alpha=report.alpha,
                       threshold=report.threshold, sigma_l=report.sigma_l,
                       lambda_min_h0=report.lambda_min_h0)
    return scenario


def parse_scenario(path: Union[str, Path]) -> Scenario:
    """Read and validate a scenario file"""
    path = Path(path)
    parser = configparser.ConfigParser(interpolation=None, strict=True, comment_prefixes=("#",),
                                       inline_comment_prefixes=None, empty_lines_in_values=False,
                                       default_section="\x00")
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ScenarioParseError(f"cannot read scenario: {e.strerror or e}", str(path)) from e
    try:
        parser.read_string(text, source=str(path))
    except configparser.MissingSectionHeaderError as e:
        raise ScenarioParseError("key outside of any section", str(path), e.lineno) from e
    except configparser.ParsingError as e:
        line = e.errors[0][0] if e.errors else None
        raise ScenarioParseError("line is neither a section header nor key = value", str(path), line) from e
    except configparser.Error as e:
        raise ScenarioParseError(e.message.splitlines()[0], str(path), getattr(e, "lineno", None)) from e

    data: Dict[str, Dict[str, Any]] = {name: dict(parser.items(name)) for name in parser.sections()}
    output = data.setdefault("output", {})
    output.setdefault("name", path.stem)
    output.setdefault("directory", os.environ.get("FLOCKSIM_OUTPUT_DIR", "output"))

    scenario = scenario_from_dict(data)
    logger.info("scenario loaded", path=str(path), name=scenario.name, n=scenario.n,
                controller=scenario.controller.kind, steps=scenario.steps)
    return scenario
