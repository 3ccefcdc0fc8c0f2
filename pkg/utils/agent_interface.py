#!/usr/bin/env python3
"""
Controller Interface
Defines the standard interface for all follower control laws
"""

import importlib.util
import json
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Type, Union

import numpy as np
import structlog

from utils.errors import ConfigurationError

logger = structlog.get_logger(__name__)

AGENTS_DIR = Path(__file__).resolve().parent.parent / "agents"

Regressor = Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray], np.ndarray]


@dataclass
class ControllerConfig:
    """Standard control law descriptor structure"""
    agent_id: str
    name: str
    version: str
    description: str
    capabilities: List[str]
    gains: Dict[str, Any]

    @classmethod
    def from_file(cls, config_path: Union[str, Path]) -> 'ControllerConfig':
        """Load control law descriptor from JSON file"""
        with open(config_path, 'r', encoding='utf-8') as f:
            data = json.load(f)

        try:
            return cls(
                agent_id=data['agent_id'],
                name=data['name'],
                version=data['version'],
                description=data['description'],
                capabilities=data['capabilities'],
                gains=data['gains']
            )
        except KeyError as e:
            raise ConfigurationError(f"descriptor {config_path} lacks key {e}") from e


@dataclass(frozen=True)
class SignMode:
    kind: str = "tanh"
    sharpness: float = 1000.0

    def __post_init__(self):
        if self.kind not in ("exact", "tanh"):
            raise ConfigurationError(f"unknown sign mode '{self.kind}'")
        if self.kind == "tanh" and not self.sharpness > 0:
            raise ConfigurationError(f"tanh sharpness must be positive, got {self.sharpness}")


@dataclass(frozen=True)
class NeighborMeasurement:
    """What follower i senses about one neighbor j in its proximity set"""
    label: int
    rel_position: np.ndarray  # q_i - q_j
    rel_velocity: np.ndarray  # q'_i - q'_j
    is_leader: bool = False


@dataclass
class ControllerState:
    v: np.ndarray
    theta_hat: np.ndarray
    alpha: np.ndarray  # alpha[j] is the gain on neighbor label j, leader at 0
    beta: float = 0.0


@dataclass
class ControlOutput:
    u: np.ndarray
    v_dot: np.ndarray
    theta_hat_dot: np.ndarray
    alpha_dot: np.ndarray
    beta_dot: float = 0.0
    u_hat: Optional[np.ndarray] = field(default=None, compare=False)


def sgn_smooth(x, mode: SignMode) -> np.ndarray:
    """Componentwise signum, or tanh(k x) in smoothed mode"""
    x = np.asarray(x, dtype=float)
    if mode.kind == "exact":
        return np.sign(x)
    return np.tanh(mode.sharpness * x)


def aux_vars(qd_i, v_i) -> np.ndarray:
    """Sliding variable s_i = q'_i - v_i"""
    return np.asarray(qd_i, dtype=float) - np.asarray(v_i, dtype=float)


def tracking_errors(q_i, v_i, q_0, qd_0) -> Tuple[np.ndarray, np.ndarray]:
    """(q~_i, v~_i) relative to the leader"""
    return (np.asarray(q_i, dtype=float) - np.asarray(q_0, dtype=float),
            np.asarray(v_i, dtype=float) - np.asarray(qd_0, dtype=float))


class BaseController(ABC):
    """Abstract base class for all follower control laws"""

    # set by laws whose gain update needs q'_0 at every follower
    needs_leader_velocity = False

    def __init__(self, config: Dict[str, Any]):
        self.config = config
        self.gains: Dict[str, Any] = dict(config.get('gains', {}))
        self.logger = structlog.get_logger(f"controller.{config.get('agent_id', 'unknown')}")
        self.sign_mode = SignMode(self.gains.get('sign_mode', 'tanh'),
                                  float(self.gains.get('sign_sharpness', 1000.0)))

    def adaptation_matrix(self, p_theta: int) -> np.ndarray:
        """Gamma_i, either a scalar times I or a full p_theta x p_theta matrix"""
        gain = np.asarray(self.gains['adaptation_gain'], dtype=float)
        if gain.ndim == 0:
            return float(gain) * np.eye(p_theta)
        if gain.shape != (p_theta, p_theta):
            raise ConfigurationError(f"adaptation gain must be {p_theta}x{p_theta}, got {gain.shape}")
        return gain

    @abstractmethod
    def compute(self, q_i: np.ndarray, qd_i: np.ndarray, state: ControllerState,
                measurements: Sequence[NeighborMeasurement], gradients: Sequence[np.ndarray],
                regressor: Regressor, leader_velocity: Optional[np.ndarray] = None) -> ControlOutput:
        """Evaluate the law from own state and one-hop measurements only"""

    def finish(self, q_i, qd_i, state: ControllerState, u_hat: np.ndarray, v_dot: np.ndarray,
               regressor: Regressor, alpha_dot: Optional[np.ndarray] = None,
               beta_dot: float = 0.0) -> ControlOutput:
        """u_i = u^_i + Y(q, q', v'_i, v_i) theta^_i and theta^'_i = -Gamma Y^T s_i"""
        Y = np.asarray(regressor(q_i, qd_i, v_dot, state.v), dtype=float)
        s = aux_vars(qd_i, state.v)
        gamma_matrix = self.adaptation_matrix(state.theta_hat.shape[0])
        return ControlOutput(
            u=u_hat + Y @ state.theta_hat,
            v_dot=v_dot,
            theta_hat_dot=-gamma_matrix @ (Y.T @ s),
            alpha_dot=np.zeros_like(state.alpha) if alpha_dot is None else alpha_dot,
            beta_dot=beta_dot,
            u_hat=u_hat,
        )

    @staticmethod
    def gradient_sum(gradients: Sequence[np.ndarray], p: int) -> np.ndarray:
        total = np.zeros(p)
        for g in gradients:
            total += g
        return total


class ControllerFactory:
    """Discovers control laws under agents/ and creates instances"""

    _registry: Dict[str, Dict[str, Any]] = {}
    _lock = threading.RLock()
    _loaded = False

    @classmethod
    def load_laws(cls, agents_dir: Union[str, Path] = AGENTS_DIR) -> Dict[str, Dict[str, Any]]:
        with cls._lock:
            cls._loaded = True
            return cls._load_laws(Path(agents_dir))

    @classmethod
    def _load_laws(cls, agents_root: Path) -> Dict[str, Dict[str, Any]]:
        for folder in sorted(agents_root.iterdir()):
            if not folder.is_dir():
                continue
            agent_id = folder.name
            py_file = folder / f"{agent_id}.py"
            json_file = folder / f"{agent_id}.json"
            if not py_file.exists() or agent_id in cls._registry:
                continue
            try:
                spec = importlib.util.spec_from_file_location(agent_id, py_file)
                module = importlib.util.module_from_spec(spec)
                spec.loader.exec_module(module)

                # class name is the CamelCase folder name
                class_name = ''.join(word.capitalize() for word in agent_id.split('_'))
                law_class = getattr(module, class_name, None)

                if law_class and issubclass(law_class, BaseController):
                    config = ControllerConfig.from_file(json_file) if json_file.exists() else None
                    cls._registry[agent_id] = {"class": law_class, "config": config}
                    logger.debug("loaded control law", agent_id=agent_id, version=config.version if config else None)
                else:
                    logger.warning(f"⚠️ Control law class {class_name} not found in {agent_id}")
            except Exception as e:
                logger.warning(f"⚠️ Failed to load {agent_id}: {e}")
        return cls._registry

    @classmethod
    def available(cls) -> List[str]:
        with cls._lock:
            if not cls._loaded:
                cls.load_laws()
        return sorted(cls._registry)

    @classmethod
    def descriptor(cls, agent_id: str) -> ControllerConfig:
        if agent_id not in cls.available():
            raise ConfigurationError(f"unknown controller kind '{agent_id}', expected one of {cls.available()}")
        return cls._registry[agent_id]["config"]

    @classmethod
    def create(cls, agent_id: str, overrides: Optional[Dict[str, Any]] = None) -> BaseController:
        """Instance of a control law, descriptor gains updated with the given overrides"""
        descriptor = cls.descriptor(agent_id)
        gains = dict(descriptor.gains)
        gains.update({k: v for k, v in (overrides or {}).items() if v is not None})
        config = {"agent_id": agent_id, "version": descriptor.version, "gains": gains}
        return cls._registry[agent_id]["class"](config)

    @classmethod
    def register(cls, agent_id: str, law_class: Type[BaseController], config: ControllerConfig):
        cls._registry[agent_id] = {"class": law_class, "config": config}
