#!/usr/bin/env python3
"""
Euler-Lagrange Plant Models
M(q) q'' + C(q, q') q' + g(q) = u, with a linear parameterization
M x + C y + g = Y(q, q', x, y) theta used by the adaptive laws
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from utils.errors import ConfigurationError, SingularityError

EARTH_MU = 3.986004418e14  # m^3/s^2


class PlantModel(ABC):
    """Abstract Euler-Lagrange agent; theta_true is simulation ground truth only"""

    p: int
    p_theta: int

    def __init__(self, theta_true):
        self._theta_true = np.array(theta_true, dtype=float).reshape(-1)
        self._theta_true.setflags(write=False)

    @property
    def theta_true(self) -> np.ndarray:
        return self._theta_true

    @abstractmethod
    def mass_matrix(self, q) -> np.ndarray:
        pass

    @abstractmethod
    def coriolis(self, q, qd) -> np.ndarray:
        pass

    @abstractmethod
    def gravity(self, q) -> np.ndarray:
        pass

    @abstractmethod
    def regressor(self, q, qd, x, y) -> np.ndarray:
        pass

    @abstractmethod
    def mass_bounds(self) -> Tuple[float, float]:
        """(k_M_lower, k_M_upper) of property P1"""

    def lhs(self, q, qd, x, y) -> np.ndarray:
        """M(q) x + C(q, qd) y + g(q)"""
        return self.mass_matrix(q) @ x + self.coriolis(q, qd) @ y + self.gravity(q)

    def accel(self, q, qd, u) -> np.ndarray:
        """q'' = M^-1 (u - C q' - g)"""
        rhs = np.asarray(u, dtype=float) - self.coriolis(q, qd) @ qd - self.gravity(q)
        return np.linalg.solve(self.mass_matrix(q), rhs)


@dataclass(frozen=True)
class SpacecraftParams:
    mass: float
    r_0: float
    mu_e: float = EARTH_MU

    def __post_init__(self):
        if self.mass <= 0:
            raise ConfigurationError(f"spacecraft mass must be positive, got {self.mass}")
        if self.r_0 <= 0:
            raise ConfigurationError(f"orbit radius must be positive, got {self.r_0}")
        if self.mu_e <= 0:
            raise ConfigurationError(f"gravitational parameter must be positive, got {self.mu_e}")

    @property
    def n_0(self) -> float:
        """Reference-orbit angular velocity"""
        return float(np.sqrt(self.mu_e / self.r_0 ** 3))


class SpacecraftPlant(PlantModel):
    """
    Relative translation of a spacecraft in the LVLH frame of a circular
    reference orbit. The unknown parameter is the mass (p_theta = 1).
    """

    p = 3
    p_theta = 1

    def __init__(self, params: SpacecraftParams):
        super().__init__([params.mass])
        self.params = params
        n_0 = params.n_0
        self._unit_coriolis = np.array([[0.0, -2.0 * n_0, 0.0],
                                        [2.0 * n_0, 0.0, 0.0],
                                        [0.0, 0.0, 0.0]])
        self._unit_coriolis.setflags(write=False)

    def mass_matrix(self, q=None) -> np.ndarray:
        return self.params.mass * np.eye(3)

    def coriolis(self, q=None, qd=None) -> np.ndarray:
        return self.params.mass * self._unit_coriolis

    def unit_gravity(self, q) -> np.ndarray:
        """Gravity per unit mass"""
        x, y, z = np.asarray(q, dtype=float)
        r_0, mu_e = self.params.r_0, self.params.mu_e
        n_0_sq = mu_e / r_0 ** 3
        r_i = np.sqrt((r_0 + x) ** 2 + y ** 2 + z ** 2)
        if r_i == 0.0:
            raise SingularityError(f"gravity singular at q={tuple(float(c) for c in (x, y, z))}")
        r_cubed = r_i ** 3
        return np.array([
            -n_0_sq * x + mu_e * (r_0 + x) / r_cubed - mu_e / r_0 ** 2,
            -n_0_sq * y + mu_e * y / r_cubed,
            mu_e * z / r_cubed,
        ])

    def gravity(self, q) -> np.ndarray:
        return self.params.mass * self.unit_gravity(q)

    def regressor(self, q, qd, x, y) -> np.ndarray:
        """Y = x + (C/m) y + g/m, a 3x1 matrix"""
        column = np.asarray(x, dtype=float) + self._unit_coriolis @ np.asarray(y, dtype=float) \
            + self.unit_gravity(q)
        return column.reshape(3, 1)

    def mass_bounds(self) -> Tuple[float, float]:
        return self.params.mass, self.params.mass

    def accel(self, q, qd, u) -> np.ndarray:
        # M = m I, so the solve reduces to a division
        qd = np.asarray(qd, dtype=float)
        return np.asarray(u, dtype=float) / self.params.mass - self._unit_coriolis @ qd - self.unit_gravity(q)


def envelope_bounds(plant: PlantModel, radius: float, samples: int = 1000, seed: int = 7) -> Tuple[float, float]:
    """
    Sampled (k_C, k_g) of P1 over the ball |q| <= radius and |q'| <= 1.
    The gravity bound is only meaningful over such an operating envelope.
    """
    rng = np.random.default_rng(seed)
    k_c, k_g = 0.0, 0.0
    for _ in range(samples):
        q = rng.uniform(-1.0, 1.0, plant.p)
        q *= radius * rng.uniform() / max(np.linalg.norm(q), 1e-12)
        qd = rng.normal(size=plant.p)
        qd /= max(np.linalg.norm(qd), 1e-12)
        k_c = max(k_c, float(np.linalg.norm(plant.coriolis(q, qd) @ qd)))
        k_g = max(k_g, float(np.linalg.norm(plant.gravity(q))))
    return k_c, k_g
