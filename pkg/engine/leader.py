#!/usr/bin/env python3
"""
Leader Trajectories
Constant velocity, sinusoidal velocity and knot tables, each evaluated
analytically together with the acceleration bound sigma_l.
"""

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from utils.errors import ConfigurationError, ContractViolation

KINDS = ("constant_velocity", "sinusoidal", "table")

LeaderState = Tuple[np.ndarray, np.ndarray, np.ndarray]


@dataclass(frozen=True)
class LeaderTrajectory:
    """
    constant_velocity: q_0(t) = q_0(0) + velocity t
    sinusoidal:        q'_0(t)_k = drift_k + amplitude_k sin(omega t + phase_k)
    table:             clamped cubic spline through (knot_times, knot_positions)
    """
    kind: str
    initial_position: Tuple[float, ...]
    t_end: float
    velocity: Tuple[float, ...] = ()
    drift: Tuple[float, ...] = ()
    amplitude: Tuple[float, ...] = ()
    period: float = 0.0
    phase: Tuple[float, ...] = ()
    knot_times: Tuple[float, ...] = ()
    knot_positions: Tuple[Tuple[float, ...], ...] = ()
    _spline: Optional[CubicSpline] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        p = len(self.initial_position)
        if self.kind not in KINDS:
            raise ConfigurationError(f"leader kind must be one of {KINDS}, got '{self.kind}'")
        if self.t_end < 0:
            raise ConfigurationError(f"leader horizon must be nonnegative, got {self.t_end}")
        if self.kind == "constant_velocity" and len(self.velocity) != p:
            raise ConfigurationError(f"leader velocity needs {p} components")
        if self.kind == "sinusoidal":
            for name in ("drift", "amplitude", "phase"):
                if len(getattr(self, name)) != p:
                    raise ConfigurationError(f"leader {name} needs {p} components")
            if not self.period > 0:
                raise ConfigurationError(f"leader period must be positive, got {self.period}")
        if self.kind == "table":
            times = np.asarray(self.knot_times, dtype=float)
            knots = np.asarray(self.knot_positions, dtype=float)
            if times.size < 2 or knots.shape != (times.size, p):
                raise ConfigurationError("leader table needs at least two knots with one position each")
            if np.any(np.diff(times) <= 0):
                raise ConfigurationError("leader knot times must be strictly increasing")
            if times[0] > 0.0 or times[-1] < self.t_end:
                raise ConfigurationError(f"leader knots must cover [0, {self.t_end}] s")
            object.__setattr__(self, "_spline", CubicSpline(times, knots, bc_type="clamped"))

    @property
    def p(self) -> int:
        return len(self.initial_position)

    @property
    def omega(self) -> float:
        return 2.0 * math.pi / self.period

    def state(self, t: float) -> LeaderState:
        """(q_0, q'_0, q''_0) at time t"""
        slack = 1e-9 * max(1.0, self.t_end)
        if t < -slack or t > self.t_end + slack:
            raise ContractViolation(f"t={t} s outside the leader horizon [0, {self.t_end}] s")
        q_start = np.asarray(self.initial_position, dtype=float)

        if self.kind == "constant_velocity":
            velocity = np.asarray(self.velocity, dtype=float)
            return q_start + velocity * t, velocity.copy(), np.zeros(self.p)

        if self.kind == "sinusoidal":
            drift = np.asarray(self.drift, dtype=float)
            amplitude = np.asarray(self.amplitude, dtype=float)
            phase = np.asarray(self.phase, dtype=float)
            w = self.omega
            angle = w * t + phase
            position = q_start + drift * t + amplitude / w * (np.cos(phase) - np.cos(angle))
            return position, drift + amplitude * np.sin(angle), amplitude * w * np.cos(angle)

        # knots are given absolutely; the spline's own start replaces initial_position
        return self._spline(t), self._spline(t, 1), self._spline(t, 2)

    def accel_bound(self) -> float:
        """sup_t |q''_0(t)|"""
        if self.kind == "constant_velocity":
            return 0.0
        if self.kind == "sinusoidal":
            amplitude = np.asarray(self.amplitude, dtype=float)
            phase = np.asarray(self.phase, dtype=float)
            power = float(np.sum(amplitude ** 2))
            rotation = abs(np.sum(amplitude ** 2 * np.exp(2j * phase)))
            return self.omega * math.sqrt((power + rotation) / 2.0)
        # acceleration is piecewise linear, so its norm peaks at a knot
        accelerations = self._spline(np.asarray(self.knot_times, dtype=float), 2)
        return float(np.max(np.linalg.norm(accelerations, axis=1)))

    def sigma_l(self, n: int) -> float:
        """Bound on |1_n (x) q''_0|"""
        return math.sqrt(n) * self.accel_bound()


def leader_state(traj: LeaderTrajectory, t: float) -> LeaderState:
    return traj.state(t)
