#!/usr/bin/env python3
"""
Pairwise Potential Field
Gradients drive connectivity maintenance and collision avoidance; values are
reconstructed by quadrature and only feed the Lyapunov diagnostics.

Two regimes, fixed per pair at t=0:
  * initially connected (d(0) < R): barrier at d -> R
  * not initially connected: no force beyond R
Both share the collision branch for d <= d_bar.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List

import numpy as np
import structlog
from scipy.integrate import quad
from scipy.optimize import brentq

from utils.errors import BarrierViolationError, CollisionError, ConfigurationError

logger = structlog.get_logger(__name__)


@dataclass(frozen=True)
class PotentialSpec:
    R: float = 200.0
    d_bar: float = 80.0
    inner_scale: float = 250.0
    barrier_scale: float = 25.0
    cosine_rate: float = 0.1 * math.pi

    def __post_init__(self):
        if not 0.0 < self.d_bar < self.R:
            raise ConfigurationError(f"need 0 < d_bar < R, got d_bar={self.d_bar}, R={self.R}")
        if self.inner_scale <= 0 or self.barrier_scale <= 0:
            raise ConfigurationError("potential scale constants must be positive")


def initially_connected(q_i, q_j, spec: PotentialSpec) -> bool:
    """Regime of a pair, decided once from the t=0 positions"""
    return bool(np.linalg.norm(np.asarray(q_i, dtype=float) - np.asarray(q_j, dtype=float)) < spec.R)


def radial_derivative(d: float, spec: PotentialSpec, connected: bool) -> float:
    """dV/dd at separation d"""
    if d <= 0.0:
        raise CollisionError("agents collided", distance=d)
    if d <= spec.d_bar:
        return (d - spec.d_bar) / (spec.inner_scale * d)
    if connected:
        if d >= spec.R:
            raise BarrierViolationError("initially connected pair reached the sensing radius", distance=d)
        return (d - spec.d_bar) / (spec.barrier_scale * (d - spec.R) ** 2)
    if d > spec.R:
        return 0.0
    return math.cos(spec.cosine_rate * (d - spec.d_bar)) / spec.inner_scale


def gradient(q_i, q_j, spec: PotentialSpec, connected: bool) -> np.ndarray:
    """dV_ij/dq_i; gradient(q_j, q_i) is its exact negative"""
    diff = np.asarray(q_i, dtype=float) - np.asarray(q_j, dtype=float)
    d = float(np.linalg.norm(diff))
    return diff * (radial_derivative(d, spec, connected) / d)


def pair_gradients(positions: np.ndarray, adjacency: np.ndarray, connected: np.ndarray,
                   spec: PotentialSpec) -> np.ndarray:
    """
    G[i, j] = dV_ij/dq_i for every adjacent pair of the stacked positions
    (row 0 is the leader); G[j, i] = -G[i, j] and non-adjacent entries are zero.
    Raises with the offending pair on collision or barrier violation.
    """
    positions = np.asarray(positions, dtype=float)
    count, p = positions.shape
    G = np.zeros((count, count, p))
    rows, cols = np.nonzero(np.triu(adjacency, k=1))
    if rows.size == 0:
        return G
    diff = positions[rows] - positions[cols]
    d = np.linalg.norm(diff, axis=1)

    collided = d <= 0.0
    if collided.any():
        k = int(np.argmax(collided))
        raise CollisionError("agents collided", pair=(int(rows[k]), int(cols[k])), distance=float(d[k]))
    linked = connected[rows, cols]
    breached = linked & (d >= spec.R)
    if breached.any():
        k = int(np.argmax(breached))
        raise BarrierViolationError("initially connected pair reached the sensing radius",
                                    pair=(int(rows[k]), int(cols[k])), distance=float(d[k]))

    radial = np.empty_like(d)
    inner = d <= spec.d_bar
    radial[inner] = (d[inner] - spec.d_bar) / (spec.inner_scale * d[inner])
    barrier = ~inner & linked
    radial[barrier] = (d[barrier] - spec.d_bar) / (spec.barrier_scale * (d[barrier] - spec.R) ** 2)
    free = ~inner & ~linked
    radial[free] = np.where(d[free] > spec.R, 0.0,
                            np.cos(spec.cosine_rate * (d[free] - spec.d_bar)) / spec.inner_scale)

    forces = diff * (radial / d)[:, None]
    G[rows, cols] = forces
    G[cols, rows] = -forces
    return G


def _raw_value(d: float, spec: PotentialSpec, connected: bool) -> float:
    """Integral of the radial derivative from d_bar to d"""
    if d == spec.d_bar:
        return 0.0
    lo, hi = sorted((spec.d_bar, d))
    upper = hi if connected else min(hi, spec.R)
    total = 0.0
    if lo < upper:
        breaks = [b for b in (spec.d_bar, spec.R) if lo < b < upper]
        total, _ = quad(radial_derivative, lo, upper, args=(spec, connected),
                        points=breaks or None, epsabs=1e-13, epsrel=1e-12, limit=200)
    return total if d > spec.d_bar else -total


def _local_minima(spec: PotentialSpec, connected: bool, samples: int = 4001) -> List[float]:
    """Separations where the radial derivative crosses from negative to positive"""
    upper = spec.R * (1.0 - 1e-9) if connected else spec.R
    grid = np.linspace(spec.d_bar * 1e-3, upper, samples)
    values = np.array([radial_derivative(d, spec, connected) for d in grid])
    minima = [spec.d_bar]
    for k in np.nonzero((values[:-1] < 0.0) & (values[1:] >= 0.0))[0]:
        a, b = grid[k], grid[k + 1]
        if a < spec.d_bar <= b:
            continue
        try:
            minima.append(brentq(radial_derivative, a, b, args=(spec, connected), xtol=1e-12))
        except ValueError:
            minima.append(b)
    if not connected:
        minima.append(spec.R)
    return minima


@lru_cache(maxsize=64)
def value_offset(spec: PotentialSpec, connected: bool) -> float:
    """Shift that makes the reconstructed potential nonnegative"""
    lowest = min(_raw_value(d, spec, connected) for d in _local_minima(spec, connected))
    return max(0.0, -lowest)


def value(q_i, q_j, spec: PotentialSpec, connected: bool) -> float:
    d = float(np.linalg.norm(np.asarray(q_i, dtype=float) - np.asarray(q_j, dtype=float)))
    return value_at(d, spec, connected)


def value_at(d: float, spec: PotentialSpec, connected: bool) -> float:
    radial_derivative(d, spec, connected)
    return _raw_value(d, spec, connected) + value_offset(spec, connected)


def branch_jumps(spec: PotentialSpec) -> Dict[str, float]:
    """Measured jump of dV/dd across d_bar and R in each regime"""
    eps = 1e-9
    jumps = {}
    for connected, regime in ((True, "connected"), (False, "not_connected")):
        below = radial_derivative(spec.d_bar, spec, connected)
        above = radial_derivative(spec.d_bar * (1.0 + eps), spec, connected)
        jumps[f"{regime}.d_bar"] = abs(above - below)
    outside = radial_derivative(spec.R * (1.0 + eps), spec, False)
    inside = radial_derivative(spec.R, spec, False)
    jumps["not_connected.R"] = abs(inside - outside)
    for name, jump in jumps.items():
        if jump > 1e-6:
            logger.warning("potential gradient jump", joint=name, jump=jump)
    return jumps
