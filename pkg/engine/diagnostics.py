#!/usr/bin/env python3
"""
Flocking Diagnostics
Lyapunov candidate series, velocity errors, separations and topology
statistics computed from a finished SimLog.

    V1 = 1/2 sum s_i^T M_i s_i + 1/2 sum theta~_i^T Gamma^-1 theta~_i
    V2 = sum_{i<j} V_ij + sum_i V_i0
    V3 = sum_i 1/(4 gamma1) sum_{j>=1} (alpha_ij - alpha_bar)^2
       + sum_i 1/(2 gamma1) (alpha_i0 - alpha_bar)^2
       + sum_i 1/(2 gamma2) (beta_i - beta_bar)^2
    V  = V1 + 1/2 sum v~_i^T v~_i + V2 (+ V3 for the gain-adaptive law)
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import structlog

from engine.scenario import GainReport, Scenario
from engine.simulator import SimLog
from utils.agent_interface import ControllerFactory
from utils.potential import branch_jumps, value_at

logger = structlog.get_logger(__name__)

# alpha_bar and beta_bar must lie strictly above their bounds
BOUND_MARGIN = 1.05
BOUND_FLOOR = 1e-3


@dataclass
class Diagnostics:
    times: np.ndarray
    V1: np.ndarray
    V2: np.ndarray
    V3: np.ndarray
    V: np.ndarray
    velocity_error: np.ndarray      # (S, n)
    min_distance: np.ndarray
    lambda_min: np.ndarray
    edges_lost: int
    edges_added: int
    R_min: float
    R_max: float
    theta_tilde: np.ndarray         # final theta_true - theta^, (n, p_theta)
    cap_engagements: int
    gain_thresholds: Dict[str, Any] = field(default_factory=dict)
    branch_jumps: Dict[str, float] = field(default_factory=dict)

    def max_velocity_error(self) -> float:
        return float(np.max(self.velocity_error[-1]))

    def max_lyapunov_increase(self) -> float:
        """Largest V(t_{k+1}) - V(t_k) over logged samples"""
        if self.V.size < 2:
            return 0.0
        return float(np.max(np.diff(self.V)))

    def summary(self) -> Dict[str, Any]:
        return {
            "final_max_velocity_error": self.max_velocity_error(),
            "max_lyapunov_increase": self.max_lyapunov_increase(),
            "edges_lost": self.edges_lost,
            "edges_added": self.edges_added,
            "R_min": self.R_min,
            "R_max": self.R_max,
            "lambda_min_initial": float(self.lambda_min[0]),
            "lambda_min_floor": float(np.min(self.lambda_min)),
            "cap_engagements": self.cap_engagements,
            "theta_tilde_final": self.theta_tilde.tolist(),
            "gain_thresholds": self.gain_thresholds,
            "branch_jumps": self.branch_jumps,
        }


def _pair_values(positions: np.ndarray, connected: np.ndarray, spec) -> float:
    """Sum of V_ij over every unordered pair of stacked positions (leader row 0)"""
    total = 0.0
    count = positions.shape[0]
    for i in range(count):
        for j in range(i + 1, count):
            d = float(np.linalg.norm(positions[i] - positions[j]))
            total += value_at(d, spec, bool(connected[i, j]))
    return total


def _gain_thresholds(log: SimLog, scenario: Scenario) -> Dict[str, Any]:
    """Final adapted gains against sigma_l / sqrt(lambda_min[H(0)]) and sigma_l"""
    report = scenario.gain_report()
    lam, sigma_l = report.lambda_min_h0, report.sigma_l
    edge_threshold = sigma_l / math.sqrt(lam) if lam > 0 else math.inf
    initial_edges = log.initial_graph.edge_set()
    final_alpha = log.alpha[-1]
    edge_gains = [float(final_alpha[max(i, j) - 1, min(i, j)]) for i, j in initial_edges]
    edge_gains += [float(final_alpha[min(i, j) - 1, max(i, j)]) for i, j in initial_edges if i != 0]
    min_alpha = min(edge_gains) if edge_gains else 0.0
    min_beta = float(np.min(log.beta[-1]))
    return {
        "sigma_l": sigma_l,
        "lambda_min_h0": lam,
        "edge_threshold": edge_threshold,
        "min_alpha": min_alpha,
        "alpha_exceeds": min_alpha > edge_threshold,
        "beta_threshold": sigma_l,
        "min_beta": min_beta,
        "beta_exceeds": min_beta > sigma_l,
    }


def default_gain_bounds(report: GainReport) -> Tuple[float, float]:
    """(alpha_bar, beta_bar) just above sigma_l / sqrt(lambda_min[H(0)]) and sigma_l"""
    edge_bound = report.sigma_l / math.sqrt(report.lambda_min_h0) if report.lambda_min_h0 > 0 else report.sigma_l
    return _above(edge_bound), _above(report.sigma_l)


def _above(bound: float) -> float:
    return bound * BOUND_MARGIN if bound > 0 else BOUND_FLOOR


def diagnostics(log: SimLog, scenario: Scenario, theta_true: Optional[List[np.ndarray]] = None) -> Diagnostics:
    plants = scenario.plants()
    if theta_true is None:
        theta_true = [plant.theta_true for plant in plants]
    theta_true = np.array(theta_true, dtype=float).reshape(log.n, log.p_theta)
    spec = scenario.potential_spec()
    controller = ControllerFactory.create(scenario.controller.kind, scenario.controller.gains())
    gamma_inv = np.linalg.inv(controller.adaptation_matrix(log.p_theta))
    adaptive = scenario.controller.kind == "adaptive_gain"

    S = log.samples
    V1, V2, V3, V_tilde = np.zeros(S), np.zeros(S), np.zeros(S), np.zeros(S)
    report = scenario.gain_report()
    default_alpha, default_beta = default_gain_bounds(report)
    alpha_bar = default_alpha if scenario.controller.alpha_bar is None else scenario.controller.alpha_bar
    beta_bar = default_beta if scenario.controller.beta_bar is None else scenario.controller.beta_bar

    for k in range(S):
        s = log.qd[k] - log.v[k]
        theta_tilde = theta_true - log.theta_hat[k]
        for i, plant in enumerate(plants):
            M = plant.mass_matrix(log.q[k, i])
            V1[k] += 0.5 * s[i] @ M @ s[i] + 0.5 * theta_tilde[i] @ gamma_inv @ theta_tilde[i]
        v_tilde = log.v[k] - log.leader_qd[k]
        V_tilde[k] = 0.5 * float(np.sum(v_tilde ** 2))
        V2[k] = _pair_values(np.vstack([log.leader_q[k], log.q[k]]), log.connected, spec)
        if adaptive:
            gamma1 = float(controller.gains['gamma1'])
            gamma2 = float(controller.gains['gamma2'])
            alpha = log.alpha[k]
            followers = np.ones((log.n, log.n), dtype=bool)
            np.fill_diagonal(followers, False)
            V3[k] = (np.sum((alpha[:, 1:][followers] - alpha_bar) ** 2) / (4.0 * gamma1)
                     + np.sum((alpha[:, 0] - alpha_bar) ** 2) / (2.0 * gamma1)
                     + np.sum((log.beta[k] - beta_bar) ** 2) / (2.0 * gamma2))

    # R_max over initially connected pairs, R_min over every pair
    connected_rows, connected_cols = np.nonzero(np.triu(log.connected, k=1))
    stacked = np.concatenate([log.leader_q[:, None, :], log.q], axis=1)
    if connected_rows.size:
        spans = np.linalg.norm(stacked[:, connected_rows] - stacked[:, connected_cols], axis=2)
        R_max = float(np.max(spans))
    else:
        R_max = 0.0

    result = Diagnostics(
        times=log.times, V1=V1, V2=V2, V3=V3, V=V1 + V_tilde + V2 + V3,
        velocity_error=log.velocity_errors(), min_distance=log.min_distance,
        lambda_min=log.lambda_min, edges_lost=log.edges_lost(), edges_added=log.edges_added(),
        R_min=float(np.min(log.min_distance)), R_max=R_max,
        theta_tilde=theta_true - log.theta_hat[-1], cap_engagements=log.cap_engagements,
        gain_thresholds=_gain_thresholds(log, scenario) if adaptive else {},
        branch_jumps=branch_jumps(spec),
    )
    logger.info("diagnostics computed", scenario=scenario.name,
                velocity_error=result.max_velocity_error(), R_min=result.R_min, R_max=result.R_max,
                edges_lost=result.edges_lost, edges_added=result.edges_added)
    return result
