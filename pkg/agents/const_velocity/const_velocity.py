#!/usr/bin/env python3
"""
Continuous adaptive flocking law for a leader with constant velocity.

    u^_i  = -sum_j dV_ij/dq_i - gamma sum_j (q'_i - q'_j)
    v'_i  = u^_i
    u_i   = u^_i + Y_i(q_i, q'_i, v'_i, v_i) theta^_i
    theta^'_i = -Gamma_i Y_i^T s_i
"""

from typing import Optional, Sequence

import numpy as np

from utils.agent_interface import (BaseController, ControllerState, ControlOutput,
                                   NeighborMeasurement, Regressor)


class ConstVelocity(BaseController):

    def compute(self, q_i: np.ndarray, qd_i: np.ndarray, state: ControllerState,
                measurements: Sequence[NeighborMeasurement], gradients: Sequence[np.ndarray],
                regressor: Regressor, leader_velocity: Optional[np.ndarray] = None) -> ControlOutput:
        gamma = float(self.gains['gamma'])
        damping = np.zeros_like(qd_i)
        for m in measurements:
            damping += m.rel_velocity
        u_hat = -self.gradient_sum(gradients, qd_i.shape[0]) - gamma * damping
        return self.finish(q_i, qd_i, state, u_hat, u_hat, regressor)
