#!/usr/bin/env python3
"""
Discontinuous flocking law for a leader with bounded acceleration.

    u^_i = -sum_j dV_ij/dq_i - alpha sum_j sgn(q'_i - q'_j) - alpha sgn(s_i)
    v'_i = u^_i + alpha sgn(s_i)

The signum is replaced by tanh(k .) unless the exact mode is configured.
"""

from typing import Optional, Sequence

import numpy as np

from utils.agent_interface import (BaseController, ControllerState, ControlOutput,
                                   NeighborMeasurement, Regressor, aux_vars, sgn_smooth)


class VaryingVelocity(BaseController):

    def compute(self, q_i: np.ndarray, qd_i: np.ndarray, state: ControllerState,
                measurements: Sequence[NeighborMeasurement], gradients: Sequence[np.ndarray],
                regressor: Regressor, leader_velocity: Optional[np.ndarray] = None) -> ControlOutput:
        alpha = float(self.gains['alpha'])
        consensus = np.zeros_like(qd_i)
        for m in measurements:
            consensus += sgn_smooth(m.rel_velocity, self.sign_mode)
        v_dot = -self.gradient_sum(gradients, qd_i.shape[0]) - alpha * consensus
        sliding = alpha * sgn_smooth(aux_vars(qd_i, state.v), self.sign_mode)
        u_hat = v_dot - sliding
        return self.finish(q_i, qd_i, state, u_hat, v_dot, regressor)
