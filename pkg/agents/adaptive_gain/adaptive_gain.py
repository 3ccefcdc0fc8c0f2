#!/usr/bin/env python3
"""
Fully distributed flocking law with gain adaptation.

    u^_i = -sum_j dV_ij/dq_i - sum_j alpha_ij sgn(q'_i - q'_j) - beta_i sgn(s_i)
    v'_i = u^_i + beta_i sgn(s_i)
    alpha'_ij = gamma1 a_ij |q'_i - q'_j|_1      (per_edge)
    alpha'_ij = gamma1 a_ij |q'_i - q'_0|_1      (printed)
    beta'_i   = gamma2 |s_i|_1

Rates below gain_deadband are zeroed so the gains stop drifting once
the residual velocity errors are small.
"""

from typing import Optional, Sequence

import numpy as np

from utils.agent_interface import (BaseController, ControllerState, ControlOutput,
                                   NeighborMeasurement, Regressor, aux_vars, sgn_smooth)
from utils.errors import ConfigurationError

GAIN_LAWS = ("per_edge", "printed")


class AdaptiveGain(BaseController):

    def __init__(self, config):
        super().__init__(config)
        self.gain_law = self.gains.get('gain_law', 'per_edge')
        if self.gain_law not in GAIN_LAWS:
            raise ConfigurationError(f"gain_law must be one of {GAIN_LAWS}, got '{self.gain_law}'")
        self.needs_leader_velocity = self.gain_law == 'printed'
        self.deadband = float(self.gains.get('gain_deadband', 0.0))

    def _rate(self, gain: float, error: np.ndarray) -> float:
        rate = gain * float(np.abs(error).sum())
        return 0.0 if rate < self.deadband else rate

    def compute(self, q_i: np.ndarray, qd_i: np.ndarray, state: ControllerState,
                measurements: Sequence[NeighborMeasurement], gradients: Sequence[np.ndarray],
                regressor: Regressor, leader_velocity: Optional[np.ndarray] = None) -> ControlOutput:
        gamma1, gamma2 = float(self.gains['gamma1']), float(self.gains['gamma2'])
        if self.needs_leader_velocity and leader_velocity is None:
            raise ConfigurationError("printed gain law needs the leader velocity at every follower")

        consensus = np.zeros_like(qd_i)
        alpha_dot = np.zeros_like(state.alpha)
        for m in measurements:
            consensus += state.alpha[m.label] * sgn_smooth(m.rel_velocity, self.sign_mode)
            error = qd_i - leader_velocity if self.gain_law == 'printed' else m.rel_velocity
            alpha_dot[m.label] = self._rate(gamma1, error)

        s = aux_vars(qd_i, state.v)
        v_dot = -self.gradient_sum(gradients, qd_i.shape[0]) - consensus
        u_hat = v_dot - state.beta * sgn_smooth(s, self.sign_mode)
        return self.finish(q_i, qd_i, state, u_hat, v_dot, regressor,
                           alpha_dot=alpha_dot, beta_dot=self._rate(gamma2, s))
