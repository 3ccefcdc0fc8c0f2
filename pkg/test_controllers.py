#!/usr/bin/env python3
"""
Tests for the control law interface, the factory and the three follower laws
"""

import numpy as np
import pytest

from utils.agent_interface import (BaseController, ControllerConfig, ControllerFactory, ControllerState,
                                   NeighborMeasurement, SignMode, aux_vars, sgn_smooth, tracking_errors)
from utils.errors import ConfigurationError
from utils.plant import SpacecraftParams, SpacecraftPlant

PLANT = SpacecraftPlant(SpacecraftParams(mass=2.0, r_0=7.0e6))
Q = np.array([10.0, -20.0, 5.0])
QD = np.array([0.3, -0.1, 0.2])


def _state(n_labels=3, alpha=0.0, beta=0.0):
    return ControllerState(v=np.array([0.1, 0.0, 0.2]), theta_hat=np.array([1.5]),
                           alpha=np.full(n_labels, alpha), beta=beta)


def _measurements():
    return [NeighborMeasurement(label=0, rel_position=np.array([50.0, 0.0, 0.0]),
                                rel_velocity=np.array([0.2, -0.2, 0.0]), is_leader=True),
            NeighborMeasurement(label=2, rel_position=np.array([0.0, -90.0, 0.0]),
                                rel_velocity=np.array([-0.1, 0.05, 0.3]))]


GRADIENTS = [np.array([0.01, 0.0, -0.02]), np.array([0.0, 0.03, 0.0])]


def test_factory_discovers_all_laws():
    assert {"const_velocity", "varying_velocity", "adaptive_gain"} <= set(ControllerFactory.available())
    for law in ("const_velocity", "varying_velocity", "adaptive_gain"):
        descriptor = ControllerFactory.descriptor(law)
        assert descriptor.agent_id == law
        assert descriptor.gains["adaptation_gain"] == 5.0
        assert isinstance(ControllerFactory.create(law), BaseController)


def test_factory_class_names_follow_folders():
    assert type(ControllerFactory.create("const_velocity")).__name__ == "ConstVelocity"
    assert type(ControllerFactory.create("adaptive_gain")).__name__ == "AdaptiveGain"


def test_factory_rejects_unknown_law():
    with pytest.raises(ConfigurationError):
        ControllerFactory.descriptor("pid")


def test_registered_law_is_created(monkeypatch):
    ControllerFactory.available()
    monkeypatch.setattr(ControllerFactory, "_registry", dict(ControllerFactory._registry))

    class Parked(BaseController):
        def compute(self, q_i, qd_i, state, measurements, gradients, regressor, leader_velocity=None):
            zero = np.zeros_like(qd_i)
            return self.finish(q_i, qd_i, state, zero, zero, regressor)

    config = ControllerConfig(agent_id="parked", name="Parked", version="0.1", description="no motion",
                              capabilities=[], gains={"adaptation_gain": 2.0})
    ControllerFactory.register("parked", Parked, config)
    assert "parked" in ControllerFactory.available()
    law = ControllerFactory.create("parked")
    out = law.compute(Q, QD, _state(), [], [], PLANT.regressor)
    assert np.array_equal(out.v_dot, np.zeros(3))
    Y = PLANT.regressor(Q, QD, np.zeros(3), _state().v)
    assert np.allclose(out.theta_hat_dot, -2.0 * (Y.T @ (QD - _state().v)))


def test_descriptor_without_gains_is_rejected(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"agent_id": "broken", "name": "x", "version": "1", "description": "", "capabilities": []}',
                    encoding="utf-8")
    with pytest.raises(ConfigurationError):
        ControllerConfig.from_file(path)


def test_overrides_replace_descriptor_gains():
    law = ControllerFactory.create("const_velocity", {"gamma": 0.5, "adaptation_gain": None})
    assert law.gains["gamma"] == 0.5
    assert law.gains["adaptation_gain"] == 5.0


def test_adaptation_matrix():
    law = ControllerFactory.create("const_velocity")
    assert np.array_equal(law.adaptation_matrix(1), np.array([[5.0]]))
    assert np.array_equal(law.adaptation_matrix(3), 5.0 * np.eye(3))
    full = ControllerFactory.create("const_velocity", {"adaptation_gain": [[2.0, 0.0], [0.0, 3.0]]})
    assert np.array_equal(full.adaptation_matrix(2), np.diag([2.0, 3.0]))
    with pytest.raises(ConfigurationError):
        full.adaptation_matrix(3)


def test_sign_modes():
    x = np.array([-0.5, 0.0, 1e-4])
    assert np.array_equal(sgn_smooth(x, SignMode("exact")), np.array([-1.0, 0.0, 1.0]))
    assert np.allclose(sgn_smooth(x, SignMode("tanh", 1000.0)), np.tanh(1000.0 * x))
    with pytest.raises(ConfigurationError):
        SignMode("clip")
    with pytest.raises(ConfigurationError):
        SignMode("tanh", 0.0)


def test_aux_and_tracking_errors():
    assert np.array_equal(aux_vars(QD, np.array([0.1, 0.0, 0.2])), QD - np.array([0.1, 0.0, 0.2]))
    q_tilde, v_tilde = tracking_errors(Q, [1.0, 1.0, 1.0], np.zeros(3), [0.5, 0.5, 0.5])
    assert np.array_equal(q_tilde, Q)
    assert np.array_equal(v_tilde, np.full(3, 0.5))


def _expected_finish(state, u_hat, v_dot):
    Y = PLANT.regressor(Q, QD, v_dot, state.v)
    s = QD - state.v
    return u_hat + Y @ state.theta_hat, -5.0 * (Y.T @ s)


def test_const_velocity_law():
    law = ControllerFactory.create("const_velocity")
    state = _state()
    out = law.compute(Q, QD, state, _measurements(), GRADIENTS, PLANT.regressor)
    damping = np.array([0.2, -0.2, 0.0]) + np.array([-0.1, 0.05, 0.3])
    u_hat = -(GRADIENTS[0] + GRADIENTS[1]) - 0.04 * damping
    u, theta_dot = _expected_finish(state, u_hat, u_hat)
    assert np.allclose(out.u_hat, u_hat, rtol=1e-14, atol=1e-16)
    assert np.allclose(out.v_dot, u_hat, rtol=1e-14, atol=1e-16)
    assert np.allclose(out.u, u, rtol=1e-13)
    assert np.allclose(out.theta_hat_dot, theta_dot, rtol=1e-13)
    assert np.array_equal(out.alpha_dot, np.zeros(3)) and out.beta_dot == 0.0


def test_const_velocity_law_without_neighbors():
    law = ControllerFactory.create("const_velocity")
    state = _state()
    out = law.compute(Q, QD, state, [], [], PLANT.regressor)
    assert np.array_equal(out.v_dot, np.zeros(3))
    assert np.allclose(out.u, PLANT.regressor(Q, QD, np.zeros(3), state.v) @ state.theta_hat)


def test_varying_velocity_law_exact_sign():
    law = ControllerFactory.create("varying_velocity", {"sign_mode": "exact"})
    state = _state()
    out = law.compute(Q, QD, state, _measurements(), GRADIENTS, PLANT.regressor)
    consensus = np.sign([0.2, -0.2, 0.0]) + np.sign([-0.1, 0.05, 0.3])
    v_dot = -(GRADIENTS[0] + GRADIENTS[1]) - 0.04 * consensus
    u_hat = v_dot - 0.04 * np.sign(QD - state.v)
    u, theta_dot = _expected_finish(state, u_hat, v_dot)
    assert np.allclose(out.v_dot, v_dot, rtol=1e-14, atol=1e-16)
    assert np.allclose(out.u_hat, u_hat, rtol=1e-14, atol=1e-16)
    assert np.allclose(out.u, u, rtol=1e-13)
    assert np.allclose(out.theta_hat_dot, theta_dot, rtol=1e-13)


def test_varying_velocity_law_defaults_to_tanh():
    law = ControllerFactory.create("varying_velocity")
    assert law.sign_mode == SignMode("tanh", 1000.0)
    assert law.gains["alpha"] == 0.04


def test_adaptive_gain_law():
    law = ControllerFactory.create("adaptive_gain", {"sign_mode": "exact"})
    state = _state(alpha=0.5, beta=0.2)
    out = law.compute(Q, QD, state, _measurements(), GRADIENTS, PLANT.regressor)
    consensus = 0.5 * (np.sign([0.2, -0.2, 0.0]) + np.sign([-0.1, 0.05, 0.3]))
    v_dot = -(GRADIENTS[0] + GRADIENTS[1]) - consensus
    s = QD - state.v
    assert np.allclose(out.v_dot, v_dot, rtol=1e-14, atol=1e-16)
    assert np.allclose(out.u_hat, v_dot - 0.2 * np.sign(s), rtol=1e-14, atol=1e-16)
    assert out.alpha_dot[0] == pytest.approx(0.003 * 0.4)
    assert out.alpha_dot[1] == 0.0
    assert out.alpha_dot[2] == pytest.approx(0.003 * 0.45)
    assert out.beta_dot == pytest.approx(0.003 * np.abs(s).sum())


def test_adaptive_gain_deadband():
    law = ControllerFactory.create("adaptive_gain", {"gain_deadband": 0.0013})
    out = law.compute(Q, QD, _state(), _measurements(), GRADIENTS, PLANT.regressor)
    assert out.alpha_dot[0] == 0.0          # 0.0012 is inside the band
    assert out.alpha_dot[2] == pytest.approx(0.00135)


def test_adaptive_gain_printed_law_needs_leader_velocity():
    law = ControllerFactory.create("adaptive_gain", {"gain_law": "printed"})
    assert law.needs_leader_velocity
    with pytest.raises(ConfigurationError):
        law.compute(Q, QD, _state(), _measurements(), GRADIENTS, PLANT.regressor)
    out = law.compute(Q, QD, _state(), _measurements(), GRADIENTS, PLANT.regressor,
                      leader_velocity=np.array([0.3, -0.1, 0.0]))
    assert out.alpha_dot[0] == pytest.approx(0.003 * 0.2)
    assert out.alpha_dot[2] == pytest.approx(0.003 * 0.2)


def test_adaptive_gain_rejects_unknown_gain_law():
    with pytest.raises(ConfigurationError):
        ControllerFactory.create("adaptive_gain", {"gain_law": "global"})


LAWS = {"const_velocity": {}, "varying_velocity": {"sign_mode": "exact"},
        "adaptive_gain": {"sign_mode": "exact"}}


@pytest.mark.parametrize("law_id", sorted(LAWS))
def test_estimate_is_frozen_on_the_sliding_surface(law_id):
    law = ControllerFactory.create(law_id, LAWS[law_id])
    on_surface = ControllerState(v=QD.copy(), theta_hat=np.array([1.5]), alpha=np.full(3, 0.5), beta=0.2)
    out = law.compute(Q, QD, on_surface, _measurements(), GRADIENTS, PLANT.regressor)
    assert np.array_equal(out.theta_hat_dot, np.zeros(1))


@pytest.mark.parametrize("law_id", sorted(LAWS))
def test_doubling_adaptation_gain_doubles_estimate_rate(law_id):
    single = ControllerFactory.create(law_id, {**LAWS[law_id], "adaptation_gain": 5.0})
    double = ControllerFactory.create(law_id, {**LAWS[law_id], "adaptation_gain": 10.0})
    state = _state(alpha=0.5, beta=0.2)
    slow = single.compute(Q, QD, state, _measurements(), GRADIENTS, PLANT.regressor)
    fast = double.compute(Q, QD, state, _measurements(), GRADIENTS, PLANT.regressor)
    assert np.linalg.norm(slow.theta_hat_dot) > 0.0
    np.testing.assert_allclose(fast.theta_hat_dot, 2.0 * slow.theta_hat_dot, rtol=1e-15)
    np.testing.assert_array_equal(fast.v_dot, slow.v_dot)


# dyadic gains and unit-scale inputs keep every sum exact
DYADIC_GRADIENTS = [np.array([0.5, 0.0, -0.25]), np.array([0.0, 0.125, 0.0])]


def test_varying_law_sliding_term_is_exact():
    law = ControllerFactory.create("varying_velocity", {"sign_mode": "exact", "alpha": 0.25})
    state = _state()
    out = law.compute(Q, QD, state, _measurements(), DYADIC_GRADIENTS, PLANT.regressor)
    s = QD - state.v
    np.testing.assert_array_equal(out.v_dot - out.u_hat, 0.25 * np.sign(s))
    np.testing.assert_array_equal(np.sign(out.v_dot - out.u_hat), np.array([1.0, -1.0, 0.0]))


def test_adaptive_law_sliding_term_is_exact():
    law = ControllerFactory.create("adaptive_gain", {"sign_mode": "exact"})
    state = _state(alpha=0.5, beta=0.375)
    out = law.compute(Q, QD, state, _measurements(), DYADIC_GRADIENTS, PLANT.regressor)
    s = QD - state.v
    np.testing.assert_array_equal(out.v_dot - out.u_hat, 0.375 * np.sign(s))
