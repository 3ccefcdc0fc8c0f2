#!/usr/bin/env python3
"""
Tests for the property verification suites and their report
"""

import numpy as np
import pytest

from engine.verification import (CheckResult, SUITES, random_tree_positions, verify, verify_lyapunov,
                                 verify_matrices, verify_plant, verify_potential)
from utils.errors import ConfigurationError
from utils.formatter import get_output_formatter
from utils.topology import build_graph, leader_reaches_all


def _failures(checks):
    return [f"{c.suite}.{c.name}={c.observed}" for c in checks if not c.passed]


def test_matrices_suite_passes():
    checks = verify_matrices(samples=60)
    assert len(checks) == 6
    assert _failures(checks) == []


def test_plant_suite_passes():
    assert _failures(verify_plant(samples=200)) == []


def test_potential_suite_passes():
    checks = verify_potential()
    assert _failures(checks) == []
    info = [c for c in checks if c.relation == "info"]
    assert len(info) == 1
    assert info[0].observed == pytest.approx(1.0 / 250.0, rel=1e-4)


def test_lyapunov_suite_on_a_short_horizon():
    checks = verify_lyapunov(t_end=2.0)
    assert {c.name for c in checks} == {"max_V_increase", "edges_lost", "min_distance", "cap_engagements",
                                        "lambda_min_floor"}
    assert _failures(checks) == []


def test_random_trees_are_connected():
    rng = np.random.default_rng(5)
    for n in (1, 4, 8):
        positions = random_tree_positions(rng, n, 200.0)
        assert leader_reaches_all(build_graph(positions[0], positions[1:], 200.0))


def test_unknown_suite():
    with pytest.raises(ConfigurationError):
        verify("everything")


def test_verify_dispatches_by_name(monkeypatch):
    fake = [CheckResult("matrices", "stub", 1.0, 2.0, "<", True)]
    monkeypatch.setitem(SUITES, "matrices", lambda: fake)
    assert verify("matrices") == fake


def test_report_lines():
    checks = [CheckResult("plant", "skew_symmetry_residual", 1.5e-17, 1e-10, "<", True),
              CheckResult("matrices", "permutation_consistency", 2.0, 0.0, "==", False)]
    report = get_output_formatter(color=False).format_verification_report(checks)
    lines = report.splitlines()
    assert lines[0] == "# Verification Report"
    assert lines[1] == "[PASS] plant.skew_symmetry_residual: observed 1.5e-17 (< 1e-10)"
    assert lines[2] == "[FAIL] matrices.permutation_consistency: observed 2 (== 0.0)"
    assert lines[-1] == "❌ 1/2 checks passed"
