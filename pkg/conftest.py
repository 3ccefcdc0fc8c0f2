#!/usr/bin/env python3
"""
Shared fixtures for the flocking simulator tests
Small scenarios are written as .cfg text so every test exercises the parser
"""

from pathlib import Path
from typing import Dict

import pytest

ROOT = Path(__file__).resolve().parent
INPUT_DIR = ROOT / "input"
CASE_FILES = {name: INPUT_DIR / f"{name}.cfg" for name in ("case1", "case2", "case3")}

# two unit-mass followers near a slow leader; every pair starts connected
SMALL_SECTIONS: Dict[str, Dict[str, str]] = {
    "plant": {
        "model": "spacecraft",
        "masses": "1, 1 kg",
        "orbit_radius": "7000 km",
        "initial_positions": "(120, 0, 0); (0, 130, 0) m",
        "initial_velocities": "(0.2, 0, 0); (0, -0.1, 0.05) m/s",
    },
    "leader": {
        "kind": "constant_velocity",
        "initial_position": "(0, 0, 0) m",
        "velocity": "(0.1, 0.05, 0) m/s",
    },
    "potential": {
        "radius": "200 m",
        "minimum_distance": "80 m",
    },
    "controller": {
        "kind": "const_velocity",
        "gamma": "0.04",
        "adaptation_gain": "5",
        "initial_estimate": "0.5 kg",
    },
    "integration": {
        "dt": "0.01 s",
        "t_end": "2 s",
        "decimation": "10",
    },
    "output": {
        "name": "small",
    },
}


def scenario_text(overrides: Dict[str, Dict[str, str]] = None, drop: Dict[str, list] = None) -> str:
    """Render SMALL_SECTIONS as .cfg text, with per-key overrides and deletions"""
    lines = ["# generated by the test-suite", ""]
    sections = {name: dict(keys) for name, keys in SMALL_SECTIONS.items()}
    for name, keys in (overrides or {}).items():
        sections.setdefault(name, {}).update(keys)
    for name, keys in (drop or {}).items():
        for key in keys:
            sections[name].pop(key, None)
    for name, keys in sections.items():
        lines.append(f"[{name}]")
        lines += [f"{key} = {value}" for key, value in keys.items()]
        lines.append("")
    return "\n".join(lines)


@pytest.fixture
def write_scenario(tmp_path):
    """Write scenario text (or a SMALL_SECTIONS variant) and return its path"""
    def _write(text: str = None, name: str = "small.cfg", **kwargs) -> Path:
        path = tmp_path / name
        path.write_text(text if text is not None else scenario_text(**kwargs), encoding="utf-8")
        return path
    return _write


@pytest.fixture
def small_scenario(write_scenario, tmp_path):
    from engine.scenario import parse_scenario
    return parse_scenario(write_scenario(overrides={"output": {"directory": str(tmp_path / "output")}}))


@pytest.fixture
def adaptive_scenario(write_scenario, tmp_path):
    from engine.scenario import parse_scenario
    return parse_scenario(write_scenario(name="adaptive.cfg", overrides={
        "leader": {"kind": "sinusoidal", "amplitude": "(0.1, 0.1, 0) m/s", "phase": "(0, 90, 0) deg",
                   "drift": "(0, 0, 0.2) m/s", "period": "60 s"},
        "controller": {"kind": "adaptive_gain", "gamma1": "0.003", "gamma2": "0.003", "sign_sharpness": "10"},
        "output": {"name": "adaptive", "directory": str(tmp_path / "output")},
    }, drop={"leader": ["velocity"], "controller": ["gamma"]}))
