#!/usr/bin/env python3
"""
Tests for the SVG plot renderers
"""

import matplotlib
import numpy as np
import pytest
from lxml import etree

from engine.simulator import run
from utils.errors import ConfigurationError, OutputError
from utils.file_manager import SimLogFileManager
from utils.plotter import (PLOT_KINDS, PlotData, emit_plot, plot_data_from_frame, plot_data_from_log,
                           render_trajectory_xy, render_velocity_error, trajectory_figure, velocity_error_figure)

NS = {"svg": "http://www.w3.org/2000/svg"}


def _parse(svg: str):
    return etree.fromstring(svg.encode("utf-8"))


def _group_ids(root):
    return root.xpath("//svg:g/@id", namespaces=NS)


def _artist(fig, gid):
    found = [a for a in fig.axes[0].get_children() if a.get_gid() == gid]
    assert len(found) == 1, gid
    return found[0]


def _title(root):
    return "".join(root.xpath("//svg:g[@id='title']//text()", namespaces=NS)).strip()


def _single_sample(n: int = 2) -> PlotData:
    return PlotData(name="single", times=np.array([0.0]), leader_xy=np.zeros((1, 2)),
                    follower_xy=np.arange(2 * n, dtype=float).reshape(1, n, 2) * 50.0 + 80.0,
                    velocity_errors=np.full((1, n), 0.1), initial_edges=[(0, 1)])


@pytest.fixture
def small_data(small_scenario):
    return plot_data_from_log(run(small_scenario))


def test_trajectory_series_and_edges(small_data):
    root = _parse(render_trajectory_xy(small_data))
    ids = _group_ids(root)
    for gid in ("leader", "follower-1", "follower-2", "edge-0-1", "edge-0-2", "edge-1-2", "start", "leader-end"):
        assert ids.count(gid) == 1, gid
    assert _title(root) == "small: trajectories"


def test_trajectory_artists_carry_the_log(small_data):
    fig = trajectory_figure(small_data)
    follower = _artist(fig, "follower-1")
    assert np.array_equal(follower.get_xdata(), small_data.follower_xy[:, 0, 0])
    assert np.array_equal(follower.get_ydata(), small_data.follower_xy[:, 0, 1])
    assert len(_artist(fig, "leader").get_xdata()) == small_data.times.size
    assert _artist(fig, "start").get_offsets().shape == (small_data.n + 1, 2)
    edge = _artist(fig, "edge-1-2")
    assert np.array_equal(edge.get_xdata(), small_data.follower_xy[0, :, 0])
    end = _artist(fig, "leader-end")
    assert end.get_marker() == "s"
    assert np.array_equal(np.ravel(end.get_xydata()), small_data.leader_xy[-1])


def test_velocity_error_series(small_data):
    root = _parse(render_velocity_error(small_data))
    ids = _group_ids(root)
    for i in range(1, small_data.n + 1):
        assert ids.count(f"follower-{i}") == 1
    assert "leader" not in ids
    assert _title(root) == "small: velocity errors"
    fig = velocity_error_figure(small_data)
    assert np.array_equal(_artist(fig, "follower-2").get_ydata(), small_data.velocity_errors[:, 1])
    assert fig.axes[0].get_ylim()[0] == 0.0


def test_single_sample_draws_markers():
    data = _single_sample()
    fig = trajectory_figure(data)
    for gid in ("leader", "follower-1", "follower-2"):
        assert _artist(fig, gid).get_marker() == "o"
    fig = velocity_error_figure(data)
    assert [_artist(fig, f"follower-{i}").get_marker() for i in (1, 2)] == ["o", "o"]
    assert _parse(render_velocity_error(data)).tag == "{http://www.w3.org/2000/svg}svg"


def test_multi_sample_lines_have_no_markers(small_data):
    assert _artist(trajectory_figure(small_data), "follower-1").get_marker() == "None"


def test_rendering_is_deterministic(small_data):
    first = render_trajectory_xy(small_data)
    assert first == render_trajectory_xy(small_data)
    assert render_velocity_error(small_data) == render_velocity_error(small_data)
    assert "<dc:date>" not in first


def test_rendering_leaves_global_settings_alone(small_data):
    before = matplotlib.rcParams["svg.hashsalt"]
    render_velocity_error(small_data)
    assert matplotlib.rcParams["svg.hashsalt"] == before


def test_emit_plot_writes_each_kind(small_data, tmp_path):
    for kind in PLOT_KINDS:
        path = emit_plot(small_data, tmp_path / f"small.{kind}.svg", kind)
        assert _parse(path.read_text(encoding="utf-8")).tag == "{http://www.w3.org/2000/svg}svg"
        assert b"\r\n" not in path.read_bytes()


def test_emit_plot_rejects_unknown_kind(small_data, tmp_path):
    with pytest.raises(ConfigurationError):
        emit_plot(small_data, tmp_path / "x.svg", "histogram")


def test_emit_plot_rejects_empty_log(tmp_path):
    empty = PlotData(name="empty", times=np.zeros(0), leader_xy=np.zeros((0, 2)),
                     follower_xy=np.zeros((0, 1, 2)), velocity_errors=np.zeros((0, 1)))
    with pytest.raises(OutputError):
        emit_plot(empty, tmp_path / "empty.svg", "velocity_error")
    assert not (tmp_path / "empty.svg").exists()


def test_plot_data_from_csv_and_manifest(small_scenario, small_data, tmp_path):
    log = run(small_scenario)
    files = SimLogFileManager(tmp_path)
    files.emit_csv(log, "small.csv")
    files.write_manifest("small.meta.json", {"name": "small", "initial_edges": [[0, 1], [0, 2], [1, 2]]})
    data = plot_data_from_frame(files.read_log("small.csv"), files.read_manifest("small.csv"))
    assert data.name == "small"
    assert data.n == 2
    assert data.initial_edges == [(0, 1), (0, 2), (1, 2)]
    assert np.allclose(data.follower_xy, small_data.follower_xy, rtol=1e-8)
    assert np.allclose(data.velocity_errors, small_data.velocity_errors, rtol=1e-8, atol=1e-12)

    bare = plot_data_from_frame(files.read_log("small.csv"), name="bare")
    assert bare.name == "bare" and bare.initial_edges == []
