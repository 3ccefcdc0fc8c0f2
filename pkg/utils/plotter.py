#!/usr/bin/env python3
"""
Static SVG Plots
Planar trajectories with the initial-edge overlay, and velocity errors
against time, drawn with matplotlib and saved through its SVG backend.

Every artist that tests or reviewers look for carries a gid:
leader, follower-<i>, edge-<i>-<j>, start, leader-end, title.
"""

import io
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import matplotlib
import numpy as np
import pandas as pd
import structlog
from matplotlib.figure import Figure

from utils.errors import ConfigurationError, OutputError
from utils.file_manager import FileManager, follower_count

logger = structlog.get_logger(__name__)

PLOT_KINDS = ("trajectory_xy", "velocity_error")
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")
LEADER_COLOR = "#000000"
EDGE_COLOR = "#7f7f7f"
FIGSIZE = (6.4, 4.8)

# fixed salt and no date keep reruns byte-identical
SVG_RC = {"svg.hashsalt": "flocksim", "svg.fonttype": "none", "path.simplify": False}
SVG_METADATA = {"Date": None, "Creator": None}

_render_lock = threading.Lock()


@dataclass
class PlotData:
    name: str
    times: np.ndarray           # (S,)
    leader_xy: np.ndarray       # (S, 2)
    follower_xy: np.ndarray     # (S, n, 2)
    velocity_errors: np.ndarray  # (S, n)
    initial_edges: List[Tuple[int, int]] = field(default_factory=list)

    @property
    def n(self) -> int:
        return int(self.follower_xy.shape[1])

    @property
    def marker(self) -> Optional[str]:
        """Point markers when a single sample would draw no line"""
        return "o" if self.times.size == 1 else None


def plot_data_from_log(log) -> PlotData:
    return PlotData(name=log.name, times=log.times, leader_xy=log.leader_q[:, :2],
                    follower_xy=log.q[:, :, :2], velocity_errors=log.velocity_errors(),
                    initial_edges=sorted(log.initial_graph.edge_set()))


def plot_data_from_frame(frame: pd.DataFrame, manifest: Optional[Dict] = None, name: str = "log") -> PlotData:
    """Plot inputs recovered from an emitted CSV (and its manifest, when present)"""
    n = follower_count(frame)
    follower_xy = np.stack([frame[[f"q{i}_x", f"q{i}_y"]].to_numpy() for i in range(1, n + 1)], axis=1)
    errors = frame[[f"verr{i}" for i in range(1, n + 1)]].to_numpy()
    edges = [tuple(edge) for edge in (manifest or {}).get("initial_edges", [])]
    return PlotData(name=(manifest or {}).get("name", name), times=frame["t"].to_numpy(),
                    leader_xy=frame[["q0_x", "q0_y"]].to_numpy(), follower_xy=follower_xy,
                    velocity_errors=errors, initial_edges=edges)


def _color(i: int) -> str:
    return PALETTE[i % len(PALETTE)]


def trajectory_figure(data: PlotData) -> Figure:
    fig = Figure(figsize=FIGSIZE)
    ax = fig.add_subplot()
    start = np.vstack([data.leader_xy[0], data.follower_xy[0]])

    for i, j in data.initial_edges:
        ax.plot(start[[i, j], 0], start[[i, j], 1], color=EDGE_COLOR, linewidth=0.8, linestyle=":",
                gid=f"edge-{i}-{j}")
    ax.plot(data.leader_xy[:, 0], data.leader_xy[:, 1], color=LEADER_COLOR, linewidth=2.0, linestyle="--",
            marker=data.marker, label="leader", gid="leader")
    for i in range(data.n):
        xy = data.follower_xy[:, i]
        ax.plot(xy[:, 0], xy[:, 1], color=_color(i), linewidth=1.5, marker=data.marker,
                label=f"follower {i + 1}", gid=f"follower-{i + 1}")

    ax.scatter(start[:, 0], start[:, 1], s=18, zorder=3, gid="start",
               c=[LEADER_COLOR] + [_color(i) for i in range(data.n)])
    ax.plot(data.leader_xy[-1, 0], data.leader_xy[-1, 1], linestyle="none", marker="s", markersize=7,
            color=LEADER_COLOR, gid="leader-end")

    ax.set_title(f"{data.name}: trajectories", gid="title")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal", adjustable="datalim")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="upper right", fontsize=8)
    return fig


def velocity_error_figure(data: PlotData) -> Figure:
    fig = Figure(figsize=FIGSIZE)
    ax = fig.add_subplot()
    for i in range(data.n):
        ax.plot(data.times, data.velocity_errors[:, i], color=_color(i), linewidth=1.5, marker=data.marker,
                label=f"follower {i + 1}", gid=f"follower-{i + 1}")
    ax.set_title(f"{data.name}: velocity errors", gid="title")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("|q'_i - q'_0| [m/s]")
    ax.set_ylim(bottom=0.0)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="upper right", fontsize=8)
    return fig


def render_svg(fig: Figure) -> str:
    buffer = io.StringIO()
    with _render_lock, matplotlib.rc_context(SVG_RC):
        fig.savefig(buffer, format="svg", metadata=SVG_METADATA)
    return buffer.getvalue()


def render_trajectory_xy(data: PlotData) -> str:
    return render_svg(trajectory_figure(data))


def render_velocity_error(data: PlotData) -> str:
    return render_svg(velocity_error_figure(data))


RENDERERS = {"trajectory_xy": render_trajectory_xy, "velocity_error": render_velocity_error}


def emit_plot(data: PlotData, path: Union[str, Path], kind: str) -> Path:
    if kind not in RENDERERS:
        raise ConfigurationError(f"unknown plot kind '{kind}', expected one of {PLOT_KINDS}")
    if data.times.size == 0:
        raise OutputError("cannot plot an empty log", str(path))
    written = FileManager().write_file(path, RENDERERS[kind](data))
    logger.info("wrote plot", kind=kind, path=str(written), samples=int(data.times.size))
    return written
