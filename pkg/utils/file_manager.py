#!/usr/bin/env python3
"""
File Management Utilities for the flocking simulator
Handles CSV time series, run manifests and run-state files
"""

import hashlib
import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd
import structlog

from utils.errors import OutputError

logger = structlog.get_logger(__name__)

AXES = ("x", "y", "z")


class FileManager:
    """Utility class for file and directory operations rooted at an output directory"""

    def __init__(self, base_path: Union[str, Path] = "."):
        self.base_path = Path(base_path)

    def resolve(self, file_path: Union[str, Path]) -> Path:
        path = Path(file_path)
        return path if path.is_absolute() else self.base_path / path

    def write_file(self, file_path: Union[str, Path], content: str) -> Path:
        """Write text content with LF line endings"""
        full_path = self.resolve(file_path)
        try:
            full_path.parent.mkdir(parents=True, exist_ok=True)
            with open(full_path, 'w', encoding='utf-8', newline='\n') as f:
                f.write(content)
        except OSError as e:
            raise OutputError(e.strerror or str(e), str(full_path)) from e
        logger.debug("wrote file", path=str(full_path))
        return full_path

    def read_json(self, file_path: Union[str, Path]) -> Dict[str, Any]:
        full_path = self.resolve(file_path)
        try:
            return json.loads(full_path.read_text(encoding='utf-8'))
        except OSError as e:
            raise OutputError(e.strerror or str(e), str(full_path)) from e
        except json.JSONDecodeError as e:
            raise OutputError(f"invalid JSON: {e}", str(full_path)) from e

    def write_json(self, file_path: Union[str, Path], data: Dict[str, Any], indent: int = 2) -> Path:
        return self.write_file(file_path, json.dumps(data, indent=indent, ensure_ascii=False) + "\n")

    def calculate_file_hash(self, file_path: Union[str, Path], algorithm: str = 'sha256') -> str:
        full_path = self.resolve(file_path)
        hash_obj = hashlib.new(algorithm)
        try:
            with open(full_path, 'rb') as f:
                for chunk in iter(lambda: f.read(65536), b""):
                    hash_obj.update(chunk)
        except OSError as e:
            raise OutputError(e.strerror or str(e), str(full_path)) from e
        return hash_obj.hexdigest()


def log_columns(n: int, p: int, p_theta: int) -> List[str]:
    """Column order of the CSV time series"""
    axes = AXES[:p] if p <= len(AXES) else tuple(str(k) for k in range(p))
    columns = ["t"]
    columns += [f"q0_{a}" for a in axes] + [f"qd0_{a}" for a in axes]
    for i in range(1, n + 1):
        columns += [f"q{i}_{a}" for a in axes]
        columns += [f"qd{i}_{a}" for a in axes]
        columns += [f"v{i}_{a}" for a in axes]
        columns += [f"theta{i}_{k}" for k in range(p_theta)]
        columns += [f"alpha{i}_{j}" for j in range(n + 1) if j != i]
        columns += [f"beta{i}"]
    return columns


class SimLogFileManager(FileManager):
    """Specialized file manager for simulation outputs"""

    def log_frame(self, log, diagnostics=None) -> pd.DataFrame:
        """One row per logged sample; diagnostics columns appended when given"""
        n, p, pt = log.n, log.p, log.p_theta
        data: Dict[str, Any] = {"t": log.times}
        for k in range(p):
            data[f"q0_{AXES[k]}"] = log.leader_q[:, k]
        for k in range(p):
            data[f"qd0_{AXES[k]}"] = log.leader_qd[:, k]
        for i in range(1, n + 1):
            for name, series in (("q", log.q), ("qd", log.qd), ("v", log.v)):
                for k in range(p):
                    data[f"{name}{i}_{AXES[k]}"] = series[:, i - 1, k]
            for k in range(pt):
                data[f"theta{i}_{k}"] = log.theta_hat[:, i - 1, k]
            for j in range(n + 1):
                if j != i:
                    data[f"alpha{i}_{j}"] = log.alpha[:, i - 1, j]
            data[f"beta{i}"] = log.beta[:, i - 1]

        errors = log.velocity_errors()
        for i in range(1, n + 1):
            data[f"verr{i}"] = errors[:, i - 1]
        data["min_distance"] = log.min_distance
        data["lambda_min"] = log.lambda_min
        data["edge_hash"] = log.edge_hashes
        if diagnostics is not None:
            for name in ("V1", "V2", "V3", "V"):
                data[name] = getattr(diagnostics, name)
        return pd.DataFrame(data)

    def emit_csv(self, log, path: Union[str, Path], diagnostics=None) -> Path:
        """Decimal text with 9 significant digits and LF line endings"""
        full_path = self.resolve(path)
        frame = self.log_frame(log, diagnostics)
        try:
            full_path.parent.mkdir(parents=True, exist_ok=True)
            frame.to_csv(full_path, index=False, float_format="%.9g", lineterminator="\n")
        except OSError as e:
            raise OutputError(e.strerror or str(e), str(full_path)) from e
        logger.info("wrote time series", path=str(full_path), rows=len(frame))
        return full_path

    def read_log(self, path: Union[str, Path]) -> pd.DataFrame:
        full_path = self.resolve(path)
        try:
            frame = pd.read_csv(full_path, dtype={"edge_hash": str})
        except OSError as e:
            raise OutputError(e.strerror or str(e), str(full_path)) from e
        except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise OutputError(f"not a simulation log: {e}", str(full_path)) from e
        if "t" not in frame.columns or "q0_x" not in frame.columns:
            raise OutputError("not a simulation log: missing t/q0 columns", str(full_path))
        return frame

    def write_manifest(self, path: Union[str, Path], manifest: Dict[str, Any]) -> Path:
        return self.write_json(path, _plain(manifest))

    def read_manifest(self, csv_path: Union[str, Path]) -> Optional[Dict[str, Any]]:
        """Manifest next to a CSV log, None when absent"""
        meta = manifest_path(self.resolve(csv_path))
        return self.read_json(meta) if meta.exists() else None


def manifest_path(csv_path: Union[str, Path]) -> Path:
    csv_path = Path(csv_path)
    return csv_path.with_name(f"{csv_path.stem}.meta.json")


def follower_count(frame: pd.DataFrame) -> int:
    return sum(1 for column in frame.columns if column.startswith("verr"))


def _plain(value):
    """JSON-safe copy with numpy scalars and arrays converted"""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return str(value)
    return value
