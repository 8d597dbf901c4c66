"""Trajectory JSONL files, conserved-quantity logs and report emission."""

import csv
import json
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np

from core.errors import ConfigInvalid
from core.solver import Equation, Trajectory, conserved_log
from core.spectral import SpectralField

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


# Trajectories

def write_trajectory(traj: Trajectory, path: PathLike) -> Path:
    """Write a header record followed by one {"t", "field"} record per sample."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "sigma": traj.sigma,
        "dt": traj.dt,
        "step_dt": traj.step_dt,
        "scheme_id": traj.scheme_id,
        "equation": traj.equation.value,
        "n_max": traj.n_max,
    }
    with path.open("w") as fh:
        fh.write(json.dumps({"header": header}, sort_keys=True) + "\n")
        for t, state in zip(traj.times, traj.states):
            fh.write(json.dumps({"t": float(t), "field": state.to_dict()}, sort_keys=True) + "\n")
    logger.info("wrote %d samples to %s", len(traj), path)
    return path


def read_trajectory(path: PathLike, sigma: Optional[int] = None, dt: Optional[float] = None) -> Trajectory:
    """Read a trajectory file; sigma and dt fill in for header-less files.

    Raises:
        ConfigInvalid: If the file is missing or sigma cannot be determined
    """
    path = Path(path)
    if not path.exists():
        raise ConfigInvalid(f"trajectory file not found: {path}")
    header = {}
    times: List[float] = []
    states: List[SpectralField] = []
    with path.open() as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            if "header" in record:
                header = record["header"]
                continue
            times.append(float(record["t"]))
            states.append(SpectralField.from_dict(record["field"]))
    sigma = header.get("sigma", sigma)
    if sigma is None:
        raise ConfigInvalid(f"{path} has no header; sigma must be supplied")
    if "dt" in header:
        dt = header["dt"]
    elif dt is None:
        dt = float(np.mean(np.diff(times))) if len(times) > 1 else 1.0
    return Trajectory(times, states, sigma, dt,
                      scheme_id=header.get("scheme_id", "external"),
                      equation=Equation(header.get("equation", Equation.MBO_PRIME.value)),
                      step_dt=header.get("step_dt"))


def write_conserved_csv(traj: Trajectory, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "mean", "l2", "energy"])
        for t, triple in conserved_log(traj):
            writer.writerow([repr(t), repr(triple.mean), repr(triple.mass_l2), repr(triple.energy)])
    return path


# Reports

class ReportStore:
    """Writes reports named <subcommand>-<confighash>.{json,csv} into one directory."""

    def __init__(self, report_dir: PathLike, subcommand: str, config_hash: str, parameters: dict):
        """Initialize store.

        Args:
            report_dir: Directory receiving reports
            subcommand: CLI subcommand producing the reports
            config_hash: Hash of the run configuration
            parameters: Values of eta, M, s, delta embedded in every report
        """
        self.report_dir = Path(report_dir)
        self.subcommand = subcommand
        self.config_hash = config_hash
        self.parameters = parameters

    def path(self, ext: str, explicit: Optional[PathLike] = None) -> Path:
        if explicit:
            return Path(explicit)
        return self.report_dir / f"{self.subcommand}-{self.config_hash}.{ext}"

    def write_json(self, payload: dict, explicit: Optional[PathLike] = None) -> Path:
        path = self.path("json", explicit)
        path.parent.mkdir(parents=True, exist_ok=True)
        body = {
            "subcommand": self.subcommand,
            "config_hash": self.config_hash,
            "parameters": self.parameters,
            **payload,
        }
        path.write_text(json.dumps(_plain(body), sort_keys=True, indent=2) + "\n")
        logger.info("report written to %s", path)
        return path

    def write_csv(self, header: Sequence[str], rows: Iterable[Sequence], explicit: Optional[PathLike] = None) -> Path:
        path = self.path("csv", explicit)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(list(header))
            for row in rows:
                writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
        logger.info("report written to %s", path)
        return path

    def write_long_csv(self, rows: Iterable[Sequence], explicit: Optional[PathLike] = None) -> Path:
        """Plot-ready long format: run_id, quantity, x, y."""
        return self.write_csv(["run_id", "quantity", "x", "y"], rows, explicit)


def _plain(value):
    """Convert numpy scalars and arrays into JSON-native values."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        return _plain(value.item())
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value
