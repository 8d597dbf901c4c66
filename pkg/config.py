"""Configuration management for mbo-lab.

Environment settings come from the process environment (and a .env file if
present). Run parameters live in a RunConfig read from TOML or JSON and
overridden by command-line flags.
"""

import json
import os
import sys
from enum import Enum
from pathlib import Path
from typing import List, Optional, Union

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from core.errors import ConfigInvalid
from core.multipliers import ETA_DEFAULT
from core.parallel import default_threads
from core.solver import Equation
from utils.helpers import config_hash

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

load_dotenv()


class Config:
    """Application configuration."""

    # Output
    REPORT_DIR: str = os.getenv("MBO_REPORT_DIR", "reports")
    LOG_LEVEL: str = os.getenv("MBO_LOG_LEVEL", "INFO")

    # Compute
    THREADS: int = int(os.getenv("MBO_THREADS", "0")) or default_threads()
    EXACT_MAX_N: int = int(os.getenv("MBO_EXACT_MAX_N", "16"))
    BLOWUP_FACTOR: float = float(os.getenv("MBO_BLOWUP_FACTOR", "1e6"))
    OVERSAMPLE: int = int(os.getenv("MBO_OVERSAMPLE", "4"))

    @classmethod
    def validate(cls) -> bool:
        """Validate that the environment settings are usable."""
        if cls.THREADS < 1 or cls.EXACT_MAX_N < 1 or cls.OVERSAMPLE < 2:
            return False
        if not cls.BLOWUP_FACTOR > 1:
            return False
        return cls.LOG_LEVEL.upper() in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


config = Config()


# Run configuration

# output locations and worker count never change report content
_UNHASHED = {"threads", "report_dir", "output", "report"}


class DatumKind(str, Enum):
    ZERO = "zero"
    TWO_MODE = "two_mode"
    COLORED = "colored"


class DatumSpec(BaseModel):
    """Initial datum: zero, a cos x + b cos 2x, or seeded colored noise."""

    model_config = ConfigDict(extra="forbid")

    kind: DatumKind = DatumKind.TWO_MODE
    a: float = 0.5
    b: float = 0.25
    amplitude: float = 0.1
    decay: float = 2.0
    mean: float = 0.0


class RunConfig(BaseModel):
    """Every parameter a subcommand may read, validated against its operation."""

    model_config = ConfigDict(extra="forbid", use_enum_values=False)

    # solver
    n_max: int = Field(16, ge=1)
    dt: float = Field(1e-4, gt=0)
    T: float = Field(1.0, ge=0)
    sigma: int = -1
    equation: Equation = Equation.MBO_PRIME
    sample_every: int = Field(1, ge=1)
    blowup_factor: float = Field(default_factory=lambda: Config.BLOWUP_FACTOR, gt=1)
    datum: DatumSpec = Field(default_factory=DatumSpec)
    seed: int = 0

    # analysis
    s: float = 0.6
    eta: float = ETA_DEFAULT
    M: float = 64.0
    M_values: List[float] = Field(default_factory=lambda: [64.0, 128.0, 256.0])
    delta: Optional[float] = None
    J: int = Field(1, ge=1, le=3)
    mode: str = "exact"
    samples: int = Field(20000, ge=1)
    stride: int = Field(1, ge=1)
    weight_band: Optional[int] = Field(None, ge=1)
    pair_tol: float = Field(1e-6, gt=0)

    # estimates and counting
    estimate_id: str = "all"
    sizes: List[int] = Field(default_factory=lambda: [16, 32, 64])
    trials: int = Field(200, ge=1)
    ensemble: str = "mixed"
    exact_max_n: int = Field(default_factory=lambda: Config.EXACT_MAX_N, ge=1)
    mc_samples: int = Field(4000, ge=1)
    curve: str = "hyperbola"
    rmax: int = Field(2 ** 12, gt=1)
    centers: int = Field(4, ge=0)
    probes: int = Field(1000, ge=0)
    scan_bound: int = Field(200, ge=1)

    # twin probe
    perturbation: float = Field(0.0, ge=0)
    horizons: List[float] = Field(default_factory=lambda: [0.1, 0.25, 0.5])

    # io
    trajectory: Optional[str] = None
    output: Optional[str] = None
    report: Optional[str] = None
    report_dir: str = Field(default_factory=lambda: Config.REPORT_DIR)
    threads: Optional[int] = Field(None, ge=1)

    @field_validator("sigma")
    @classmethod
    def _sigma_sign(cls, value: int) -> int:
        if value not in (-1, 1):
            raise ValueError("sigma must be +1 or -1")
        return value

    @field_validator("eta")
    @classmethod
    def _eta_range(cls, value: float) -> float:
        if not 0 < value < 1:
            raise ValueError("eta must lie in (0, 1)")
        return value

    @field_validator("M")
    @classmethod
    def _threshold(cls, value: float) -> float:
        if not value > 1:
            raise ValueError("M must exceed 1")
        return value

    @field_validator("M_values")
    @classmethod
    def _thresholds(cls, values: List[float]) -> List[float]:
        if not values or any(not v > 1 for v in values):
            raise ValueError("every M must exceed 1")
        return values

    @field_validator("delta")
    @classmethod
    def _delta_range(cls, value: Optional[float]) -> Optional[float]:
        if value is not None and not 0 < value <= 0.5:
            raise ValueError("delta must lie in (0, 1/2]")
        return value

    @field_validator("mode")
    @classmethod
    def _mode(cls, value: str) -> str:
        if value not in ("exact", "mc"):
            raise ValueError("mode must be 'exact' or 'mc'")
        return value

    @field_validator("curve")
    @classmethod
    def _curve(cls, value: str) -> str:
        if value not in ("ellipse", "hyperbola", "both"):
            raise ValueError("curve must be 'ellipse', 'hyperbola' or 'both'")
        return value

    @field_validator("sizes")
    @classmethod
    def _sizes(cls, values: List[int]) -> List[int]:
        if not values or any(v < 1 for v in values):
            raise ValueError("lattice sizes must be positive")
        return values

    @model_validator(mode="after")
    def _sampling(self) -> "RunConfig":
        if self.T > 0 and self.dt > self.T:
            raise ValueError("dt must not exceed T")
        return self

    def parameters(self) -> dict:
        """The analysis parameters embedded in every report."""
        return {"eta": self.eta, "M": self.M, "s": self.s, "delta": self.delta}

    def digest(self) -> str:
        """Hash of everything that can change a report's content."""
        return config_hash(self.model_dump(mode="json", exclude=_UNHASHED))

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)


def _raise_invalid(exc: ValidationError):
    problems = "; ".join(f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in exc.errors())
    raise ConfigInvalid(f"invalid run configuration: {problems}") from exc


def read_config_file(path: Union[str, Path]) -> dict:
    """Raw mapping from a TOML or JSON config file.

    Raises:
        ConfigInvalid: If the file is missing or cannot be parsed
    """
    path = Path(path)
    if not path.exists():
        raise ConfigInvalid(f"config file not found: {path}")
    try:
        if path.suffix.lower() == ".json":
            return json.loads(path.read_text())
        with path.open("rb") as fh:
            return tomllib.load(fh)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigInvalid(f"cannot parse {path}: {exc}") from exc


def build_run_config(path: Optional[Union[str, Path]] = None, overrides: Optional[dict] = None) -> RunConfig:
    """File values, then overrides (None entries ignored), validated into a RunConfig.

    Raises:
        ConfigInvalid: If any value violates its constraint
    """
    values = read_config_file(path) if path else {}
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key == "datum" and isinstance(value, dict):
            merged = dict(values.get("datum") or {})
            merged.update({k: v for k, v in value.items() if v is not None})
            values["datum"] = merged
        else:
            values[key] = value
    try:
        return RunConfig.model_validate(values)
    except ValidationError as exc:
        _raise_invalid(exc)


def run_config_from_json(text: str) -> RunConfig:
    try:
        return RunConfig.model_validate_json(text)
    except ValidationError as exc:
        _raise_invalid(exc)
