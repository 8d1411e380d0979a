import json
import os
from pathlib import Path
from typing import Any, Optional

from pydantic import BaseModel, Field, validator

from memfract.errors import ConfigError

LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")


def threads_from_env() -> int:
    raw = os.getenv("MEMFRACT_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        return max(1, int(raw))
    except ValueError as e:
        raise ConfigError(f"MEMFRACT_THREADS must be an integer, got {raw!r}") from e


class AnalysisConfig(BaseModel):
    degree: int = 10
    piecewise: bool = False
    alpha_step: float = 0.01
    refine_step: float = 0.001
    grid_points: int = 2001
    scan_points: int = 2000
    singular_delta: float = 1e-9
    time_tolerance: float = 1e-3
    range_tie_rtol: float = 1e-3
    spike_k: float = 4.0
    spike_window: float = 0.05
    interval_bin_width: float = 0.01
    histogram_bins: tuple[int, int] = (50, 50)
    lattice_file: Optional[Path] = None
    output_dir: Path = Path("memfract-output")
    threads: int = Field(default_factory=threads_from_env)

    class Config:
        allow_mutation = False

    @validator("degree")
    def _degree_in_range(cls, value: int) -> int:
        if not 1 <= value <= 40:
            raise ValueError("degree must lie in [1, 40]")
        return value

    @validator("alpha_step")
    def _alpha_step_in_range(cls, value: float) -> float:
        if not 0 < value <= 0.1:
            raise ValueError("alpha_step must lie in (0, 0.1]")
        return value

    @validator("refine_step")
    def _refine_step_positive(cls, value: float) -> float:
        if value <= 0:
            raise ValueError("refine_step must be positive")
        return value

    @validator("grid_points")
    def _enough_grid_points(cls, value: int) -> int:
        if value < 101:
            raise ValueError("grid_points must be at least 101")
        return value

    @validator("scan_points")
    def _enough_scan_points(cls, value: int) -> int:
        if value < 10:
            raise ValueError("scan_points must be at least 10")
        return value

    @validator("singular_delta", "time_tolerance", "spike_k", "interval_bin_width")
    def _strictly_positive(cls, value: float) -> float:
        if value <= 0:
            raise ValueError("must be positive")
        return value

    @validator("range_tie_rtol")
    def _non_negative(cls, value: float) -> float:
        if value < 0:
            raise ValueError("must not be negative")
        return value

    @validator("spike_window")
    def _window_fraction(cls, value: float) -> float:
        if not 0 < value < 1:
            raise ValueError("spike_window is a fraction of the record in (0, 1)")
        return value

    @validator("histogram_bins")
    def _bins_positive(cls, value: tuple[int, int]) -> tuple[int, int]:
        if min(value) < 1:
            raise ValueError("histogram_bins needs at least one bin per axis")
        return value

    @validator("threads")
    def _threads_positive(cls, value: int) -> int:
        return max(1, value)

    @classmethod
    def load(
        cls, config_file: Optional[Path] = None, **overrides: Any
    ) -> "AnalysisConfig":
        """
        Build the configuration with flags > config file > defaults precedence.
        Overrides set to None are treated as "not given".
        """
        values: dict[str, Any] = {}
        if config_file is not None:
            try:
                loaded = json.loads(Path(config_file).read_text())
            except json.JSONDecodeError as e:
                raise ConfigError(f"{config_file}: not a JSON document ({e})") from e
            if not isinstance(loaded, dict):
                raise ConfigError(f"{config_file}: settings must be a JSON object")
            values.update(loaded)
        values.update({key: val for key, val in overrides.items() if val is not None})
        return cls(**values)

    def reported(self) -> dict[str, Any]:
        """The settings that shape the analysis result, without host-dependent ones."""
        return json.loads(self.json(exclude={"threads", "output_dir"}))
