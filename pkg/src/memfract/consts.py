from typing import Final

TIME_COLUMN: Final[str] = "t"
VOLTAGE_COLUMN: Final[str] = "v"
CURRENT_COLUMN: Final[str] = "i"
CSV_COLUMNS: Final[list[str]] = [TIME_COLUMN, VOLTAGE_COLUMN, CURRENT_COLUMN]

SWEEP_RANGE_SLACK: Final[float] = 0.01
RANK_RTOL: Final[float] = 1e-12
POWER_BASIS_WARN: Final[float] = 1e-6
VERTEX_GUARD_RTOL: Final[float] = 1e-6
VERTEX_GUARD_MIN: Final[float] = 1e-6
VERTEX_SCAN_MARGIN: Final[float] = 1e-6
DOMAIN_RTOL: Final[float] = 1e-9
ZERO_XTOL_RTOL: Final[float] = 1e-9
ALPHA_MAX: Final[float] = 2.0
ALPHA_DECIMALS: Final[int] = 12
BARYCENTRIC_TOL: Final[float] = 1e-12
PLANE_CENTRE: Final[tuple[float, float]] = (1.0, 1.0)

MIN_SPIKE_SAMPLES: Final[int] = 21
CLOSED_SWEEP_RTOL: Final[float] = 0.01

CHART_COLORS: Final[list[str]] = [
    "blue",
    "red",
    "green",
    "purple",
    "orange",
    "gray",
]
