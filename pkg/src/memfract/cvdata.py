import io
import logging
from typing import BinaryIO, Optional, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError, root_validator, validator

from memfract import consts
from memfract.errors import (
    CsvParseError,
    CvValidationError,
    InputError,
    NoVertexError,
    ShapeError,
    TooShortError,
)
from memfract.models import FloatArray, FrozenModel, IndexArray

logger = logging.getLogger(__name__)


class CvRun(FrozenModel):
    time: FloatArray
    voltage: FloatArray
    current: FloatArray
    sweep_range: tuple[float, float]
    step_delay: float
    label: str = ""

    @validator("step_delay")
    def _positive_step_delay(cls, value: float) -> float:
        if value <= 0:
            raise ValueError("step_delay must be positive")
        return value

    @root_validator(skip_on_failure=True)
    def _aligned_samples(cls, values):
        time, voltage, current = values["time"], values["voltage"], values["current"]
        if time.ndim != 1 or not len(time) == len(voltage) == len(current):
            raise ValueError("time, voltage and current must be aligned 1-D arrays")
        if len(time) < 3:
            raise ValueError("a run needs at least 3 samples")
        if not np.all(np.isfinite(time) & np.isfinite(voltage) & np.isfinite(current)):
            raise ValueError("samples must be finite")
        if time[0] < 0:
            raise ValueError("first time must not be negative")
        if np.any(np.diff(time) <= 0):
            raise ValueError("time must be strictly increasing")
        limit = max(abs(bound) for bound in values["sweep_range"])
        if np.max(np.abs(voltage)) > limit * (1 + consts.SWEEP_RANGE_SLACK):
            raise ValueError(
                f"voltage leaves the sweep range {values['sweep_range']} beyond 1% slack"
            )
        return values

    @property
    def n_samples(self) -> int:
        return len(self.time)

    @property
    def t_max(self) -> float:
        return float(self.time[-1])


class RunSet(FrozenModel):
    runs: list[CvRun]
    vertex_time: Optional[float] = None

    @validator("runs")
    def _same_sample_count(cls, runs: list[CvRun]) -> list[CvRun]:
        if len({run.n_samples for run in runs}) > 1:
            raise ValueError("all runs of a set must have the same sample count")
        return runs

    @root_validator(skip_on_failure=True)
    def _vertex_inside_record(cls, values):
        vertex_time, runs = values.get("vertex_time"), values["runs"]
        if vertex_time is not None:
            t_max = max(run.t_max for run in runs) if runs else 0.0
            if not 0 < vertex_time < t_max:
                raise ValueError(f"vertex time {vertex_time} outside (0, {t_max})")
        return values

    @property
    def t_max(self) -> float:
        return max(run.t_max for run in self.runs)

    def with_vertex_time(self, vertex_time: float) -> "RunSet":
        return RunSet(runs=self.runs, vertex_time=vertex_time)


class Histogram2D(FrozenModel):
    t_edges: FloatArray
    y_edges: FloatArray
    counts: IndexArray
    quantity: str = "current"

    @root_validator(skip_on_failure=True)
    def _matrix_matches_edges(cls, values):
        counts = values["counts"]
        expected = (len(values["t_edges"]) - 1, len(values["y_edges"]) - 1)
        if counts.shape != expected:
            raise ValueError(f"counts shape {counts.shape} != {expected}")
        if np.any(counts < 0):
            raise ValueError("counts must not be negative")
        return values

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def to_csv(self) -> str:
        """Matrix with one row per time bin, preceded by the two edge rows."""
        y_name = "i_edges" if self.quantity == "current" else "v_edges"
        lines = [
            ",".join(["t_edges", *(repr(float(e)) for e in self.t_edges)]),
            ",".join([y_name, *(repr(float(e)) for e in self.y_edges)]),
        ]
        matrix = pd.DataFrame(self.counts)
        return "\n".join(lines) + "\n" + matrix.to_csv(header=False, index=False)


def parse_cv_csv(
    source: Union[BinaryIO, bytes],
    sweep_range: Optional[tuple[float, float]] = None,
    step_delay: Optional[float] = None,
    label: str = "",
) -> CvRun:
    """
    Parse a `t,v,i` CSV into a CvRun.
    When the sweep metadata is not given it is inferred from the data: the voltage
    extent for the range and the median sample spacing for the step delay.
    """
    raw = source if isinstance(source, bytes) else source.read()
    try:
        frame = pd.read_csv(
            io.BytesIO(raw),
            dtype=str,
            encoding="utf-8-sig",
            skipinitialspace=True,
            keep_default_na=False,
        )
    except (pd.errors.EmptyDataError, pd.errors.ParserError, UnicodeDecodeError) as e:
        raise CsvParseError(f"{label or 'input'}: unreadable CSV ({e})") from e

    columns = [str(column).strip() for column in frame.columns]
    if columns != consts.CSV_COLUMNS:
        raise CsvParseError(
            f"{label or 'input'}: expected header {','.join(consts.CSV_COLUMNS)}, "
            f"got {','.join(columns)}"
        )
    frame.columns = columns
    if len(frame) < 3:
        raise TooShortError(
            f"{label or 'input'}: {len(frame)} rows, at least 3 are required"
        )

    numeric = frame.apply(lambda column: pd.to_numeric(column.str.strip(), errors="coerce"))
    bad_rows = numeric.isna().any(axis=1).to_numpy().nonzero()[0]
    if len(bad_rows):
        row = int(bad_rows[0]) + 1
        cells = ",".join(frame.iloc[row - 1].tolist())
        raise CsvParseError(
            f"{label or 'input'}: row {row} ({cells}) is not numeric", row=row
        )

    time = numeric[consts.TIME_COLUMN].to_numpy(dtype=float)
    voltage = numeric[consts.VOLTAGE_COLUMN].to_numpy(dtype=float)
    current = numeric[consts.CURRENT_COLUMN].to_numpy(dtype=float)
    if sweep_range is None:
        sweep_range = (float(voltage.min()), float(voltage.max()))
    if step_delay is None:
        spacing = np.diff(time)
        step_delay = float(np.median(spacing)) if np.all(spacing > 0) else 1.0

    try:
        run = CvRun(
            time=time,
            voltage=voltage,
            current=current,
            sweep_range=sweep_range,
            step_delay=step_delay,
            label=label,
        )
    except ValidationError as e:
        raise CvValidationError(f"{label or 'input'}: {e}") from e

    logger.debug("parsed %s: %d samples up to t=%s", label, run.n_samples, run.t_max)
    return run


def write_cv_csv(run: CvRun) -> str:
    frame = pd.DataFrame(
        {
            consts.TIME_COLUMN: run.time,
            consts.VOLTAGE_COLUMN: run.voltage,
            consts.CURRENT_COLUMN: run.current,
        }
    )
    return frame.to_csv(index=False, lineterminator="\n")


def average_runs(run_set: RunSet) -> CvRun:
    runs = run_set.runs
    if not runs:
        raise ShapeError("cannot average an empty run set")
    lengths = {run.n_samples for run in runs}
    if len(lengths) > 1:
        raise ShapeError(f"runs differ in length: {sorted(lengths)}")

    def index_mean(arrays: list[np.ndarray]) -> np.ndarray:
        # sorting across runs makes the sum independent of run order
        return np.sort(np.stack(arrays), axis=0).mean(axis=0)

    first = runs[0]
    averaged = CvRun(
        time=index_mean([run.time for run in runs]),
        voltage=index_mean([run.voltage for run in runs]),
        current=index_mean([run.current for run in runs]),
        sweep_range=first.sweep_range,
        step_delay=first.step_delay,
        label=first.label if len(runs) == 1 else f"average of {len(runs)} runs",
    )
    logger.info("averaged %d runs of %d samples", len(runs), first.n_samples)
    return averaged


def detect_vertex(run_set: RunSet) -> float:
    """
    Mean over runs of the time of the global max |v|, the earliest interior sample
    on ties. A max held only by the first or last sample is no vertex, and the
    sample must be a turning point of the sweep.
    """
    if not run_set.runs:
        raise InputError("cannot detect a vertex in an empty run set")

    vertices = []
    for run in run_set.runs:
        v = run.voltage
        magnitude = np.abs(v)
        interior = np.flatnonzero(magnitude[1:-1] == magnitude.max())
        if len(interior) == 0:
            raise NoVertexError(
                f"{run.label or 'run'}: max |v| lies at the record boundary, no interior vertex"
            )
        index = 1 + int(interior[0])
        if (v[index] - v[index - 1]) * (v[index + 1] - v[index]) > 0 or np.ptp(v) == 0:
            raise NoVertexError(
                f"{run.label or 'run'}: max |v| (sample {index}) is not a turning point "
                "of the sweep, no interior vertex"
            )
        vertices.append(float(run.time[index]))

    vertex_time = float(np.mean(vertices))
    logger.info("vertex time T=%s from %d runs", vertex_time, len(vertices))
    return vertex_time


def envelope_histogram(
    run_set: RunSet, bins: tuple[int, int], quantity: str = "current"
) -> Histogram2D:
    if not run_set.runs:
        raise InputError("cannot histogram an empty run set")
    if min(bins) < 1:
        raise InputError(f"bins must be >= 1 on each axis, got {bins}")
    if quantity not in ("current", "voltage"):
        raise InputError(f"unknown histogram quantity {quantity!r}")

    time = np.concatenate([run.time for run in run_set.runs])
    values = np.concatenate(
        [run.current if quantity == "current" else run.voltage for run in run_set.runs]
    )
    counts, t_edges, y_edges = np.histogram2d(
        time,
        values,
        bins=list(bins),
        range=[[time.min(), time.max()], [values.min(), values.max()]],
    )
    return Histogram2D(
        t_edges=t_edges,
        y_edges=y_edges,
        counts=counts.astype(np.int64),
        quantity=quantity,
    )
