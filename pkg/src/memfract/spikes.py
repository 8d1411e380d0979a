import logging
from typing import Sequence

import numpy as np
import pandas as pd
from pydantic import root_validator
from scipy import ndimage, signal, stats

from memfract import consts
from memfract.cvdata import CvRun
from memfract.errors import InputError, TooShortError
from memfract.models import FloatArray, FrozenModel, IndexArray, SweepPhase

logger = logging.getLogger(__name__)


class SpikeTrain(FrozenModel):
    spike_indices: IndexArray
    spike_times: FloatArray
    spike_voltages: FloatArray
    spike_currents: FloatArray
    phases: list[SweepPhase]

    @root_validator(skip_on_failure=True)
    def _ordered_spikes(cls, values):
        indices = values["spike_indices"]
        if np.any(np.diff(indices) <= 0):
            raise ValueError("spike indices must be strictly increasing")
        sizes = {
            len(indices),
            len(values["spike_times"]),
            len(values["spike_voltages"]),
            len(values["spike_currents"]),
            len(values["phases"]),
        }
        if len(sizes) > 1:
            raise ValueError("spike fields must be aligned")
        return values

    @property
    def count(self) -> int:
        return len(self.spike_indices)

    def to_csv(self) -> str:
        frame = pd.DataFrame(
            {
                "index": self.spike_indices,
                "t": self.spike_times,
                "v": self.spike_voltages,
                "i": self.spike_currents,
                "phase": [phase.value for phase in self.phases],
            }
        )
        return frame.to_csv(index=False, lineterminator="\n")


class IntervalHistogram(FrozenModel):
    bin_edges: FloatArray
    counts: IndexArray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def centres(self) -> np.ndarray:
        return (self.bin_edges[:-1] + self.bin_edges[1:]) / 2

    def to_csv(self) -> str:
        frame = pd.DataFrame(
            {
                "bin_start": self.bin_edges[:-1],
                "bin_end": self.bin_edges[1:],
                "count": self.counts,
            }
        )
        return frame.to_csv(index=False, lineterminator="\n")


def _sweep_segments(voltage: np.ndarray) -> list[slice]:
    """Monotone stretches of the sweep, split after each turning point."""
    direction = np.sign(np.diff(voltage))
    for k in range(1, len(direction)):
        if direction[k] == 0:
            direction[k] = direction[k - 1]
    turns = np.nonzero(direction[1:] * direction[:-1] < 0)[0] + 1
    bounds = [0, *(int(turn) + 1 for turn in turns), len(voltage)]
    return [slice(start, stop) for start, stop in zip(bounds[:-1], bounds[1:]) if stop > start]


def _baseline(current: np.ndarray, voltage: np.ndarray, window: int) -> np.ndarray:
    baseline = np.empty_like(current)
    for segment in _sweep_segments(voltage):
        stretch = current[segment]
        size = min(window, len(stretch) if len(stretch) % 2 else len(stretch) - 1)
        baseline[segment] = ndimage.median_filter(stretch, size=max(size, 1), mode="nearest")
    return baseline


def detect_spikes(
    run: CvRun, prominence_k: float = 4.0, window_fraction: float = 0.05
) -> SpikeTrain:
    """
    Spikes are local maxima of |current - moving median| whose prominence reaches
    prominence_k * MAD of that residual. The median runs within each monotone
    stretch of the sweep so the turning points do not read as spikes.
    """
    if run.n_samples < consts.MIN_SPIKE_SAMPLES:
        raise TooShortError(
            f"spike detection needs {consts.MIN_SPIKE_SAMPLES} samples, got {run.n_samples}"
        )
    if prominence_k <= 0:
        raise InputError("prominence_k must be positive")

    window = max(3, int(round(window_fraction * run.n_samples)))
    window += 1 - window % 2
    residual = run.current - _baseline(run.current, run.voltage, window)
    magnitude = np.abs(residual)
    floor = 1e-12 * float(np.max(np.abs(run.current)))
    threshold = max(prominence_k * float(stats.median_abs_deviation(residual)), floor)
    if threshold == 0:
        indices = np.array([], dtype=np.int64)
    else:
        indices, _ = signal.find_peaks(magnitude, prominence=threshold)

    slope = np.gradient(run.voltage, run.time)
    phases = [
        SweepPhase.POSITIVE if slope[index] >= 0 else SweepPhase.NEGATIVE for index in indices
    ]
    logger.info("%s: %d spikes (threshold %.3e A)", run.label or "run", len(indices), threshold)
    return SpikeTrain(
        spike_indices=indices,
        spike_times=run.time[indices],
        spike_voltages=run.voltage[indices],
        spike_currents=run.current[indices],
        phases=phases,
    )


def interval_histogram(train: SpikeTrain, bin_width: float) -> IntervalHistogram:
    """Counts of |dv| between consecutive spikes in bins of bin_width centred on multiples of it."""
    return pooled_interval_histogram([train], bin_width)


def pooled_interval_histogram(trains: Sequence[SpikeTrain], bin_width: float) -> IntervalHistogram:
    """Like interval_histogram, with intervals taken within each train and then pooled."""
    if bin_width <= 0:
        raise InputError(f"bin_width must be positive, got {bin_width}")
    intervals = np.concatenate(
        [np.abs(np.diff(train.spike_voltages)) for train in trains] or [np.array([])]
    )
    if len(intervals) == 0:
        return IntervalHistogram(bin_edges=[], counts=[])

    bins = np.rint(intervals / bin_width).astype(np.int64)
    first, last = int(bins.min()), int(bins.max())
    counts = np.bincount(bins - first, minlength=last - first + 1)
    edges = (np.arange(first, last + 2) - 0.5) * bin_width
    return IntervalHistogram(bin_edges=edges, counts=counts)
