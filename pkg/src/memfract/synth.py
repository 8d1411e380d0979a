import logging
from typing import Optional, Union

import numpy as np
from pydantic import root_validator, validator
from scipy import integrate

from memfract.cvdata import CvRun
from memfract.errors import InputError
from memfract.models import ElementKind, FloatArray, FrozenModel, SweepShape

logger = logging.getLogger(__name__)


class VoltageSweep(FrozenModel):
    time: FloatArray
    voltage: FloatArray
    v_peak: float
    step_delay: float
    shape: SweepShape = SweepShape.BIPOLAR

    @property
    def sweep_range(self) -> tuple[float, float]:
        return (-self.v_peak, self.v_peak)

    @property
    def t_max(self) -> float:
        return float(self.time[-1])


class MemristorParams(FrozenModel):
    """Linear dopant drift memristor (HP model) with an optional Joglekar window."""

    r_on: float = 100.0
    r_off: float = 16e3
    d: float = 10e-9
    mu: float = 1e-14
    w0: Optional[float] = None
    window_exponent: int = 0

    @validator("window_exponent")
    def _non_negative_exponent(cls, value: int) -> int:
        if value < 0:
            raise ValueError("window_exponent must be >= 0")
        return value

    @validator("d", "mu")
    def _positive(cls, value: float) -> float:
        if value <= 0:
            raise ValueError("must be positive")
        return value

    @root_validator(skip_on_failure=True)
    def _consistent_state(cls, values):
        if not 0 < values["r_on"] <= values["r_off"]:
            raise ValueError("need 0 < r_on <= r_off")
        if values["w0"] is None:
            values["w0"] = values["d"] / 2
        if not 0 < values["w0"] < values["d"]:
            raise ValueError("need 0 < w0 < d")
        return values


def triangular_sweep(
    v_peak: float,
    samples: int,
    step_delay: float,
    shape: SweepShape = SweepShape.BIPOLAR,
) -> VoltageSweep:
    """
    Uniformly sampled triangle wave with t_k = k * step_delay.
    BIPOLAR runs 0 -> +V -> -V -> 0, TENT runs -V -> +V -> -V with its vertex at
    mid-record.
    v_peak = 0 is accepted and gives the silent record of an unbiased device;
    such a record has no vertex.
    """
    if samples < 5:
        raise InputError(f"a sweep needs at least 5 samples, got {samples}")
    if v_peak < 0 or step_delay <= 0:
        raise InputError("v_peak must be >= 0 and step_delay > 0")

    k = np.arange(samples)
    if shape is SweepShape.BIPOLAR:
        phase = 4.0 * k / (samples - 1)
        unit = np.where(phase <= 1, phase, np.where(phase <= 3, 2.0 - phase, phase - 4.0))
    else:
        phase = 2.0 * k / (samples - 1)
        unit = np.where(phase <= 1, 2.0 * phase - 1.0, 3.0 - 2.0 * phase)

    return VoltageSweep(
        time=k * step_delay,
        voltage=v_peak * unit,
        v_peak=v_peak,
        step_delay=step_delay,
        shape=shape,
    )


def _joglekar(x: float, exponent: int) -> float:
    if exponent == 0:
        return 1.0
    return 1.0 - (2.0 * x - 1.0) ** (2 * exponent)


def simulate_memristor(params: MemristorParams, sweep: VoltageSweep) -> CvRun:
    """Explicit Euler on the state w at the sample spacing, w clamped to [0, D]."""
    assert params.w0 is not None
    drift = params.mu * params.r_on / params.d
    current = np.zeros_like(sweep.voltage)
    w = params.w0
    for k, v in enumerate(sweep.voltage):
        x = w / params.d
        memristance = params.r_off - (params.r_off - params.r_on) * x
        current[k] = v / memristance
        if k + 1 < len(current):
            dt = sweep.time[k + 1] - sweep.time[k]
            w += dt * drift * current[k] * _joglekar(x, params.window_exponent)
            w = min(max(w, 0.0), params.d)

    logger.debug("memristor state ended at w/D=%s", w / params.d)
    return CvRun(
        time=sweep.time,
        voltage=sweep.voltage,
        current=current,
        sweep_range=sweep.sweep_range,
        step_delay=sweep.step_delay,
        label="synthetic memristor",
    )


def simulate_linear_element(
    kind: Union[ElementKind, str], value: float, sweep: VoltageSweep
) -> CvRun:
    try:
        kind = ElementKind(kind)
    except ValueError as e:
        raise InputError(f"unknown element kind {kind!r}") from e
    if value <= 0:
        raise InputError(f"{kind.value} value must be positive, got {value}")

    if kind is ElementKind.RESISTOR:
        current = sweep.voltage / value
    elif kind is ElementKind.CAPACITOR:
        current = value * np.gradient(sweep.voltage, sweep.time)
    else:
        current = integrate.cumulative_trapezoid(
            sweep.voltage, sweep.time, initial=0.0
        ) / value

    return CvRun(
        time=sweep.time,
        voltage=sweep.voltage,
        current=current,
        sweep_range=sweep.sweep_range,
        step_delay=sweep.step_delay,
        label=f"synthetic {kind.value}",
    )
