import logging
from typing import Sequence

import numpy as np
from pydantic import root_validator

from memfract import consts
from memfract.cvdata import CvRun
from memfract.errors import OpenSweepError
from memfract.models import FrozenModel

logger = logging.getLogger(__name__)


class ScoreWeights(FrozenModel):
    lobe: float = 0.5
    pinch: float = 0.3
    frequency: float = 0.2
    lobe_gate: float = 0.01
    pinch_gate: float = 0.5

    @root_validator(skip_on_failure=True)
    def _weights_sum_to_one(cls, values):
        weights = (values["lobe"], values["pinch"], values["frequency"])
        if min(weights) < 0 or not np.isclose(sum(weights), 1.0):
            raise ValueError("score weights must be non-negative and sum to 1")
        return values


class MemristanceScore(FrozenModel):
    value: float
    lobe_area_norm: float
    pinch_closeness: float
    frequency_divergence: float
    frequency_available: bool
    weights: ScoreWeights

    @root_validator(skip_on_failure=True)
    def _unit_interval(cls, values):
        for name in ("value", "lobe_area_norm", "pinch_closeness", "frequency_divergence"):
            if not 0.0 <= values[name] <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        return values


def _clamp(value: float) -> float:
    return float(min(max(value, 0.0), 1.0))


def _zero_crossings(voltage: np.ndarray) -> list[tuple[int, float]]:
    """Interior v = 0 crossings as (sample before, interpolation fraction)."""
    crossings = []
    for k in range(1, len(voltage) - 1):
        if voltage[k] == 0 and voltage[k - 1] != 0:
            crossings.append((k, 0.0))
    for k in np.nonzero(voltage[:-1] * voltage[1:] < 0)[0]:
        crossings.append((int(k), float(voltage[k] / (voltage[k] - voltage[k + 1]))))
    return sorted(crossings)


def _shoelace(x: np.ndarray, y: np.ndarray) -> float:
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def lobe_area_norm(run: CvRun) -> float:
    """
    Summed |area| of the I-V lobes between v = 0 crossings, over the summed areas
    of their bounding boxes. Not |signed loop area| / (V_pp * I_pp): the two lobes of a
    pinched loop have opposite orientation and cancel in the signed area, and one
    box over the whole loop dilutes each lobe.
    """
    v, i = run.voltage, run.current
    bounds = [0, *(k + (1 if fraction else 0) for k, fraction in _zero_crossings(v)), len(v) - 1]
    area, box = 0.0, 0.0
    for start, stop in zip(bounds[:-1], bounds[1:]):
        lobe = slice(start, stop + 1)
        if stop - start < 2:
            continue
        area += abs(_shoelace(v[lobe], i[lobe]))
        box += float(np.ptp(v[lobe]) * np.ptp(i[lobe]))
    return _clamp(area / box) if box else 0.0


def pinch_closeness(run: CvRun) -> float:
    v, i = run.voltage, run.current
    peak = float(np.max(np.abs(i)))
    crossings = _zero_crossings(v)
    if peak == 0:
        return 1.0
    if not crossings:
        return 0.0
    at_zero = [
        abs(i[k] + fraction * (i[k + 1] - i[k])) if fraction else abs(i[k])
        for k, fraction in crossings
    ]
    return _clamp(1.0 - max(at_zero) / peak)


def frequency_divergence(runs: Sequence[CvRun]) -> tuple[float, bool]:
    """
    Relative shrinkage of the lobes from the slowest to the fastest sweep.
    Needs runs at two or more step delays.
    """
    delays = sorted({run.step_delay for run in runs})
    if len(delays) < 2:
        return 0.0, False
    by_delay = {delay: [lobe_area_norm(run) for run in runs if run.step_delay == delay] for delay in delays}
    slowest = float(np.mean(by_delay[delays[-1]]))
    fastest = float(np.mean(by_delay[delays[0]]))
    if slowest == 0:
        return 0.0, True
    return _clamp((slowest - fastest) / slowest), True


def memristance_degree(
    run: CvRun,
    companions: Sequence[CvRun] = (),
    weights: ScoreWeights = ScoreWeights(),
) -> MemristanceScore:
    """
    Degree of memristance on [0, 1], 0 for a pure resistor. The pinch term counts
    only with lobes wider than lobe_gate and the lobe term only with a pinch of at
    least pinch_gate. Without companion runs at other step delays the frequency
    weight is spread over the other two components.
    Both gates and the renormalisation depart from a plain fixed-weight mean
    (0.5 lobe, 0.3 pinch, 0.2 frequency): ungated, an open capacitor loop or an ohmic
    line would score through one component alone.
    """
    limit = consts.CLOSED_SWEEP_RTOL * float(np.max(np.abs(run.voltage)))
    if abs(run.voltage[0]) > limit or abs(run.voltage[-1]) > limit:
        raise OpenSweepError(
            f"{run.label or 'run'}: sweep must start and end near 0 V "
            f"(got {run.voltage[0]} and {run.voltage[-1]})"
        )

    lobe = lobe_area_norm(run)
    pinch = pinch_closeness(run)
    divergence, available = frequency_divergence([run, *companions])

    lobe_term = lobe if pinch >= weights.pinch_gate else 0.0
    pinch_term = pinch if lobe > weights.lobe_gate else 0.0
    if available:
        value = weights.lobe * lobe_term + weights.pinch * pinch_term + weights.frequency * divergence
    else:
        value = (weights.lobe * lobe_term + weights.pinch * pinch_term) / (weights.lobe + weights.pinch)

    logger.debug("lobes %.4f pinch %.4f divergence %.4f", lobe, pinch, divergence)
    return MemristanceScore(
        value=_clamp(value),
        lobe_area_norm=lobe,
        pinch_closeness=pinch,
        frequency_divergence=divergence,
        frequency_available=available,
        weights=weights,
    )
