import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional

import numpy as np
from pydantic import validator
from scipy import optimize

from memfract import consts
from memfract.config import threads_from_env
from memfract.cvdata import CvRun
from memfract.errors import DegenerateCurveError, DomainError, InputError, NoAdmissibleCoupleError
from memfract.fraccalc import FracOrderPair, rl_derivative, vertex_guard
from memfract.models import FloatArray, FrozenModel
from memfract.polyfit import AnyPolyModel, FitStats, PiecewisePolyModel, fit_stats

logger = logging.getLogger(__name__)


class MemfractanceCurve(FrozenModel):
    orders: FracOrderPair
    t_grid: FloatArray
    values: FloatArray
    singular_points: list[float]
    range_value: float

    @validator("values")
    def _finite(cls, values: np.ndarray) -> np.ndarray:
        if not np.all(np.isfinite(values)):
            raise ValueError("memfractance values must be finite on retained points")
        return values

    @property
    def median(self) -> float:
        return float(np.median(self.values))

    @property
    def relative_range(self) -> float:
        median = abs(self.median)
        return self.range_value / median if median else float("inf")


class ZeroLocus(FrozenModel):
    parameter: float
    zeros: list[float]


class OrderOptimum(FrozenModel):
    orders: FracOrderPair
    range_value: float
    admissible: list[FracOrderPair]
    refined: bool


class RangeMap(FrozenModel):
    """range(F_M) over the alpha grid, rows alpha1 and columns alpha2; None where undefined."""

    alphas: list[float]
    ranges: list[list[Optional[float]]]
    admissible: list[list[bool]]


class ReconstructionResult(FrozenModel):
    voltage_stats: FitStats
    current_stats: FitStats
    time: FloatArray
    voltage: FloatArray
    current: FloatArray
    voltage_model: FloatArray
    current_model: FloatArray


def alpha_grid(step: float, lo: float = 0.0, hi: float = consts.ALPHA_MAX) -> np.ndarray:
    """Orders lo, lo + step, ..., hi rounded so that integer orders are exact."""
    if not 0 < step <= 0.1:
        raise InputError(f"alpha step must lie in (0, 0.1], got {step}")
    count = int(round((hi - lo) / step))
    alphas = np.round(lo + np.arange(count + 1) * step, consts.ALPHA_DECIMALS)
    return np.unique(np.clip(alphas, 0.0, consts.ALPHA_MAX))


def _vertex_time(*models: AnyPolyModel) -> Optional[float]:
    for model in models:
        if isinstance(model, PiecewisePolyModel):
            return model.vertex_time
    return None


def _guard(*models: AnyPolyModel) -> float:
    for model in models:
        if isinstance(model, PiecewisePolyModel):
            return vertex_guard(model)
    return 0.0


def _shared_domain(v_model: AnyPolyModel, i_model: AnyPolyModel) -> tuple[float, float]:
    if not np.allclose(v_model.domain, i_model.domain, rtol=consts.DOMAIN_RTOL, atol=0):
        raise DomainError(
            f"voltage and current models differ in domain: {v_model.domain} vs {i_model.domain}"
        )
    return v_model.domain


def evaluation_grid(
    domain: tuple[float, float], points: int, vertex_time: Optional[float] = None, guard: float = 0.0
) -> np.ndarray:
    """Uniform grid over the domain without t <= 0 and without the vertex neighbourhood."""
    grid = np.linspace(domain[0], domain[1], points)
    grid = grid[grid > 0]
    if vertex_time is not None:
        grid = grid[np.abs(grid - vertex_time) >= guard]
    return grid


def _scan_intervals(
    domain: tuple[float, float], vertex_time: Optional[float], guard: float
) -> list[tuple[float, float]]:
    lo, hi = domain
    if lo <= 0:
        lo = (hi - lo) * 1e-6
    if vertex_time is None:
        return [(lo, hi)]
    # endpoints must stay outside the guard once rounded, so |t - T| >= guard holds on them
    margin = guard * (1 + consts.VERTEX_SCAN_MARGIN)
    return [(lo, vertex_time - margin), (vertex_time + margin, hi)]


def function_zeros(
    function: Callable[[np.ndarray], np.ndarray],
    intervals: list[tuple[float, float]],
    scan_points: int,
    xtol: float,
) -> list[float]:
    """
    Roots of function found by a sign-change scan refined with bisection.
    Scan points where the function is exactly 0 are roots too.
    """
    total = sum(hi - lo for lo, hi in intervals)
    zeros: list[float] = []
    for lo, hi in intervals:
        if hi <= lo:
            continue
        points = max(int(round(scan_points * (hi - lo) / total)), 2)
        grid = np.linspace(lo, hi, points)
        values = function(grid)
        zeros.extend(float(t) for t in grid[values == 0])
        for k in np.nonzero(values[:-1] * values[1:] < 0)[0]:
            root = optimize.root_scalar(
                lambda t: float(function(np.array([t]))[0]),
                bracket=[grid[k], grid[k + 1]],
                method="bisect",
                xtol=xtol,
            )
            zeros.append(float(root.root))
    return sorted(zeros)


def _derivative_zeros(
    model: AnyPolyModel, alpha: float, interval: Optional[tuple[float, float]], scan_points: int
) -> ZeroLocus:
    antiderivative = model.antiderivative()
    domain = interval or model.domain
    if not model.contains(np.array(domain)):
        raise DomainError(f"interval {domain} outside the model domain {model.domain}")
    intervals = _scan_intervals(domain, _vertex_time(model), _guard(model))
    zeros = function_zeros(
        lambda t: np.asarray(rl_derivative(antiderivative, alpha, t)),
        intervals,
        scan_points,
        xtol=consts.ZERO_XTOL_RTOL * model.domain[1],
    )
    return ZeroLocus(parameter=alpha, zeros=zeros)


def denominator_zeros(
    i_model: AnyPolyModel,
    alpha2: float,
    interval: Optional[tuple[float, float]] = None,
    scan_points: int = 2000,
) -> ZeroLocus:
    """Zeros t*(alpha2) of the RL derivative of the charge."""
    return _derivative_zeros(i_model, alpha2, interval, scan_points)


def numerator_zeros(
    v_model: AnyPolyModel,
    alpha1: float,
    interval: Optional[tuple[float, float]] = None,
    scan_points: int = 2000,
) -> ZeroLocus:
    """Zeros t*(alpha1) of the RL derivative of the flux."""
    return _derivative_zeros(v_model, alpha1, interval, scan_points)


def zero_loci(
    model: AnyPolyModel,
    alphas: np.ndarray,
    scan_points: int = 2000,
    threads: Optional[int] = None,
) -> list[ZeroLocus]:
    with ThreadPoolExecutor(max_workers=threads or threads_from_env()) as executor:
        return list(
            executor.map(
                lambda alpha: _derivative_zeros(model, float(alpha), None, scan_points), alphas
            )
        )


def memfractance(
    v_model: AnyPolyModel,
    i_model: AnyPolyModel,
    orders: FracOrderPair,
    grid: Optional[np.ndarray] = None,
    singular_delta: float = 1e-9,
    grid_points: int = 2001,
) -> MemfractanceCurve:
    """
    F = D^alpha1(flux) / D^alpha2(charge) on the grid.
    Grid points where |denominator| < singular_delta * max|denominator| are singular
    and dropped, together with the roots of the denominator between grid points.
    """
    domain = _shared_domain(v_model, i_model)
    vertex_time, guard = _vertex_time(v_model, i_model), _guard(v_model, i_model)
    if grid is None:
        grid = evaluation_grid(domain, grid_points, vertex_time, guard)
    grid = np.asarray(grid, dtype=float)

    charge = i_model.antiderivative()
    numerator = np.asarray(rl_derivative(v_model.antiderivative(), orders.alpha1, grid))
    denominator = np.asarray(rl_derivative(charge, orders.alpha2, grid))

    threshold = singular_delta * float(np.max(np.abs(denominator)))
    singular = np.abs(denominator) < threshold
    if threshold == 0 or np.all(singular):
        raise DegenerateCurveError(f"denominator vanishes on the whole grid for orders {orders}")

    crossings = np.nonzero(denominator[:-1] * denominator[1:] < 0)[0]
    if vertex_time is not None:
        crossings = crossings[~((grid[crossings] < vertex_time) & (grid[crossings + 1] > vertex_time))]
    roots = [
        optimize.root_scalar(
            lambda t: float(rl_derivative(charge, orders.alpha2, t)),
            bracket=[grid[k], grid[k + 1]],
            method="bisect",
            xtol=consts.ZERO_XTOL_RTOL * domain[1],
        ).root
        for k in crossings
    ]
    singular_points = sorted([float(t) for t in grid[singular]] + [float(t) for t in roots])

    values = numerator[~singular] / denominator[~singular]
    if singular_points:
        logger.debug("orders %s: %d singular points", orders, len(singular_points))
    return MemfractanceCurve(
        orders=orders,
        t_grid=grid[~singular],
        values=values,
        singular_points=singular_points,
        range_value=float(np.ptp(values)),
    )


class _Scan:
    """Derivative curves and zero loci of both models over a set of orders."""

    def __init__(
        self,
        v_model: AnyPolyModel,
        i_model: AnyPolyModel,
        grid: np.ndarray,
        scan_points: int,
        singular_delta: float,
        threads: int,
    ):
        self._v_model = v_model
        self._i_model = i_model
        self._flux = v_model.antiderivative()
        self._charge = i_model.antiderivative()
        self._grid = grid
        self._scan_points = scan_points
        self._singular_delta = singular_delta
        self._threads = threads

    def _numerator(self, alpha: float) -> tuple[np.ndarray, list[float]]:
        curve = np.asarray(rl_derivative(self._flux, alpha, self._grid))
        return curve, _derivative_zeros(self._v_model, alpha, None, self._scan_points).zeros

    def _denominator(self, alpha: float) -> tuple[np.ndarray, list[float]]:
        curve = np.asarray(rl_derivative(self._charge, alpha, self._grid))
        return curve, _derivative_zeros(self._i_model, alpha, None, self._scan_points).zeros

    def run(
        self, alphas1: np.ndarray, alphas2: np.ndarray
    ) -> tuple[np.ndarray, list[list[float]], np.ndarray, list[list[float]]]:
        with ThreadPoolExecutor(max_workers=self._threads) as executor:
            numerators = list(executor.map(self._numerator, [float(a) for a in alphas1]))
            denominators = list(executor.map(self._denominator, [float(a) for a in alphas2]))
        return (
            np.array([curve for curve, _ in numerators]),
            [zeros for _, zeros in numerators],
            np.array([curve for curve, _ in denominators]),
            [zeros for _, zeros in denominators],
        )

    def ranges(self, numerators: np.ndarray, denominators: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """range(F_M) and median(F_M) for every (alpha1, alpha2); nan where degenerate."""
        ranges = np.full((len(numerators), len(denominators)), np.nan)
        medians = np.full_like(ranges, np.nan)
        for column, denominator in enumerate(denominators):
            threshold = self._singular_delta * np.max(np.abs(denominator))
            kept = np.abs(denominator) >= threshold
            if threshold == 0 or not kept.any():
                continue
            with np.errstate(over="ignore", invalid="ignore"):
                ratios = numerators[:, kept] / denominator[kept]
                ranges[:, column] = np.ptp(ratios, axis=1)
                medians[:, column] = np.median(ratios, axis=1)
        ranges[~np.isfinite(ranges)] = np.nan
        return ranges, medians


def _admissible_mask(
    numerator_zeros_: list[list[float]],
    denominator_zeros_: list[list[float]],
    tolerance: float,
) -> np.ndarray:
    """A couple is admissible when every denominator zero has a numerator zero within tolerance."""
    mask = np.zeros((len(numerator_zeros_), len(denominator_zeros_)), dtype=bool)
    for row, num in enumerate(numerator_zeros_):
        num_arr = np.array(num)
        for column, den in enumerate(denominator_zeros_):
            if not den:
                mask[row, column] = True
            elif len(num_arr):
                gaps = np.abs(np.array(den)[:, None] - num_arr[None, :]).min(axis=1)
                mask[row, column] = bool(np.all(gaps <= tolerance))
    return mask


def admissible_couples(
    v_model: AnyPolyModel,
    i_model: AnyPolyModel,
    alpha_step: float = 0.01,
    time_tolerance: float = 1e-3,
    scan_points: int = 2000,
    threads: Optional[int] = None,
) -> list[FracOrderPair]:
    """
    Couples of the alpha grid whose denominator singularities are all removable:
    each zero t*(alpha2) coincides with a zero t*(alpha1) within time_tolerance * t_max.
    """
    domain = _shared_domain(v_model, i_model)
    alphas = alpha_grid(alpha_step)
    scan = _Scan(
        v_model, i_model, np.array([domain[1]]), scan_points, 1e-9, threads or threads_from_env()
    )
    _, num_zeros, _, den_zeros = scan.run(alphas, alphas)
    mask = _admissible_mask(num_zeros, den_zeros, time_tolerance * domain[1])
    return [
        FracOrderPair(alpha1=alphas[row], alpha2=alphas[column])
        for row, column in zip(*np.nonzero(mask))
    ]


def _best_cell(
    ranges: np.ndarray,
    medians: np.ndarray,
    mask: np.ndarray,
    alphas1: np.ndarray,
    alphas2: np.ndarray,
    tie_rtol: float,
) -> Optional[tuple[int, int]]:
    """
    Minimum range among admissible cells. Cells within tie_rtol * |median F| of the
    minimum tie and are ordered by distance to the plane centre, then alpha1, then alpha2.
    This replaces a plain smallest-alpha1-then-alpha2 tie break, which would move an
    ideal resistor off (1, 1) whenever rounding leaves a neighbouring cell level with it.
    """
    candidates = mask & np.isfinite(ranges)
    if not candidates.any():
        return None
    best = np.nanmin(np.where(candidates, ranges, np.nan))
    row, column = np.argwhere(candidates & (ranges == best))[0]
    band = tie_rtol * abs(medians[row, column])
    tied = np.argwhere(candidates & (ranges <= best + band))
    centre_a1, centre_a2 = consts.PLANE_CENTRE
    return min(
        (
            (
                round(float(np.hypot(alphas1[r] - centre_a1, alphas2[c] - centre_a2)), consts.ALPHA_DECIMALS),
                float(alphas1[r]),
                float(alphas2[c]),
            ),
            (int(r), int(c)),
        )
        for r, c in tied
    )[1]


def range_map(
    v_model: AnyPolyModel,
    i_model: AnyPolyModel,
    alpha_step: float = 0.01,
    time_tolerance: float = 1e-3,
    grid_points: int = 2001,
    scan_points: int = 2000,
    singular_delta: float = 1e-9,
    threads: Optional[int] = None,
) -> RangeMap:
    domain = _shared_domain(v_model, i_model)
    grid = evaluation_grid(domain, grid_points, _vertex_time(v_model, i_model), _guard(v_model, i_model))
    alphas = alpha_grid(alpha_step)
    scan = _Scan(v_model, i_model, grid, scan_points, singular_delta, threads or threads_from_env())
    numerators, num_zeros, denominators, den_zeros = scan.run(alphas, alphas)
    ranges, _ = scan.ranges(numerators, denominators)
    mask = _admissible_mask(num_zeros, den_zeros, time_tolerance * domain[1])
    return RangeMap(
        alphas=[float(a) for a in alphas],
        ranges=[[None if np.isnan(r) else float(r) for r in row] for row in ranges],
        admissible=mask.tolist(),
    )


def optimize_orders(
    v_model: AnyPolyModel,
    i_model: AnyPolyModel,
    alpha_step: float = 0.01,
    refine_step: Optional[float] = 0.001,
    time_tolerance: float = 1e-3,
    grid_points: int = 2001,
    scan_points: int = 2000,
    singular_delta: float = 1e-9,
    range_tie_rtol: float = 1e-3,
    threads: Optional[int] = None,
) -> tuple[OrderOptimum, RangeMap]:
    """
    Grid search of the admissible couple of minimal range(F_M), followed by one
    refinement pass at refine_step within one coarse step of the coarse optimum.
    """
    domain = _shared_domain(v_model, i_model)
    grid = evaluation_grid(domain, grid_points, _vertex_time(v_model, i_model), _guard(v_model, i_model))
    threads = threads or threads_from_env()
    tolerance = time_tolerance * domain[1]
    scan = _Scan(v_model, i_model, grid, scan_points, singular_delta, threads)

    alphas = alpha_grid(alpha_step)
    numerators, num_zeros, denominators, den_zeros = scan.run(alphas, alphas)
    ranges, medians = scan.ranges(numerators, denominators)
    mask = _admissible_mask(num_zeros, den_zeros, tolerance)
    coarse_map = RangeMap(
        alphas=[float(a) for a in alphas],
        ranges=[[None if np.isnan(r) else float(r) for r in row] for row in ranges],
        admissible=mask.tolist(),
    )
    admissible = [
        FracOrderPair(alpha1=alphas[r], alpha2=alphas[c]) for r, c in zip(*np.nonzero(mask))
    ]
    cell = _best_cell(ranges, medians, mask, alphas, alphas, range_tie_rtol)
    if cell is None:
        raise NoAdmissibleCoupleError(
            f"no admissible (alpha1, alpha2) couple on the {alpha_step} grid; "
            "try a finer alpha_step or a looser time_tolerance"
        )
    best = (float(alphas[cell[0]]), float(alphas[cell[1]]))
    best_range = float(ranges[cell])
    logger.info("coarse optimum %s with range %s among %d admissible couples", best, best_range, len(admissible))

    refined = False
    if refine_step:
        local1 = alpha_grid(refine_step, max(best[0] - alpha_step, 0.0), min(best[0] + alpha_step, consts.ALPHA_MAX))
        local2 = alpha_grid(refine_step, max(best[1] - alpha_step, 0.0), min(best[1] + alpha_step, consts.ALPHA_MAX))
        numerators, num_zeros, denominators, den_zeros = scan.run(local1, local2)
        local_ranges, local_medians = scan.ranges(numerators, denominators)
        local_mask = _admissible_mask(num_zeros, den_zeros, tolerance)
        local_cell = _best_cell(local_ranges, local_medians, local_mask, local1, local2, range_tie_rtol)
        if local_cell is not None and local_ranges[local_cell] < best_range:
            best = (float(local1[local_cell[0]]), float(local2[local_cell[1]]))
            best_range = float(local_ranges[local_cell])
            refined = True
            logger.info("refined optimum %s with range %s", best, best_range)

    optimum = OrderOptimum(
        orders=FracOrderPair(alpha1=best[0], alpha2=best[1]),
        range_value=best_range,
        admissible=admissible,
        refined=refined,
    )
    return optimum, coarse_map


def reconstruct_compare(v_model: AnyPolyModel, i_model: AnyPolyModel, run: CvRun) -> ReconstructionResult:
    if not (v_model.contains(run.time) and i_model.contains(run.time)):
        raise DomainError(
            f"run times [{run.time[0]}, {run.t_max}] leave the model domain {v_model.domain}"
        )
    voltage_model = np.asarray(v_model(run.time))
    current_model = np.asarray(i_model(run.time))
    return ReconstructionResult(
        voltage_stats=fit_stats(run.voltage, voltage_model),
        current_stats=fit_stats(run.current, current_model),
        time=run.time,
        voltage=run.voltage,
        current=run.current,
        voltage_model=voltage_model,
        current_model=current_model,
    )
