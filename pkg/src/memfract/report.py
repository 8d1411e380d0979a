import logging
from typing import Optional, Union

import numpy as np

from memfract.config import AnalysisConfig
from memfract.cvdata import CvRun, Histogram2D, RunSet, average_runs, detect_vertex, envelope_histogram
from memfract.errors import OpenSweepError
from memfract.fraccalc import FracOrderPair
from memfract.memfractance import (
    MemfractanceCurve,
    RangeMap,
    ReconstructionResult,
    ZeroLocus,
    alpha_grid,
    memfractance,
    optimize_orders,
    reconstruct_compare,
    zero_loci,
)
from memfract.models import FloatArray, FrozenModel
from memfract.plane import ClassificationResult, Lattice, classify
from memfract.polyfit import (
    AnyPolyModel,
    FitStats,
    PiecewisePolyModel,
    PolyModel,
    fit_piecewise,
    fit_poly,
)
from memfract.score import MemristanceScore, memristance_degree
from memfract.spikes import IntervalHistogram, SpikeTrain, detect_spikes, pooled_interval_histogram

logger = logging.getLogger(__name__)


class PieceReport(FrozenModel):
    domain: tuple[float, float]
    scale: float
    coefficients: FloatArray
    raw_coefficients: FloatArray
    chebyshev: FloatArray
    power_basis_error: float
    stats: FitStats

    @classmethod
    def create(cls, model: PolyModel, stats: FitStats) -> "PieceReport":
        return cls(
            domain=model.domain,
            scale=model.scale,
            coefficients=model.coefficients,
            raw_coefficients=model.raw_coefficients,
            chebyshev=model.chebyshev,
            power_basis_error=model.power_basis_error,
            stats=stats,
        )

    def to_model(self) -> PolyModel:
        return PolyModel(
            chebyshev=self.chebyshev,
            domain=self.domain,
            scale=self.scale,
            coefficients=self.coefficients,
            power_basis_error=self.power_basis_error,
        )


class FitReport(FrozenModel):
    """A fitted quantity: one piece, or two pieces split at vertex_time."""

    quantity: str
    degree: int
    vertex_time: Optional[float]
    pieces: list[PieceReport]
    antiderivative_jump: Optional[float] = None

    @classmethod
    def create(
        cls, quantity: str, model: AnyPolyModel, stats: Union[FitStats, tuple[FitStats, FitStats]]
    ) -> "FitReport":
        if isinstance(model, PiecewisePolyModel):
            assert isinstance(stats, tuple)
            return cls(
                quantity=quantity,
                degree=model.degree,
                vertex_time=model.vertex_time,
                pieces=[PieceReport.create(model.piece1, stats[0]), PieceReport.create(model.piece2, stats[1])],
                antiderivative_jump=model.flux_jump(),
            )
        assert isinstance(stats, FitStats)
        return cls(
            quantity=quantity,
            degree=model.degree,
            vertex_time=None,
            pieces=[PieceReport.create(model, stats)],
        )

    def to_model(self) -> AnyPolyModel:
        if self.vertex_time is None:
            return self.pieces[0].to_model()
        return PiecewisePolyModel(
            piece1=self.pieces[0].to_model(),
            piece2=self.pieces[1].to_model(),
            vertex_time=self.vertex_time,
        )


class SpikeReport(FrozenModel):
    label: str
    train: SpikeTrain


class FitSummary(FrozenModel):
    inputs: list[str]
    settings: dict
    voltage_fit: FitReport
    current_fit: FitReport


class AnalysisReport(FrozenModel):
    inputs: list[str]
    settings: dict
    t_max: float
    vertex_time: Optional[float]
    voltage_fit: FitReport
    current_fit: FitReport
    reconstruction: ReconstructionResult
    optimum: FracOrderPair
    range_value: float
    relative_range: Optional[float]
    refined: bool
    admissible_couples: list[tuple[float, float]]
    range_map: RangeMap
    denominator_loci: list[ZeroLocus]
    numerator_loci: list[ZeroLocus]
    curve: MemfractanceCurve
    classification: ClassificationResult
    score: Optional[MemristanceScore]
    spikes: list[SpikeReport]
    spike_intervals: IntervalHistogram
    envelope: Histogram2D


def fit_quantity(
    quantity: str, run: CvRun, run_set: RunSet, config: AnalysisConfig
) -> FitReport:
    """Fit one of the "voltage" / "current" series of the run per config."""
    y = run.voltage if quantity == "voltage" else run.current
    if config.piecewise:
        vertex_time = run_set.vertex_time or detect_vertex(run_set)
        model, piece_stats = fit_piecewise(run.time, y, vertex_time, config.degree)
        report = FitReport.create(quantity, model, piece_stats)
        if report.antiderivative_jump:
            logger.warning(
                "%s antiderivative jumps by %s at T=%s (pieces integrated from t=0)",
                quantity,
                report.antiderivative_jump,
                vertex_time,
            )
        return report
    single, stats = fit_poly(run.time, y, config.degree)
    return FitReport.create(quantity, single, stats)


class Analyzer:
    def __init__(self, config: AnalysisConfig):
        self._config = config
        self._lattice = Lattice.load(config.lattice_file)

    def fit(self, run_set: RunSet) -> FitSummary:
        run = average_runs(run_set)
        return FitSummary(
            inputs=[member.label for member in run_set.runs],
            settings=self._config.reported(),
            voltage_fit=fit_quantity("voltage", run, run_set, self._config),
            current_fit=fit_quantity("current", run, run_set, self._config),
        )

    def analyze(self, run_set: RunSet) -> AnalysisReport:
        config = self._config
        run = average_runs(run_set)
        if config.piecewise and run_set.vertex_time is None:
            run_set = run_set.with_vertex_time(detect_vertex(run_set))

        voltage_fit = fit_quantity("voltage", run, run_set, config)
        current_fit = fit_quantity("current", run, run_set, config)
        v_model, i_model = voltage_fit.to_model(), current_fit.to_model()
        logger.info(
            "fits done: voltage R^2 %s, current R^2 %s",
            [piece.stats.r_squared for piece in voltage_fit.pieces],
            [piece.stats.r_squared for piece in current_fit.pieces],
        )

        optimum, coarse_map = optimize_orders(
            v_model,
            i_model,
            alpha_step=config.alpha_step,
            refine_step=config.refine_step,
            time_tolerance=config.time_tolerance,
            grid_points=config.grid_points,
            scan_points=config.scan_points,
            singular_delta=config.singular_delta,
            range_tie_rtol=config.range_tie_rtol,
            threads=config.threads,
        )
        curve = memfractance(
            v_model,
            i_model,
            optimum.orders,
            singular_delta=config.singular_delta,
            grid_points=config.grid_points,
        )
        classification = classify(optimum.orders, self._lattice)
        logger.info(
            "optimum %s, range %s, triangle %s, nearest %s",
            optimum.orders,
            optimum.range_value,
            classification.containing_triangle.name,
            classification.nearest_label,
        )

        alphas = alpha_grid(config.alpha_step)
        spikes = [
            SpikeReport(
                label=member.label,
                train=detect_spikes(member, config.spike_k, config.spike_window),
            )
            for member in run_set.runs
        ]
        intervals = pooled_interval_histogram(
            [spike.train for spike in spikes], config.interval_bin_width
        )
        score = self._score(run, run_set)

        return AnalysisReport(
            inputs=[member.label for member in run_set.runs],
            settings=config.reported(),
            t_max=run.t_max,
            vertex_time=run_set.vertex_time,
            voltage_fit=voltage_fit,
            current_fit=current_fit,
            reconstruction=reconstruct_compare(v_model, i_model, run),
            optimum=optimum.orders,
            range_value=optimum.range_value,
            relative_range=curve.relative_range if np.isfinite(curve.relative_range) else None,
            refined=optimum.refined,
            admissible_couples=[couple.as_tuple() for couple in optimum.admissible],
            range_map=coarse_map,
            denominator_loci=zero_loci(i_model, alphas, config.scan_points, config.threads),
            numerator_loci=zero_loci(v_model, alphas, config.scan_points, config.threads),
            curve=curve,
            classification=classification,
            score=score,
            spikes=spikes,
            spike_intervals=intervals,
            envelope=envelope_histogram(run_set, config.histogram_bins),
        )

    @staticmethod
    def _score(run: CvRun, run_set: RunSet) -> Optional[MemristanceScore]:
        companions = [member for member in run_set.runs if member.step_delay != run.step_delay]
        try:
            return memristance_degree(run, companions)
        except OpenSweepError as e:
            logger.warning("memristance score skipped: %s", e)
            return None
