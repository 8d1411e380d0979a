import logging
from pathlib import Path

import numpy as np
import plotly.graph_objects as graph_objects  # type: ignore
from plotly import express

from memfract import consts
from memfract.report import AnalysisReport

logger = logging.getLogger(__name__)


class Plotter:
    """SVG views of an AnalysisReport. Every figure reads the report only."""

    def __init__(self, output_dir: Path):
        self._output_dir = Path(output_dir)

    def create_all(self, report: AnalysisReport) -> list[Path]:
        self._output_dir.mkdir(parents=True, exist_ok=True)
        return [
            self.create_zero_locus_graph(report),
            self.create_range_heatmap(report),
            self.create_memfractance_graph(report),
            self.create_reconstruction_graph(report),
            self.create_spike_interval_graph(report),
            self.create_envelope_heatmap(report),
        ]

    def create_zero_locus_graph(self, report: AnalysisReport) -> Path:
        fig = graph_objects.Figure()
        for name, loci, color in (
            ("denominator zeros", report.denominator_loci, consts.CHART_COLORS[0]),
            ("numerator zeros", report.numerator_loci, consts.CHART_COLORS[1]),
        ):
            alphas = [locus.parameter for locus in loci for _ in locus.zeros]
            zeros = [zero for locus in loci for zero in locus.zeros]
            fig.add_trace(
                graph_objects.Scatter(
                    x=alphas,
                    y=zeros,
                    name=name,
                    mode="markers",
                    marker=dict(color=color, size=4),
                )
            )

        fig.update_layout(
            title_text="Zero locus of the fractional derivatives",
            font_family="Arial",
            font_size=12,
            xaxis_title="alpha",
            yaxis_title="t* (s)",
            yaxis=dict(range=[0, report.t_max], showgrid=True, gridcolor="lightgray"),
        )
        return self._write(fig, "zero_locus")

    def create_range_heatmap(self, report: AnalysisReport) -> Path:
        range_map = report.range_map
        ranges = np.array(
            [[np.nan if r is None else r for r in row] for row in range_map.ranges], dtype=float
        )
        masked = np.where(np.array(range_map.admissible), ranges, np.nan)
        fig = graph_objects.Figure(
            data=graph_objects.Heatmap(
                x=range_map.alphas,
                y=range_map.alphas,
                z=np.log10(np.clip(masked, np.finfo(float).tiny, None)),
                colorscale=express.colors.sequential.Viridis,
                colorbar=dict(title="log10 range"),
            )
        )
        fig.add_trace(
            graph_objects.Scatter(
                x=[report.optimum.alpha2],
                y=[report.optimum.alpha1],
                name=f"optimum {report.optimum}",
                mode="markers",
                marker=dict(color=consts.CHART_COLORS[1], size=10, symbol="x"),
            )
        )

        fig.update_layout(
            title_text="Range of the memfractance over admissible couples",
            font_family="Arial",
            font_size=12,
            xaxis_title="alpha2",
            yaxis_title="alpha1",
        )
        return self._write(fig, "range_heatmap")

    def create_memfractance_graph(self, report: AnalysisReport) -> Path:
        curve = report.curve
        fig = graph_objects.Figure()
        fig.add_trace(
            graph_objects.Scatter(
                x=curve.t_grid,
                y=curve.values,
                name=f"F_M at {curve.orders}",
                mode="lines",
                line=dict(color=consts.CHART_COLORS[0]),
            )
        )
        for point in curve.singular_points:
            fig.add_vline(x=point, line=dict(color=consts.CHART_COLORS[5], dash="dot"))

        fig.update_layout(
            title_text=f"Memfractance, range {report.range_value:.4g}",
            font_family="Arial",
            font_size=12,
            xaxis_title="t (s)",
            yaxis_title="F_M",
        )
        return self._write(fig, "memfractance")

    def create_reconstruction_graph(self, report: AnalysisReport) -> Path:
        reconstruction = report.reconstruction
        fig = graph_objects.Figure()
        for name, series, color, dash in (
            ("v measured", reconstruction.voltage, consts.CHART_COLORS[0], "solid"),
            ("v fitted", reconstruction.voltage_model, consts.CHART_COLORS[0], "dash"),
            ("i measured", reconstruction.current, consts.CHART_COLORS[1], "solid"),
            ("i fitted", reconstruction.current_model, consts.CHART_COLORS[1], "dash"),
        ):
            fig.add_trace(
                graph_objects.Scatter(
                    x=reconstruction.time,
                    y=series,
                    name=name,
                    mode="lines",
                    line=dict(color=color, dash=dash),
                    yaxis="y2" if name.startswith("i") else "y",
                )
            )

        fig.update_layout(
            title_text=(
                f"Reconstruction, R^2 v={reconstruction.voltage_stats.r_squared:.5f} "
                f"i={reconstruction.current_stats.r_squared:.5f}"
            ),
            font_family="Arial",
            font_size=12,
            xaxis_title="t (s)",
            yaxis=dict(title="v (V)"),
            yaxis2=dict(title="i (A)", overlaying="y", side="right"),
        )
        return self._write(fig, "reconstruction")

    def create_spike_interval_graph(self, report: AnalysisReport) -> Path:
        histogram = report.spike_intervals
        fig = graph_objects.Figure()
        fig.add_trace(
            graph_objects.Bar(
                x=histogram.centres,
                y=histogram.counts,
                name="intervals",
                marker=dict(
                    color=consts.CHART_COLORS[2],
                    line=dict(color="rgba(0, 0, 0, 0.5)", width=1),
                ),
                text=histogram.counts,
                textposition="auto",
            )
        )

        fig.update_layout(
            title_text="Voltage intervals between consecutive spikes",
            font_family="Arial",
            font_size=12,
            xaxis_title="|dv| (V)",
            yaxis_title="Count",
        )
        return self._write(fig, "spike_intervals")

    def create_envelope_heatmap(self, report: AnalysisReport) -> Path:
        envelope = report.envelope
        t_centres = (envelope.t_edges[:-1] + envelope.t_edges[1:]) / 2
        y_centres = (envelope.y_edges[:-1] + envelope.y_edges[1:]) / 2
        fig = graph_objects.Figure(
            data=graph_objects.Heatmap(
                x=t_centres,
                y=y_centres,
                z=envelope.counts.T,
                colorscale=express.colors.sequential.Plasma,
                colorbar=dict(title="samples"),
            )
        )

        fig.update_layout(
            title_text=f"{envelope.quantity.capitalize()} envelope over {len(report.inputs)} run(s)",
            font_family="Arial",
            font_size=12,
            xaxis_title="t (s)",
            yaxis_title="i (A)" if envelope.quantity == "current" else "v (V)",
        )
        return self._write(fig, "envelope")

    def _write(self, fig: graph_objects.Figure, name: str) -> Path:
        file_path = self._output_dir / f"{name}.svg"
        fig.write_image(file_path)
        logger.info("image created at %s successfully", file_path)
        return file_path
