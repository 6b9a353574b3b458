"""
Export Manager for experiment artifacts.

Writes and reads run reports, writes the summary table as CSV and as
plot-ready JSON, and renders accuracy curves and label-matrix heatmaps to
standalone HTML with plotly.
"""

import glob
import json
import logging
import math
import os
from typing import Dict, List, Optional, Sequence

import pandas as pd
import plotly.graph_objects as go
from plotly.subplots import make_subplots

from .exceptions import ReportIOError, ValidationError
from .models import LabelMatrix, RunReport

SUMMARY_CSV = "summary.csv"
SUMMARY_JSON = "summary.json"
SUMMARY_HTML = "summary.html"
TIMING_SUFFIX = ".timing.json"
CSV_FLOAT_FORMAT = "%.6f"


def _json_value(value):
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


class ExportManager:
    """
    Manages experiment artifact export.

    Every file written here is a deterministic function of its inputs, so
    rerunning an export reproduces it byte for byte.
    """

    def __init__(self):
        """Initialize the Export Manager."""
        self.logger = logging.getLogger(__name__)

    def _write_text(self, path: str, text: str) -> None:
        try:
            directory = os.path.dirname(path)
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="\n") as f:
                f.write(text)
        except OSError as e:
            self.logger.error(f"Failed to write {path}: {e}")
            raise ReportIOError(f"failed to write {os.path.basename(path)}: {e}", path, e)

    # Run reports

    def write_run_report(self, report: RunReport, output_dir: str) -> str:
        """
        Write one report as JSON with sorted keys and 2-space indentation.

        Returns:
            str: Path of the written file
        """
        path = os.path.join(output_dir, f"{report.stem}.json")
        text = json.dumps(report.to_dict(), sort_keys=True, indent=2, allow_nan=False)
        self._write_text(path, text + "\n")
        self.logger.info(f"Wrote report {path}")
        return path

    def write_timing(self, report: RunReport, seconds: float, output_dir: str) -> str:
        """Write the wall-clock sidecar kept apart from the reproducible report."""
        path = os.path.join(output_dir, f"{report.stem}{TIMING_SUFFIX}")
        self._write_text(path, json.dumps({'wall_clock_seconds': seconds}, indent=2) + "\n")
        return path

    def read_run_report(self, path: str) -> RunReport:
        """
        Read a report written by ``write_run_report``.

        Raises:
            ReportIOError: If the file is unreadable or not a valid report
        """
        try:
            with open(path, encoding="utf-8") as f:
                data = json.load(f)
            return RunReport.from_dict(data)
        except (OSError, ValueError, TypeError, KeyError) as e:
            if isinstance(e, ValidationError):
                raise ReportIOError(f"invalid report: {e.message}", path, e)
            raise ReportIOError(f"failed to read report: {e}", path, e)

    def read_reports(self, directory: str) -> List[RunReport]:
        """Read every report in a directory, skipping timing sidecars and summaries."""
        if not os.path.isdir(directory):
            raise ReportIOError("report directory does not exist", directory)
        paths = sorted(p for p in glob.glob(os.path.join(directory, "*.json"))
                       if not p.endswith(TIMING_SUFFIX)
                       and os.path.basename(p) != SUMMARY_JSON)
        reports = [self.read_run_report(p) for p in paths]
        self.logger.info(f"Read {len(reports)} reports from {directory}")
        return reports

    # Summary table

    def summary_csv_text(self, summary: pd.DataFrame) -> str:
        return summary.to_csv(index=False, float_format=CSV_FLOAT_FORMAT, na_rep="nan",
                              lineterminator="\n")

    def write_summary_csv(self, summary: pd.DataFrame, output_dir: str) -> str:
        path = os.path.join(output_dir, SUMMARY_CSV)
        self._write_text(path, self.summary_csv_text(summary))
        self.logger.info(f"Wrote summary table {path} ({len(summary)} rows)")
        return path

    def summary_plot_data(self, summary: pd.DataFrame) -> Dict[str, list]:
        """
        Group the summary by variant into plot-ready series.

        Missing values become null.
        """
        curves = []
        for variant, rows in summary.groupby('variant', sort=True):
            rows = rows.sort_values('train_size')
            curves.append({
                'variant': variant,
                'scheme': rows['scheme'].iloc[0],
                's': _json_value(rows['s'].iloc[0]),
                'train_sizes': [int(n) for n in rows['train_size']],
                'mean_accuracy': [_json_value(float(v)) for v in rows['mean_accuracy']],
                'std_accuracy': [_json_value(float(v)) for v in rows['std_accuracy']],
                'n_failed': [int(v) for v in rows['n_failed']],
            })
        return {'curves': curves}

    def write_summary_json(self, summary: pd.DataFrame, output_dir: str) -> str:
        path = os.path.join(output_dir, SUMMARY_JSON)
        data = self.summary_plot_data(summary)
        # inf scales are written as text, like in run reports
        for curve in data['curves']:
            if isinstance(curve['s'], float) and math.isinf(curve['s']):
                curve['s'] = "inf"
        self._write_text(path, json.dumps(data, sort_keys=True, indent=2, allow_nan=False) + "\n")
        return path

    # Figures

    def accuracy_curves_figure(self, summary: pd.DataFrame) -> go.Figure:
        """
        Accuracy against training-set size, one line per variant with ±1 std error bars.
        """
        fig = go.Figure()
        for curve in self.summary_plot_data(summary)['curves']:
            fig.add_trace(go.Scatter(
                x=curve['train_sizes'],
                y=curve['mean_accuracy'],
                error_y=dict(type='data', array=curve['std_accuracy'], visible=True),
                mode='lines+markers',
                name=curve['variant'],
                hovertemplate='<b>%{fullData.name}</b><br>n=%{x}<br>accuracy: %{y:.4f}<extra></extra>'
            ))
        fig.update_layout(
            title={'text': 'Test accuracy by training set size', 'x': 0.5},
            xaxis=dict(title='Training set size', type='log'),
            yaxis=dict(title='Best test accuracy at this size or smaller'),
            height=500,
            margin=dict(l=50, r=50, t=80, b=50),
            legend=dict(orientation="h", yanchor="bottom", y=1.02, xanchor="right", x=1)
        )
        return fig

    def label_matrix_figure(self, matrices: Dict[str, LabelMatrix],
                            class_names: Optional[Sequence[str]] = None) -> go.Figure:
        """
        Side-by-side heatmaps of label encodings.

        Rows are target classes, columns the classes receiving label mass.
        """
        if not matrices:
            raise ValidationError("no label matrices to plot", "matrices")
        titles = list(matrices)
        fig = make_subplots(rows=1, cols=len(titles), subplot_titles=titles,
                            horizontal_spacing=0.08)
        for i, title in enumerate(titles, start=1):
            matrix = matrices[title]
            names = list(class_names) if class_names else \
                [str(c) for c in range(matrix.num_classes)]
            fig.add_trace(
                go.Heatmap(
                    z=matrix.entries.tolist(),
                    x=names,
                    y=names,
                    zmin=0.0,
                    zmax=1.0,
                    colorscale='Viridis',
                    showscale=(i == len(titles)),
                    text=[[f"{v:.3f}" for v in row] for row in matrix.entries],
                    texttemplate="%{text}",
                    hovertemplate='target %{y}<br>class %{x}<br>%{z:.4f}<extra></extra>'
                ),
                row=1, col=i
            )
            fig.update_yaxes(autorange='reversed', row=1, col=i)
        fig.update_layout(height=420, width=380 * len(titles),
                          margin=dict(l=50, r=50, t=80, b=50))
        return fig

    def write_figure_html(self, fig: go.Figure, path: str) -> str:
        try:
            directory = os.path.dirname(path)
            if directory:
                os.makedirs(directory, exist_ok=True)
            fig.write_html(path, include_plotlyjs='cdn', full_html=True)
        except OSError as e:
            self.logger.error(f"Failed to write figure {path}: {e}")
            raise ReportIOError(f"failed to write figure: {e}", path, e)
        self.logger.info(f"Wrote figure {path}")
        return path
