"""
Report Service
Per-season path-loss charts, model comparison charts and metric tables.
Figures are self-contained SVG files with the plotted data alongside as CSV.
"""

import json
import re
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from matplotlib import rc_context
from matplotlib.figure import Figure

from config.settings import get_config
from core.exceptions import CsvParseError, FileSystemError, SchemaError
from core.logging_system import get_report_logger, log_function_calls
from models.domain_models import (
    BenchmarkEntry, BenchmarkResult, MetricsReport, PlotSeries, ReferenceStudy, RegressorKind, Season
)
from services.dataset_service import (
    DELAY_SPREAD_COLUMN, DISTANCE_COLUMN, FREQUENCY_COLUMN, RECEIVED_POWER_COLUMN, SEASON_COLUMN, TARGET_COLUMN
)
from services.regression_service import PUBLISHED_METRICS, REFERENCE_STUDIES

logger = get_report_logger()

METRICS_COLUMNS = ("Models", "Kind", "MAE", "MSE", "RMSE", "R2", "Status", "Hyperparameters")
DROP_KEY_COLUMNS = (FREQUENCY_COLUMN, DISTANCE_COLUMN, TARGET_COLUMN, DELAY_SPREAD_COLUMN)

def series_gid(label: str) -> str:
    """SVG group id of a plotted series."""
    return "series-" + label.replace(" ", "_")

def frequency_label(freq_ghz: float) -> str:
    return f"{freq_ghz:g} GHz"

# ---------------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------------

def strongest_path_rows(rows: pd.DataFrame) -> pd.DataFrame:
    """
    One row per drop, the one with the highest received power.

    Rows of a drop share frequency, distance, path loss and delay spread, so
    drops are found without relying on a zero delay or a drop counter.
    """
    ranked = rows.sort_values(RECEIVED_POWER_COLUMN, ascending=False, kind="mergesort")
    return ranked.drop_duplicates(subset=list(DROP_KEY_COLUMNS), keep="first").sort_index()

def season_series(frame: pd.DataFrame, season: Season, per_row: bool = False) -> List[PlotSeries]:
    """
    Mean path loss and its spread per distance, one series per frequency.

    By default each drop contributes once through its strongest path; with
    per_row every multipath row counts.
    """
    rows = frame[frame[SEASON_COLUMN] == season.value]
    if not per_row and len(rows):
        drops = strongest_path_rows(rows)
        logger.debug(f"{season.value}: {len(drops)} drop(s) from {len(rows)} row(s)")
        rows = drops

    series = []
    for freq, group in rows.groupby(FREQUENCY_COLUMN, sort=True):
        stats = group.groupby(DISTANCE_COLUMN, sort=True)[TARGET_COLUMN].agg(["mean", lambda s: s.std(ddof=0)])
        stats.columns = ["mean", "std"]
        series.append(PlotSeries(
            label=frequency_label(float(freq)),
            x=tuple(float(x) for x in stats.index),
            y=tuple(float(v) for v in stats["mean"]),
            spread=tuple(float(v) for v in stats["std"].fillna(0.0))
        ))
    return series

def series_frame(series: Sequence[PlotSeries], season: Season) -> pd.DataFrame:
    rows = [
        {"Season": season.value, "Series": s.label, "T-R Separation Distance (m)": x,
         "Mean Path Loss (dB)": y, "Std Path Loss (dB)": spread}
        for s in series for x, y, spread in zip(s.x, s.y, s.spread)
    ]
    return pd.DataFrame(rows, columns=["Season", "Series", "T-R Separation Distance (m)",
                                       "Mean Path Loss (dB)", "Std Path Loss (dB)"])

# ---------------------------------------------------------------------------
# metric tables
# ---------------------------------------------------------------------------

def _cell(value: Optional[float], decimals: int = 3) -> str:
    return "-" if value is None else f"{value:.{decimals}f}"

def metrics_frame(result: BenchmarkResult) -> pd.DataFrame:
    """Models x (MAE, MSE, RMSE, R2) at full precision."""
    rows = []
    for entry in result.entries:
        metrics = entry.metrics
        rows.append({
            "Models": entry.display_name,
            "Kind": entry.kind.value,
            "MAE": None if metrics is None else metrics.mae,
            "MSE": None if metrics is None else metrics.mse,
            "RMSE": None if metrics is None else metrics.rmse,
            "R2": None if metrics is None else metrics.r2,
            "Status": "ok" if entry.error is None else entry.error.get("message", "failed"),
            "Hyperparameters": json.dumps(entry.hyperparameters, sort_keys=True),
        })
    return pd.DataFrame(rows, columns=list(METRICS_COLUMNS))

def format_metrics_text(result: BenchmarkResult, include_published: bool = True) -> str:
    """Aligned text table, this run next to the published benchmark and prior studies."""
    header = ["Models", "MAE", "MSE", "RMSE", "R2"]
    if include_published:
        header += ["Pub. MAE", "Pub. MSE", "Pub. RMSE", "Pub. R2"]

    rows = []
    for entry in result.entries:
        cells = [entry.display_name] + (entry.metrics.as_row() if entry.metrics else ["-"] * 4)
        if include_published:
            cells += PUBLISHED_METRICS[entry.kind].as_row()
        rows.append(cells)

    widths = [max(len(str(row[i])) for row in [header] + rows) for i in range(len(header))]

    def render(cells: Sequence[str]) -> str:
        first = str(cells[0]).ljust(widths[0])
        rest = [str(c).rjust(w) for c, w in zip(cells[1:], widths[1:])]
        return "  ".join([first] + rest)

    lines = [render(header), render(["-" * w for w in widths])]
    lines += [render(row) for row in rows]

    failures = [entry for entry in result.entries if entry.error is not None]
    if failures:
        lines.append("")
        lines.append("Failures:")
        lines += [f"  {entry.display_name}: {entry.error.get('message')}" for entry in failures]

    if result.reference_studies:
        lines.append("")
        lines.append("Prior studies (reported values):")
        ref_header = ["References", "MAE", "MSE", "RMSE", "R2"]
        ref_rows = [[s.citation, _cell(s.mae, 2), _cell(s.mse, 2), _cell(s.rmse, 2), _cell(s.r2, 2)]
                    for s in result.reference_studies]
        ref_widths = [max(len(r[i]) for r in [ref_header] + ref_rows) for i in range(5)]
        for row in [ref_header] + ref_rows:
            lines.append("  " + "  ".join([row[0].ljust(ref_widths[0])] +
                                          [c.rjust(w) for c, w in zip(row[1:], ref_widths[1:])]))

    lines.append("")
    lines.append("Hyperparameters:")
    for entry in result.entries:
        lines.append(f"  {entry.kind.value}: {json.dumps(entry.hyperparameters, sort_keys=True)}")
    return "\n".join(lines) + "\n"

def read_metrics_csv(path: Union[str, Path]) -> BenchmarkResult:
    """Rebuild a benchmark result from a metrics CSV written by the train command."""
    path = Path(path)
    if not path.exists():
        raise FileSystemError("read", str(path), "file not found")
    try:
        frame = pd.read_csv(path, encoding="utf-8", float_precision="round_trip",
                            dtype={"Kind": str, "Status": str, "Hyperparameters": str})
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise CsvParseError(str(path), str(e)) from e

    missing = [c for c in ("Kind", "MAE", "MSE", "RMSE", "R2") if c not in frame.columns]
    if missing:
        raise SchemaError(missing=missing)

    entries = []
    for _, row in frame.iterrows():
        metrics = None
        if not pd.isna(row["RMSE"]):
            metrics = MetricsReport(
                mae=float(row["MAE"]), mse=float(row["MSE"]), rmse=float(row["RMSE"]),
                r2=None if pd.isna(row["R2"]) else float(row["R2"])
            )
        status = row.get("Status", "ok")
        error = None if pd.isna(status) or status == "ok" else {"message": status}
        hyperparameters = row.get("Hyperparameters")
        entries.append(BenchmarkEntry(
            kind=RegressorKind(row["Kind"]),
            metrics=metrics,
            error=error,
            hyperparameters={} if pd.isna(hyperparameters) else json.loads(hyperparameters)
        ))
    return BenchmarkResult(entries=tuple(entries), reference_studies=REFERENCE_STUDIES)

# ---------------------------------------------------------------------------
# figures
# ---------------------------------------------------------------------------

class ReportRenderer:
    """Renders SVG figures reproducibly."""

    def __init__(self, figure_size: Optional[Tuple[float, float]] = None, hash_salt: Optional[str] = None):
        report_config = get_config().report
        self.figure_size = figure_size or (report_config.figure_width_in, report_config.figure_height_in)
        self.hash_salt = hash_salt or report_config.svg_hash_salt

    def _save(self, figure: Figure, path: Path) -> Path:
        if not path.parent.exists():
            raise FileSystemError("write", str(path), "parent directory does not exist")
        with rc_context({"svg.fonttype": "none", "svg.hashsalt": self.hash_salt}):
            figure.savefig(path, format="svg", metadata={"Date": None})
        logger.debug(f"Wrote {path}")
        return path

    def season_chart(self, series: Sequence[PlotSeries], season: Season, path: Path) -> Path:
        """Line chart of mean path loss versus distance with a ±1σ band per frequency."""
        figure = Figure(figsize=self.figure_size)
        ax = figure.add_subplot()
        for s in series:
            x = np.asarray(s.x)
            y = np.asarray(s.y)
            spread = np.asarray(s.spread)
            (line,) = ax.plot(x, y, marker="o", markersize=3, label=s.label)
            line.set_gid(series_gid(s.label))
            ax.fill_between(x, y - spread, y + spread, alpha=0.15, color=line.get_color(), linewidth=0)
        ax.set_title(f"Path loss vs. T-R separation in {season.value.lower()}")
        ax.set_xlabel("T-R Separation Distance (m)")
        ax.set_ylabel("Path Loss (dB)")
        ax.grid(True, alpha=0.3)
        if series:
            ax.legend(loc="lower right")
        figure.tight_layout()
        return self._save(figure, path)

    def r2_chart(self, result: BenchmarkResult, path: Path) -> Path:
        """
        One bar per model, in the canonical model order.

        Models without an R² (failed fits) keep their slot as an empty
        hatched bar labelled "failed".
        """
        by_kind = {entry.kind: entry for entry in result.entries}
        kinds = [kind for kind in RegressorKind if kind in by_kind]
        scored = [by_kind[k].metrics is not None and by_kind[k].metrics.r2 is not None for k in kinds]
        values = [by_kind[k].metrics.r2 if ok else 0.0 for k, ok in zip(kinds, scored)]

        figure = Figure(figsize=self.figure_size)
        ax = figure.add_subplot()
        bars = ax.bar(range(len(kinds)), values, color=["tab:blue" if ok else "none" for ok in scored])
        for bar, kind, ok in zip(bars, kinds, scored):
            if ok:
                bar.set_gid(f"bar-{kind.value}")
                continue
            bar.set_gid(f"bar-{kind.value}-failed")
            bar.set_height(0.05)
            bar.set_hatch("//")
            bar.set_edgecolor("tab:red")
        ax.bar_label(bars, labels=[f"{v:.3f}" if ok else "failed" for v, ok in zip(values, scored)], fontsize=7)
        ax.set_xticks(range(len(kinds)), [k.display_name for k in kinds], rotation=35, ha="right", fontsize=8)
        ax.set_ylabel("R²")
        ax.set_ylim(min(0.0, min(values, default=0.0)), 1.05)
        ax.set_title("Comparison of R² across the nine regressors")
        figure.tight_layout()
        return self._save(figure, path)

    def rmse_comparison_chart(
        self,
        best: Optional[BenchmarkEntry],
        references: Sequence[ReferenceStudy],
        path: Path
    ) -> Path:
        """Prior studies' RMSE next to this run's best model."""
        labels = [s.citation for s in references if s.rmse is not None]
        values = [s.rmse for s in references if s.rmse is not None]
        colors = ["tab:gray"] * len(values)
        if best is not None and best.metrics is not None:
            labels.append(f"This run\n({best.display_name})")
            values.append(best.metrics.rmse)
            colors.append("tab:green")

        figure = Figure(figsize=self.figure_size)
        ax = figure.add_subplot()
        bars = ax.bar(range(len(values)), values, color=colors)
        for bar, label in zip(bars, labels):
            bar.set_gid("bar-" + re.sub(r"[^0-9A-Za-z]+", "_", label.split("\n")[0]).strip("_"))
        ax.bar_label(bars, fmt="%.2f", fontsize=8)
        ax.set_xticks(range(len(labels)), labels, fontsize=8)
        ax.set_ylabel("RMSE (dB)")
        ax.set_title("RMSE compared with prior path-loss studies")
        figure.tight_layout()
        return self._save(figure, path)

    @log_function_calls()
    def render_dataset(
        self,
        frame: pd.DataFrame,
        out_dir: Path,
        seasons: Optional[Sequence[Season]] = None,
        per_row: bool = False
    ) -> List[Path]:
        """One chart plus sidecar CSV per season present in the dataset (and requested)."""
        present = set(frame[SEASON_COLUMN].astype(str))
        wanted = [s for s in Season if s.value in present and (seasons is None or s in seasons)]
        written = []
        for season in wanted:
            series = season_series(frame, season, per_row)
            stem = f"pathloss_{season.value.lower()}"
            written.append(self.season_chart(series, season, out_dir / f"{stem}.svg"))
            sidecar = out_dir / f"{stem}.csv"
            series_frame(series, season).to_csv(sidecar, index=False, lineterminator="\n")
            written.append(sidecar)
        logger.info(f"Rendered {len(wanted)} season chart(s)")
        return written

    @log_function_calls()
    def render_metrics(self, result: BenchmarkResult, out_dir: Path) -> List[Path]:
        """R² chart and RMSE comparison chart with their data as CSV."""
        written = [self.r2_chart(result, out_dir / "r2_comparison.svg")]
        r2_data = metrics_frame(result)[["Models", "Kind", "R2"]]
        r2_path = out_dir / "r2_comparison.csv"
        r2_data.to_csv(r2_path, index=False, lineterminator="\n")
        written.append(r2_path)

        written.append(self.rmse_comparison_chart(result.best, result.reference_studies, out_dir / "rmse_comparison.svg"))
        rows = [{"Source": s.citation, "MAE": s.mae, "MSE": s.mse, "RMSE": s.rmse, "R2": s.r2}
                for s in result.reference_studies]
        if result.best is not None:
            m = result.best.metrics
            rows.append({"Source": f"This run ({result.best.display_name})",
                         "MAE": m.mae, "MSE": m.mse, "RMSE": m.rmse, "R2": m.r2})
        rmse_path = out_dir / "rmse_comparison.csv"
        pd.DataFrame(rows, columns=["Source", "MAE", "MSE", "RMSE", "R2"]).to_csv(
            rmse_path, index=False, lineterminator="\n")
        written.append(rmse_path)
        return written

_report_service: Optional[ReportRenderer] = None

def get_report_service() -> ReportRenderer:
    """Get the global report renderer."""
    global _report_service
    if _report_service is None:
        _report_service = ReportRenderer()
    return _report_service
