"""SVG line charts drawn from result CSVs."""

import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import pandas as pd  # noqa: E402
from loguru import logger  # noqa: E402
from matplotlib import pyplot as plt  # noqa: E402

from relu_death.errors import EmptyTableError, MissingColumnError, RejectedInputError, ResultsIOError  # noqa: E402
from relu_death.experiments.results import write_atomic  # noqa: E402

CANVAS_POINTS = (800, 600)
BOUND_COLUMNS = ("lower", "upper", "floor")

# fixed id salt and no date stamp keep the markup byte-identical between runs
SVG_STYLE = {
    "svg.hashsalt": "relu-death",
    "svg.fonttype": "path",
    "figure.dpi": 72,
    "savefig.dpi": 72,
    "font.size": 11,
}


@dataclass
class PlotSpec:
    """
    One chart: `series` columns against `x`, one line each, from the rows of `csv` that pass `where`.

    Args:
        csv (`Path`): result table written by an experiment run.
        x (`str`): column on the horizontal axis.
        series (`Sequence[str]`): columns drawn as lines; the legend uses these names.
        output (`Path`): SVG file to write.
        title (`str`, *optional*): chart title.
        log_x (`bool`, defaults to `False`), log_y (`bool`, defaults to `False`): log-scale axes.
        dashed (`Sequence[str]`, *optional*):
            Series drawn dashed. Defaults to the bound columns present in `series`.
        where (`Dict[str, str]`, *optional*): keep only rows whose column equals the value.
    """

    csv: Path
    x: str
    series: Sequence[str]
    output: Path
    title: str = ""
    log_x: bool = False
    log_y: bool = False
    dashed: Optional[Sequence[str]] = None
    where: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.csv = Path(self.csv)
        self.output = Path(self.output)
        if not self.series:
            raise RejectedInputError("at least one series column is required")
        if self.dashed is None:
            self.dashed = tuple(column for column in self.series if column in BOUND_COLUMNS)

    @property
    def columns(self) -> Tuple[str, ...]:
        return tuple(dict.fromkeys([self.x, *self.series, *self.dashed, *self.where]))


def parse_where(clauses: Sequence[str]) -> Dict[str, str]:
    filters = {}
    for clause in clauses or ():
        column, sep, value = clause.partition("=")
        if not sep or not column:
            raise RejectedInputError(f"filter '{clause}' is not of the form column=value")
        filters[column.strip()] = value.strip()
    return filters


def _matches(column: pd.Series, value: str) -> pd.Series:
    if pd.api.types.is_numeric_dtype(column):
        try:
            return column == float(value)
        except ValueError:
            raise RejectedInputError(f"filter value '{value}' is not numeric but column '{column.name}' is")
    return column.astype(str) == value


def load_table(spec: PlotSpec) -> pd.DataFrame:
    try:
        frame = pd.read_csv(spec.csv)
    except pd.errors.EmptyDataError:
        raise EmptyTableError(f"{spec.csv} is empty")
    except OSError as e:
        raise ResultsIOError(spec.csv, e)
    for column in spec.columns:
        if column not in frame.columns:
            raise MissingColumnError(column, list(frame.columns))
    for column, value in spec.where.items():
        frame = frame[_matches(frame[column], value)]
    if frame.empty:
        raise EmptyTableError(f"{spec.csv} has no rows to plot")
    return frame.sort_values(spec.x, kind="mergesort")


def render_svg(spec: PlotSpec, frame: pd.DataFrame) -> str:
    width, height = CANVAS_POINTS
    with plt.rc_context(SVG_STYLE):
        fig, ax = plt.subplots(figsize=(width / 72, height / 72))
        try:
            for column in spec.series:
                linestyle = "--" if column in spec.dashed else "-"
                ax.plot(frame[spec.x], frame[column], label=column, linestyle=linestyle, marker=".")
            if spec.log_x:
                ax.set_xscale("log", base=2)
            if spec.log_y:
                ax.set_yscale("log", nonpositive="mask")
            ax.set_xlabel(spec.x)
            if spec.title:
                ax.set_title(spec.title)
            ax.grid(True, linewidth=0.3)
            ax.legend(loc="best")
            buffer = io.StringIO()
            fig.savefig(buffer, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    return buffer.getvalue()


def plot(spec: PlotSpec) -> Path:
    """Render `spec` and write the SVG; nothing is written when the table is unusable."""
    frame = load_table(spec)
    logger.info(f"plotting {len(spec.series)} series over {len(frame)} rows of {spec.csv}")
    write_atomic(spec.output, render_svg(spec, frame))
    logger.info(f"wrote {spec.output}")
    return spec.output
