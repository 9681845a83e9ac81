"""
Report emission for falconerlab
JSON and CSV reports carry the run's config header; decay tables can also be drawn as SVG
"""

import csv
import io
import json
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .config_manager import CSV_CONFIG_PREFIX  # noqa: E402
from .logger import log_success  # noqa: E402

PathLike = Union[str, Path]


def render_json(report: Dict[str, Any], config: Dict[str, Any]) -> str:
    return json.dumps({"config": config, "report": report}, sort_keys=True, indent=2) + "\n"


def render_csv(header: Sequence[str], rows: Sequence[Sequence[Any]], config: Dict[str, Any]) -> str:
    buffer = io.StringIO()
    buffer.write(CSV_CONFIG_PREFIX + json.dumps(config, sort_keys=True) + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def _emit(text: str, out: Optional[PathLike]):
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    log_success(f"report written to {path}", "REPORT")


def write_json(report: Dict[str, Any], config: Dict[str, Any], out: Optional[PathLike] = None):
    """Write {"config": ..., "report": ...} with sorted keys to out, or stdout"""
    _emit(render_json(report, config), out)


def write_csv(header: Sequence[str], rows: Sequence[Sequence[Any]], config: Dict[str, Any],
              out: Optional[PathLike] = None):
    _emit(render_csv(header, rows, config), out)


def write_decay_svg(xs: Sequence[Any], ys: Sequence[Any], path: PathLike, title: str,
                    xlabel: str, ylabel: str, log_x: bool = False):
    """Plot a decay table on a log y-axis and save it as SVG"""
    fig, ax = plt.subplots(figsize=(6, 4))
    try:
        ax.plot([float(x) for x in xs], [float(y) for y in ys], marker="o", color="#1f77b4")
        ax.set_yscale("log")
        if log_x:
            ax.set_xscale("log", base=2)
        ax.set_title(title)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.grid(True, which="both", alpha=0.3)
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        # fixed hash salt keeps the SVG bytes stable across runs
        with matplotlib.rc_context({"svg.hashsalt": "falconerlab"}):
            fig.savefig(path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    log_success(f"plot written to {path}", "REPORT")
