import json
import logging
import math
import os
from enum import Enum
from typing import Any, Dict, Iterable, List, Mapping, Sequence

import numpy as np
import pandas as pd

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .errors import ReportError

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
FLOAT_FORMAT = "%.6g"


class OutputFormat(str, Enum):
    TABLE = "table"
    STRUCTURED = "structured"
    PLOT = "plot"


def to_hz(value: float) -> float:
    return value / TWO_PI


def frequency_columns(prefix: str, value: float) -> Dict[str, float]:
    """Both the angular value and its ordinary-frequency counterpart."""
    return {f"{prefix}_rad_s": float(value), f"{prefix}_hz": float(value) / TWO_PI}


def output_stem(payload: Mapping[str, Any]) -> str:
    """``<subcommand>_<N>_<gradient>``, e.g. ``couplings_5_150``."""
    subcommand = str(payload["subcommand"]).replace("-", "_")
    size = payload.get("label") or payload.get("n_ions")
    return f"{subcommand}_{size}_{payload.get('gradient', 0.0):g}"


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, tuple):
        return list(value)
    raise TypeError(f"cannot serialise {type(value).__name__}")


def _write_tables(payload: Mapping[str, Any], stem: str, out_dir: str) -> List[str]:
    written = []
    for name, rows in payload.get("tables", {}).items():
        path = os.path.join(out_dir, f"{stem}.csv" if name == "main" else f"{stem}_{name}.csv")
        pd.DataFrame(list(rows)).to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        written.append(path)
    return written


def _write_document(payload: Mapping[str, Any], stem: str, out_dir: str) -> List[str]:
    path = os.path.join(out_dir, f"{stem}.json")
    document = {
        "subcommand": payload["subcommand"],
        "n_ions": payload.get("n_ions"),
        "gradient_T_per_m": payload.get("gradient"),
        **payload.get("document", {}),
    }
    with open(path, "w", encoding="utf-8") as file:
        json.dump(document, file, indent=2, sort_keys=True, default=_jsonable)
        file.write("\n")
    return [path]


def _write_plot(payload: Mapping[str, Any], stem: str, out_dir: str) -> List[str]:
    plot = payload.get("plot")
    if not plot:
        logger.info("%s has no plot data; skipping plot output", payload["subcommand"])
        return []
    path = os.path.join(out_dir, f"{stem}.svg")
    plt.rcParams["svg.hashsalt"] = stem
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    try:
        x = np.asarray(plot["x"], dtype=float)
        for label, values in plot["series"].items():
            ax.plot(x, np.asarray(values, dtype=float), "o", label=label)
        for overlay in plot.get("fits", []):
            ax.plot(overlay["x"], overlay["y"], "--", color="grey", label=overlay["label"])
        if plot.get("loglog", True):
            ax.set_xscale("log")
            ax.set_yscale("log")
        ax.set_xlabel(plot.get("xlabel", "N"))
        ax.set_ylabel(plot.get("ylabel", ""))
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    return [path]


_WRITERS = {
    OutputFormat.TABLE: _write_tables,
    OutputFormat.STRUCTURED: _write_document,
    OutputFormat.PLOT: _write_plot,
}


def render_report(payload: Mapping[str, Any], formats: Iterable[str], out_dir: str) -> List[str]:
    """
    Write a facade payload as CSV tables, a JSON document and/or an SVG plot.

    Args:
        payload: dictionary returned by a :class:`MagicCouplingStudio` method.
        formats: any of ``table``, ``structured``, ``plot``.
        out_dir: directory for the files; created if missing.

    Returns:
        List[str]: paths written, in format order.

    Raises:
        ReportError: if the directory or a file cannot be written.
    """
    try:
        selected = [OutputFormat(f) for f in formats]
    except ValueError as e:
        raise ReportError(f"unknown output format: {e}")
    stem = output_stem(payload)
    written: List[str] = []
    try:
        os.makedirs(out_dir, exist_ok=True)
        for output_format in dict.fromkeys(selected):
            written.extend(_WRITERS[output_format](payload, stem, out_dir))
    except OSError as e:
        raise ReportError(f"cannot write report to {out_dir}: {e}")
    for path in written:
        logger.info("wrote %s", path)
    return written


def format_table(rows: Sequence[Mapping[str, Any]]) -> str:
    """Plain-text rendering of a table for the terminal."""
    if not rows:
        return "(empty)"
    with pd.option_context("display.float_format", lambda v: f"{v:.6g}"):
        return pd.DataFrame(list(rows)).to_string(index=False)
