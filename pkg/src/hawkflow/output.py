"""CSV traces, JSON summaries and static SVG plots."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

from .errors import IoError
from .surface_flow import MassSample, MassTrace

__all__ = ["CSV_COLUMNS", "emit_csv", "read_csv", "emit_svg", "write_json", "jsonable"]

CSV_COLUMNS = MassSample._fields


def _fmt(x: float) -> str:
    return f"{x:.17e}"


def emit_csv(trace: MassTrace, path) -> Path:
    path = Path(path)
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for sample in trace.samples:
                writer.writerow([_fmt(v) for v in sample])
    except OSError as exc:
        raise IoError(path, exc.strerror or str(exc)) from None
    return path


def read_csv(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"unexpected header {header}")
        return [MassSample(*(float(v) for v in row)) for row in reader]


def jsonable(obj):
    """Replace non-finite floats by ``None`` so the output is strict JSON."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    return obj


def write_json(data, path) -> Path:
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(jsonable(data), fh, indent=2, sort_keys=True, allow_nan=False)
            fh.write("\n")
    except OSError as exc:
        raise IoError(path, exc.strerror or str(exc)) from None
    return path


def emit_svg(traces: Sequence[MassTrace], path, quantity: str = "mass") -> Path:
    """Line plot, one series per sphere.

    ``quantity="mass"`` plots ``m`` against ``t``; ``quantity="rate"`` plots
    the formula ``dm/dt`` against the sphere radius, with ``r/2`` for
    reference.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    with plt.rc_context({"svg.hashsalt": "hawkflow", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        if quantity == "mass":
            ax.set_xlabel("t")
            ax.set_ylabel("Hawking mass m")
        elif quantity == "rate":
            ax.set_xlabel("r")
            ax.set_ylabel("dm/dt")
        else:
            plt.close(fig)
            raise ValueError(f"unknown quantity {quantity!r}")

        plotted = 0
        for trace in traces:
            if not trace.samples:
                continue
            if quantity == "mass":
                x, y = trace.column("t"), trace.column("m")
            else:
                x, y = trace.column("r"), trace.column("dm_dt_formula")
            ax.plot(x, y, marker="." if len(x) < 3 else None, label=trace.sphere_id)
            plotted += 1
        if quantity == "rate" and plotted:
            lo = min(float(t.column("r").min()) for t in traces if t.samples)
            hi = max(float(t.column("r").max()) for t in traces if t.samples)
            ax.plot([lo, hi], [lo / 2, hi / 2], "k--", lw=0.8, label="r/2")
        if plotted:
            ax.legend(fontsize="small")
        else:
            ax.text(0.5, 0.5, "no data", ha="center", va="center", transform=ax.transAxes)
        fig.tight_layout()
        try:
            fig.savefig(path, format="svg", metadata={"Date": None})
        except OSError as exc:
            raise IoError(path, exc.strerror or str(exc)) from None
        finally:
            plt.close(fig)
    return path


def write_traces(traces: Iterable[MassTrace], directory) -> list:
    directory = Path(directory)
    return [emit_csv(t, directory / f"trace_{t.sphere_id}.csv") for t in traces]
