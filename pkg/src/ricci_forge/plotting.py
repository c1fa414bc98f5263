"""PNG figures for scan reports.

matplotlib is imported lazily with the Agg backend, so the rest of the package
never pays for it and nothing here needs a display.
"""

from __future__ import annotations

import csv
import io as _io
import os
from pathlib import Path

import numpy as np

from .io import write_text_atomic

COMPONENTS = ("rtt", "ruu", "rvv", "ruv", "margin")


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path: Path) -> Path:
    buf = _io.BytesIO()
    # no Software/date metadata, so reruns produce identical bytes
    fig.savefig(buf, format="png", dpi=110, metadata={"Software": None})
    _pyplot().close(fig)
    return write_text_atomic(path, buf.getvalue())


def read_scan_csv(path: str | os.PathLike) -> dict[str, np.ndarray]:
    """Columns of a scan CSV as float arrays (empty cells read as NaN)."""
    with open(path, encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    cols = {}
    for name in ("t",) + COMPONENTS:
        if rows and name in rows[0]:
            cols[name] = np.array([float(r[name]) if r[name] not in ("", "None") else np.nan for r in rows])
    return cols


def render_scan(csv_path: str | os.PathLike, png_path: str | os.PathLike | None = None, title: str = "") -> Path:
    """Plot every Ricci component and the margin against ``t``; PNG goes next to the CSV by default."""
    csv_path = Path(csv_path)
    png_path = Path(png_path) if png_path else csv_path.with_suffix(".png")
    cols = read_scan_csv(csv_path)
    plt = _pyplot()
    fig, (ax, axm) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    t = cols.get("t", np.array([]))
    order = np.argsort(t, kind="stable")
    for name in ("rtt", "ruu", "rvv", "ruv"):
        y = cols.get(name)
        if y is not None and np.isfinite(y).any():
            ax.plot(t[order], y[order], lw=1, label=name)
    ax.axhline(0.0, color="k", lw=0.5)
    ax.legend(loc="best", fontsize=8)
    ax.set_ylabel("weighted Ricci")
    if "margin" in cols:
        axm.plot(t[order], cols["margin"][order], lw=1, color="C4")
    axm.axhline(0.0, color="k", lw=0.5)
    axm.set_ylabel("margin")
    axm.set_xlabel("t")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _save(fig, png_path)


def render_profiles(spec, png_path: str | os.PathLike, n: int = 2001, title: str = "") -> Path:
    """Plot ``alpha``, ``beta`` and ``f`` of a spec on a uniform grid."""
    t = np.linspace(spec.lo, spec.hi, n)
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4))
    for name in ("alpha", "beta", "f"):
        ax.plot(t, getattr(spec, name).eval(t, 0), lw=1, label=name)
    ax.legend(loc="best", fontsize=8)
    ax.set_xlabel("t")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _save(fig, Path(png_path))
