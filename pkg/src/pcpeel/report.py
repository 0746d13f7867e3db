"""Machine-readable run reports and figure rendering.

Reports are JSON objects with sorted keys; non-finite numbers are encoded
as the strings "inf", "-inf" and "nan" so every emitted byte stream is
valid strict JSON and loading + re-dumping is the identity. A schema for
the report shape ships with the package.

Figures are rendered with the Agg backend straight to files, next to the
delimited outputs they accompany.
"""

from __future__ import annotations

import importlib.resources
import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .covstats import BootstrapReport, CovStats
from .gapsel import GapSelection, ScreeTable
from .matrixcore import EigenBasis
from .peel import PeelResult

REPORT_VERSION = "1"

BAND_COLORS = {"principal": "tab:red", "pettiest": "tab:blue", "naive": "0.65"}


# -- JSON encoding ----------------------------------------------------------------


def sanitize(obj):
    """Recursively convert to plain JSON types; non-finite floats become
    sentinel strings."""
    if isinstance(obj, dict):
        return {str(k): sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    if isinstance(obj, np.ndarray):
        return [sanitize(v) for v in obj.tolist()]
    return obj


def dumps_report(report: dict) -> str:
    return json.dumps(sanitize(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_report(report: dict, path: str | Path) -> None:
    Path(path).write_text(dumps_report(report))


def loads_report(text: str) -> dict:
    return json.loads(text)


def load_schema() -> dict:
    ref = importlib.resources.files("pcpeel").joinpath("schema/report.schema.json")
    return json.loads(ref.read_text())


# -- payload builders ------------------------------------------------------------


def cov_stats_payload(stats: CovStats) -> dict:
    return {
        "total_variance": stats.total_variance,
        "frobenius": stats.frobenius,
        "log_generalized_variance": stats.log_generalized_variance,
        "operator_norm": stats.operator_norm,
        "dropped_eigenvalues": stats.dropped_eigenvalues,
    }


def selection_payload(sel: GapSelection) -> dict:
    return {
        "method": sel.method,
        "k": sel.k,
        "gap_index": sel.gap_index,
        "gap_size_log10": sel.gap_size,
        "pettiest_band": list(sel.pettiest_band),
        "principal_band": list(sel.principal_band),
    }


def peel_payload(result: PeelResult, include_rows: bool = False) -> dict:
    payload = {
        "indices": list(result.box.indices),
        "lower": list(result.box.lower),
        "upper": list(result.box.upper),
        "log_volume": result.log_volume,
        "retained_fraction": result.retained_fraction,
        "retained_count": int(result.retained_rows.size),
    }
    if include_rows:
        payload["retained_rows"] = [int(r) for r in result.retained_rows]
    return payload


def bootstrap_payload(rep: BootstrapReport) -> dict:
    return {
        "B": rep.B,
        "failures": rep.failures,
        "means": dict(rep.means),
        "standard_errors": dict(rep.standard_errors),
    }


# -- eigenbasis files --------------------------------------------------------------


def save_basis(basis: EigenBasis, path: str | Path) -> None:
    """NPZ layout: eigenvalues (d,), vectors (d, d) columns-as-eigenvectors,
    clamped (scalar)."""
    np.savez(
        path,
        eigenvalues=basis.eigenvalues,
        vectors=basis.vectors,
        clamped=np.float64(basis.clamped),
    )


def load_basis(path: str | Path) -> EigenBasis:
    with np.load(path) as data:
        return EigenBasis(
            eigenvalues=data["eigenvalues"],
            vectors=data["vectors"],
            clamped=float(data["clamped"]),
        )


# -- figures -----------------------------------------------------------------------


def _band_runs(bands: tuple[str, ...]):
    """Contiguous (start_index, end_index, tag) runs, 1-based inclusive."""
    runs = []
    start = 0
    for i in range(1, len(bands) + 1):
        if i == len(bands) or bands[i] != bands[start]:
            if bands[start] != "none":
                runs.append((start + 1, i, bands[start]))
            start = i
    return runs


def render_scree(table: ScreeTable, path: str | Path, gap_index: int | None = None) -> None:
    """Log10 spectrum with shaded selection bands and the gap marker."""
    lam = np.asarray(table.eigenvalues)
    idx = np.asarray(table.indices)
    positive = lam > 0
    fig, ax = plt.subplots(figsize=(7.2, 4.2))
    ax.plot(idx[positive], np.log10(lam[positive]), lw=1.0, color="k")
    seen = set()
    for start, stop, tag in _band_runs(table.bands):
        label = tag if tag not in seen else None
        seen.add(tag)
        ax.axvspan(start - 0.5, stop + 0.5, color=BAND_COLORS.get(tag, "0.8"),
                   alpha=0.35, label=label)
    if gap_index is not None:
        ax.axvline(gap_index + 0.5, ls="--", color="k", lw=0.8)
    ax.set_xlabel("component index")
    ax.set_ylabel("log10 eigenvalue")
    if seen:
        ax.legend(loc="upper right", frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_embedding(
    embedding: np.ndarray,
    subsets: dict[str, np.ndarray],
    path: str | Path,
) -> None:
    """2-D embedding scatter with retained subsets highlighted.

    `subsets` maps a label ("principal", "pettiest", ...) to retained row
    indices into the embedding.
    """
    emb = np.asarray(embedding, dtype=np.float64)
    if emb.ndim != 2 or emb.shape[1] != 2:
        raise ValueError(f"embedding must be (n, 2), got {emb.shape}")
    fig, ax = plt.subplots(figsize=(5.4, 5.0))
    ax.scatter(emb[:, 0], emb[:, 1], s=3, color="0.8", label="all")
    for name, rows in subsets.items():
        pts = emb[np.asarray(rows, dtype=np.intp)]
        ax.scatter(pts[:, 0], pts[:, 1], s=4, alpha=0.7,
                   color=BAND_COLORS.get(name, None), label=name)
    ax.set_xticks([])
    ax.set_yticks([])
    ax.legend(loc="best", frameon=False, markerscale=3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_boxes(values: np.ndarray, results, path: str | Path) -> None:
    """Scatter of 2-D data with cover-box rectangles drawn on top."""
    vals = np.asarray(values)
    if vals.shape[1] != 2:
        raise ValueError("box rendering supports 2-D data only")
    fig, ax = plt.subplots(figsize=(5.4, 5.0))
    ax.scatter(vals[:, 0], vals[:, 1], s=3, color="0.8")
    for i, res in enumerate(results):
        lo, hi = res.box.lower, res.box.upper
        ax.add_patch(
            plt.Rectangle(
                (lo[0], lo[1]), hi[0] - lo[0], hi[1] - lo[1],
                fill=False, lw=1.4, edgecolor=f"C{i}", label=f"box {i + 1}",
            )
        )
    ax.legend(loc="best", frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
