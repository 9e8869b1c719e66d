"""Deterministic report serialization and figure rendering.

Reports are JSON documents with a schema marker and the fully resolved
configuration embedded, serialized with sorted keys so that identical
inputs produce byte-identical files.  Delimited tables use
whitespace-separated columns with a comment header, readable by gnuplot
and numpy.loadtxt alike.  Figures render through the Agg backend and
are written next to the delimited output.
"""

from __future__ import annotations

import json
import math
from typing import Sequence

import numpy as np

SCHEMA_VERSION = 1


def dump_json(payload: dict) -> str:
    """Canonical JSON text: sorted keys, two-space indent, newline at end."""
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=True) + "\n"


def make_report(config: dict, **payload) -> dict:
    """Wrap a result payload with the schema marker and resolved config."""
    doc = {"schema": SCHEMA_VERSION, "config": config}
    for key, value in payload.items():
        if key in doc:
            raise ValueError(f"payload key {key!r} collides with the envelope")
        doc[key] = value
    return doc


def write_json_report(path, config: dict, **payload) -> dict:
    doc = make_report(config, **payload)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_json(doc))
    return doc


def _fmt(v) -> str:
    f = float(v)
    if math.isnan(f):
        return "nan"
    if math.isinf(f):
        return "inf" if f > 0 else "-inf"
    return f"{f:.17g}"


def write_table(path, columns: Sequence[tuple[str, Sequence[float]]]) -> None:
    """Whitespace-separated table with a '#'-prefixed header line."""
    names = [name for name, _ in columns]
    arrays = [np.asarray(vals, dtype=float) for _, vals in columns]
    if any(a.ndim != 1 for a in arrays):
        raise ValueError("table columns must be one-dimensional")
    if len({a.size for a in arrays}) > 1:
        raise ValueError("table columns must have equal lengths")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# " + " ".join(names) + "\n")
        for row in zip(*arrays):
            fh.write(" ".join(_fmt(v) for v in row) + "\n")


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    return plt


def save_lift_figure(path, lift) -> None:
    """Real and imaginary parts of every branch against the parameter."""
    plt = _pyplot()
    fig, (ax_re, ax_im) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    t = lift.grid.nodes
    n_branches, _, n_comp = lift.branches.shape
    for b in range(n_branches):
        for c in range(n_comp):
            label = f"branch {b}" if n_comp == 1 else f"branch {b}.{c}"
            ax_re.plot(t, lift.branches[b, :, c].real, lw=1.0, label=label)
            ax_im.plot(t, lift.branches[b, :, c].imag, lw=1.0)
    ax_re.set_ylabel("Re")
    ax_im.set_ylabel("Im")
    ax_im.set_xlabel("t")
    if n_branches * n_comp <= 12:
        ax_re.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_scan_figure(path, report) -> None:
    """Derivative norms against the exponent, one line per grid level."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(8, 5))
    p_grid = np.asarray(report.p_grid)
    for level, row in enumerate(report.values):
        ax.semilogy(p_grid, np.asarray(row), marker=".", lw=1.0,
                    label=f"{report.grid_sizes[level]} cells")
    ax.axvline(report.critical_exponent, color="k", ls="--", lw=1.0,
               label="critical exponent")
    if report.p_star is not None:
        ax.axvline(report.p_star, color="r", ls=":", lw=1.0, label="estimated")
    ax.set_xlabel("p")
    ax.set_ylabel("derivative norm")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_cover_figure(path, sel, cover) -> None:
    """Selection magnitudes with the selected intervals drawn underneath."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(8, 5))
    t = sel.grid.nodes
    for j in range(sel.selections.n_components):
        ax.plot(t, np.abs(sel.selections.values[:, j]), lw=1.0, label=f"|selection {j}|")
    y0 = float(np.abs(sel.selections.values).max())
    for i, interval in enumerate(cover.selected):
        level = -0.04 * y0 * (1 + (i % 2))
        ax.hlines(level, interval.s_minus, interval.s_plus, lw=3.0,
                  color="tab:red" if interval.kind == "first" else "tab:orange")
    ax.set_xlabel("t")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_grid_figure(path, grid_lift) -> None:
    """Sheet magnitude heatmap, or the obstruction witness when lifting fails."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 6))
    if grid_lift.values is not None:
        mag = np.abs(grid_lift.values[:, :, 0]).T
        im = ax.imshow(mag, origin="lower", aspect="auto")
        fig.colorbar(im, ax=ax, label="|sheet 0|")
        ax.set_title("lifted sheet magnitude")
    else:
        ax.set_title("monodromy obstruction")
        if grid_lift.report.witness:
            xs = [ix for ix, _ in grid_lift.report.witness]
            ys = [iy for _, iy in grid_lift.report.witness]
            ax.plot(xs + xs[:1], ys + ys[:1], "r.-", lw=1.5)
    ax.set_xlabel("x index")
    ax.set_ylabel("y index")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
