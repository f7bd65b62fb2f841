"""Report serialization: canonical JSON, CSV, portable graymaps, figures.

Structured outputs are byte-deterministic for a fixed config and seed:
JSON is written with sorted keys and repr-shortest floats, CSV rows come
from the same data, and graymaps are plain P2 text.  Figures are rendered
with the Agg backend alongside the delimited output.
"""

from __future__ import annotations

import csv
import hashlib
import json
from fractions import Fraction
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, default=_jsonify)


def _jsonify(value):
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"not JSON-serializable: {type(value)}")


def write_json(path: Path, obj) -> Path:
    path = Path(path)
    path.write_text(canonical_json(obj) + "\n")
    return path


def write_csv(path: Path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
    return path


def write_pgm(path: Path, values: np.ndarray, levels: int = 255) -> Path:
    """Plain (P2) graymap of an array with entries in [0, 1]."""
    path = Path(path)
    arr = np.clip(np.asarray(values, dtype=float), 0.0, 1.0)
    gray = np.round(arr * levels).astype(int)
    lines = [f"P2", f"{arr.shape[1]} {arr.shape[0]}", str(levels)]
    for row in gray:
        lines.append(" ".join(str(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def rational_str(value) -> str:
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    return repr(value)


def orbit_csv_rows(orbits):
    """Rows of (period, index, coordinates as num/den) for exact orbits."""
    for orbit in orbits:
        for i, pt in enumerate(orbit.points):
            yield (orbit.period, i, *(rational_str(c) for c in pt.coords))


def sha256_file(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def config_hash(config_dict) -> str:
    return hashlib.sha256(canonical_json(config_dict).encode()).hexdigest()


# ---------------------------------------------------------------------------
# figures
# ---------------------------------------------------------------------------

def _save(fig, path: Path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=120, metadata={"Software": "skewlab"})
    plt.close(fig)
    return path


def figure_exponents(table, path: Path) -> Path:
    periods = [oe.orbit.period for oe in table]
    e0 = [oe.sum0.exponent for oe in table]
    e1 = [oe.sum1.exponent for oe in table]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.scatter(periods, e0, marker="o", label="boundary 0", alpha=0.7)
    ax.scatter(periods, e1, marker="x", label="boundary 1", alpha=0.7)
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xlabel("period")
    ax.set_ylabel("central exponent")
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def figure_coverage(first_hit, dims, path: Path) -> Path:
    n1, n2, nf = dims
    grid = (np.asarray(first_hit).reshape(n1, n2, nf) >= 0)
    cols = min(nf, 4)
    rows_n = (nf + cols - 1) // cols
    fig, axes = plt.subplots(rows_n, cols, figsize=(3 * cols, 3 * rows_n),
                             squeeze=False)
    for k in range(nf):
        ax = axes[k // cols][k % cols]
        ax.imshow(grid[:, :, k].T, origin="lower", vmin=0, vmax=1,
                  cmap="gray_r", interpolation="nearest")
        ax.set_title(f"fiber layer {k}", fontsize=9)
        ax.set_xticks([])
        ax.set_yticks([])
    for k in range(nf, rows_n * cols):
        axes[k // cols][k % cols].axis("off")
    fig.suptitle("visited cells by fiber layer")
    fig.tight_layout()
    return _save(fig, path)


def figure_basins(report, path: Path) -> Path:
    n1, n2, nf = report.cells
    frac0 = report.fraction_grid(0).reshape(n1, n2, nf)
    cols = min(nf, 4)
    rows_n = (nf + cols - 1) // cols
    fig, axes = plt.subplots(rows_n, cols, figsize=(3 * cols, 3 * rows_n),
                             squeeze=False)
    for k in range(nf):
        ax = axes[k // cols][k % cols]
        im = ax.imshow(frac0[:, :, k].T, origin="lower", vmin=0, vmax=1,
                       cmap="coolwarm_r", interpolation="nearest")
        ax.set_title(f"fiber layer {k}", fontsize=9)
        ax.set_xticks([])
        ax.set_yticks([])
    for k in range(nf, rows_n * cols):
        axes[k // cols][k % cols].axis("off")
    fig.colorbar(im, ax=[a for row in axes for a in row], shrink=0.8,
                 label="share attracted to the 0-boundary")
    return _save(fig, path)


def basin_pgm_layers(report, out_dir: Path, stem: str) -> list:
    """One P2 graymap per fiber layer of the 0-boundary basin share."""
    n1, n2, nf = report.cells
    frac0 = report.fraction_grid(0).reshape(n1, n2, nf)
    paths = []
    for k in range(nf):
        paths.append(write_pgm(Path(out_dir) / f"{stem}_layer{k}.pgm",
                               frac0[:, :, k]))
    return paths


def figure_density(report, path: Path) -> Path:
    edges = np.asarray(report.hist_edges)
    counts = np.asarray(report.hist_counts)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(edges[:-1], counts, width=np.diff(edges), align="edge",
           edgecolor="k", linewidth=0.3)
    ax.set_xlabel("periodic Birkhoff sum")
    ax.set_ylabel("count")
    ax.set_title(f"dense={report.dense} (eps={report.eps})")
    fig.tight_layout()
    return _save(fig, path)


def figure_ari(report, path: Path) -> Path:
    ms = [st.m for st in report.stages]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ax1.semilogy(ms, [2.0 ** (-m + 2) for m in ms], "k--",
                 label="certified ceiling")
    ax1.semilogy(ms, [st.independence_vs_p0 for st in report.stages], "o-",
                 label="witnessed gap")
    ax1.semilogy(ms, [st.independence_bound_q0 for st in report.stages], "s-",
                 label="transported bound")
    ax1.set_xlabel("stage m")
    ax1.legend(fontsize=8)
    ax2.semilogy(ms, [st.exponent_drift for st in report.stages], "o-")
    ax2.set_xlabel("stage m")
    ax2.set_ylabel("exponent drift")
    fig.tight_layout()
    return _save(fig, path)


def figure_perturbation(table_before, table_after_pairs, tau, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 5))
    xs = [oe.sum0.exponent for oe in table_before]
    ys = [g for g in table_after_pairs]
    ax.scatter(xs, ys, s=18)
    lo = min(xs + ys) - 0.05
    hi = max(xs + ys) + 0.05
    ax.plot([lo, hi], [lo - tau, hi - tau], "k--", lw=0.8,
            label=f"shift by -{tau}")
    ax.set_xlabel("exponent before")
    ax.set_ylabel("exponent after")
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def figure_counterexample(phi, U, V, report, path: Path, n_range: int = 12) -> Path:
    fig, ax = plt.subplots(figsize=(7, 3.2))
    for n in range(-n_range, n_range + 1):
        img = phi.image(U, n)
        ax.plot([img.lo, img.hi], [n, n], lw=3, color="tab:blue")
    ax.axvspan(V.lo, V.hi, color="tab:red", alpha=0.3, label="V")
    ax.set_xlabel("fiber coordinate")
    ax.set_ylabel("iterate n of U")
    ax.set_title(f"violations={report.violations} over {report.total_iterations} steps")
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)
