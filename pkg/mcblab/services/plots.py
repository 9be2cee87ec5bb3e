"""
SVG Figures

Plots are drawn from table rows (as written to or read back from CSV), so
`report --from` can redraw them without simulating again.
"""

import logging
from pathlib import Path
from typing import Sequence

import matplotlib as mpl

mpl.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

logger = logging.getLogger(__name__)

mpl.rcParams.update({
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.figsize": (6.0, 3.6),
    "savefig.bbox": "tight",
    "svg.hashsalt": "mcblab",     # stable ids inside the SVG
})


def _column(rows: Sequence[dict], key: str) -> list[float]:
    return [float(row[key]) for row in rows]


def _save(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info("wrote %s", path)
    return path


def plot_totals(rows: Sequence[dict], path: Path, max_replicas: int = 20) -> Path:
    """Time series of z1 and z2 for the first few replicas of a path table."""
    fig, (ax1, ax2) = plt.subplots(ncols=2, sharex=True)
    replicas = sorted({int(row["replica"]) for row in rows})[:max_replicas]
    for r in replicas:
        mine = [row for row in rows if int(row["replica"]) == r]
        t = _column(mine, "time_rescaled")
        ax1.plot(t, _column(mine, "z1"), lw=0.7)
        ax2.plot(t, _column(mine, "z2"), lw=0.7)
    ax1.set_ylabel("$z_1$")
    ax2.set_ylabel("$z_2$")
    for ax in (ax1, ax2):
        ax.set_xlabel("time")
    return _save(fig, path)


def plot_ks_trend(rows: Sequence[dict], x_key: str, path: Path, log_x: bool = True) -> Path:
    """KS distance of both total-mass coordinates along a parameter grid."""
    fig, ax = plt.subplots()
    x = _column(rows, x_key)
    for key, marker in (("ks_z1", "o"), ("ks_z2", "s")):
        ax.plot(x, _column(rows, key), marker=marker, label=key.replace("ks_", ""))
    if log_x:
        ax.set_xscale("log")
    ax.set_xlabel(x_key)
    ax.set_ylabel("KS distance")
    ax.legend()
    return _save(fig, path)


def plot_transform_gaps(rows: Sequence[dict], path: Path) -> Path:
    """Transform gaps per (y, b) pair along the N grid."""
    fig, ax = plt.subplots()
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        key = tuple(float(row[k]) for k in ("y1", "y2", "b1", "b2"))
        groups.setdefault(key, []).append(row)
    for mine in groups.values():
        ax.plot(_column(mine, "n_sites"), _column(mine, "gap"), lw=0.7, marker=".")
    ax.set_xscale("log")
    ax.set_xlabel("N")
    ax.set_ylabel("|transform difference|")
    return _save(fig, path)


def plot_nu_moments(rows: Sequence[dict], path: Path) -> Path:
    """Sampled against closed-form nu quantities."""
    fig, ax = plt.subplots()
    exact = _column(rows, "exact")
    estimate = _column(rows, "estimate")
    ax.scatter(exact, estimate, s=12)
    lo, hi = min(exact + estimate), max(exact + estimate)
    ax.plot([lo, hi], [lo, hi], color="grey", lw=0.7, ls="--")
    for row, x, y in zip(rows, exact, estimate):
        ax.annotate(str(row["quantity"]), (x, y), fontsize=6)
    ax.set_xlabel("closed form")
    ax.set_ylabel("sampled")
    return _save(fig, path)


# table name -> drawing function, used by `report`
TABLE_PLOTS = {
    "paths": lambda rows, path: plot_totals(rows, path),
    "theorem0": lambda rows, path: plot_ks_trend(rows, "gamma", path),
    "theorem1": lambda rows, path: plot_ks_trend(rows, "n_sites", path),
    "theorem2": plot_transform_gaps,
    "nu_sampler": plot_nu_moments,
}
