"""Figure rendering for daily snapshots, disruption results and monthly
rankings. Figures are written as PNG files next to the delimited exports."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .aggregate import DailySnapshot, MonthlyAggregate, median_ranking
from .ingest import StationDirectory


def _station_coords(station_ids, directory: StationDirectory):
    lats, lons, have = [], [], []
    for sid in station_ids:
        lat, lon = directory.coords(sid)
        if lat is None or lon is None:
            have.append(False)
            lats.append(np.nan)
            lons.append(np.nan)
        else:
            have.append(True)
            lats.append(lat)
            lons.append(lon)
    return np.array(lons), np.array(lats), np.array(have)


def render_stationary_map(
    snapshot: DailySnapshot, directory: StationDirectory, path: Path
) -> Path:
    """Scatter map of stationary occupancy per station."""
    x, y, have = _station_coords(snapshot.station_ids, directory)
    pi = snapshot.pi
    fig, ax = plt.subplots(figsize=(9, 6))
    sc = ax.scatter(
        x[have],
        y[have],
        s=20 + 2000 * pi[have] / max(pi.max(), 1e-12),
        c=pi[have],
        cmap="viridis",
        alpha=0.8,
        edgecolors="none",
    )
    fig.colorbar(sc, ax=ax, label="stationary occupancy")
    ax.set_title(f"Stationary distribution, {snapshot.operation_day.isoformat()}")
    ax.set_xlabel("longitude")
    ax.set_ylabel("latitude")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_cluster_map(
    snapshot: DailySnapshot, directory: StationDirectory, path: Path
) -> Path:
    """Two-color map of the second-eigenvector sign clusters."""
    x, y, have = _station_coords(snapshot.station_ids, directory)
    cluster = snapshot.cluster
    fig, ax = plt.subplots(figsize=(9, 6))
    if snapshot.cluster_degenerate:
        ax.scatter(x[have], y[have], s=25, c="grey", alpha=0.8)
        ax.set_title(
            f"Spectral clusters, {snapshot.operation_day.isoformat()} (degenerate)"
        )
    else:
        colors = np.where(cluster >= 0, "tab:orange", "tab:blue")
        ax.scatter(x[have], y[have], s=25, c=colors[have], alpha=0.8)
        suffix = "" if snapshot.lambda2_is_real else " (complex lambda2, indicative)"
        ax.set_title(
            f"Spectral clusters, {snapshot.operation_day.isoformat()}{suffix}"
        )
    ax.set_xlabel("longitude")
    ax.set_ylabel("latitude")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_disruption_map(
    station_ids: list[str],
    rel_delta: np.ndarray,
    directory: StationDirectory,
    target_name: str,
    path: Path,
) -> Path:
    """Diverging red/blue map of relative occupancy change, symmetric
    about zero."""
    x, y, have = _station_coords(station_ids, directory)
    lim = max(float(np.max(np.abs(rel_delta))), 1e-12)
    fig, ax = plt.subplots(figsize=(9, 6))
    sc = ax.scatter(
        x[have],
        y[have],
        s=25,
        c=rel_delta[have],
        cmap="RdBu_r",
        vmin=-lim,
        vmax=lim,
        alpha=0.85,
        edgecolors="none",
    )
    fig.colorbar(sc, ax=ax, label="relative change of occupancy")
    ax.set_title(f"Disruption at {target_name}")
    ax.set_xlabel("longitude")
    ax.set_ylabel("latitude")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_ranking_bars(
    agg: MonthlyAggregate, measure: str, path: Path, top: int = 10
) -> Path:
    """Horizontal bars of the highest and lowest monthly medians."""
    rows = median_ranking(agg, measure)
    head = rows[:top]
    tail = rows[-top:] if len(rows) > top else []
    fig, axes = plt.subplots(
        1, 2 if tail else 1, figsize=(11, 0.45 * max(len(head), len(tail)) + 2)
    )
    axes = np.atleast_1d(axes)
    for ax, part, label in zip(axes, [head, tail], ["highest", "lowest"]):
        if not part:
            continue
        names = [r["name"] for r in part][::-1]
        vals = [r["value"] for r in part][::-1]
        ax.barh(names, vals, color="tab:blue")
        ax.set_title(f"{measure}: {label} {len(part)}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_snapshot_figures(
    snapshot: DailySnapshot, directory: StationDirectory, out_dir: Path
) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = snapshot.operation_day.isoformat()
    return [
        render_stationary_map(snapshot, directory, out_dir / f"{stem}_stationary.png"),
        render_cluster_map(snapshot, directory, out_dir / f"{stem}_clusters.png"),
    ]


def render_aggregate_figures(
    agg: MonthlyAggregate, out_dir: Path, top: int = 10
) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return [
        render_ranking_bars(agg, m, out_dir / f"ranking_{m}.png", top=top)
        for m in ("remoteness", "influence", "fragility")
    ]
