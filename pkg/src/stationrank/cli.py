"""Batch entry point: ingest, per-day analysis, aggregation, exports,
figure reports and the HTTP service."""

from __future__ import annotations

import json
import shutil
import sys
from datetime import date
from pathlib import Path

import click

from . import aggregate as agg_mod
from . import ingest, perturb, report
from .errors import DayUnavailable, StationRankError
from .risk import rankings_csv
from .trajectory import State

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_FATAL = 2


def _fatal(code: str, message: str, **extra):
    payload = {"error": code, "message": message, **extra}
    click.echo(json.dumps(payload), err=True)
    sys.exit(EXIT_FATAL)


def _read_config_file(path: str | None) -> dict:
    """Flat key=value config file; '#' starts a comment."""
    if not path:
        return {}
    out = {}
    try:
        for line in Path(path).read_text().splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad config line: {line!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    except OSError as exc:
        _fatal("UnreadableConfig", str(exc))
    return out


def _resolve(flag_value, config: dict, key: str, default, cast):
    if flag_value is not None:
        return flag_value
    if key in config:
        return cast(config[key])
    return default


def _load_trips(input_dir: Path, fmt: str):
    files = sorted(input_dir.glob("*.csv"))
    if not files:
        raise StationRankError(f"no CSV files in {input_dir}")
    trips = []
    warnings = []
    for path in files:
        parsed, warns = ingest.parse_actual_data(path.read_bytes(), format=fmt)
        trips.extend(parsed)
        warnings.extend(warns)
    return trips, warnings


def _load_directory(results_dir: Path, stations_flag: str | None):
    candidates = []
    if stations_flag:
        candidates.append(Path(stations_flag))
    candidates.append(Path(results_dir) / "stations.csv")
    for path in candidates:
        if path.exists():
            directory, _ = ingest.load_station_directory(path.read_bytes())
            return directory
    return ingest.StationDirectory()


@click.group()
def main():
    """Daily Markov-chain analysis of railway traffic."""


@main.command()
@click.option("--input", "input_dir", type=click.Path(), default=None, help="Directory of trip CSV files.")
@click.option("--stations", type=click.Path(), default=None, help="Station directory CSV.")
@click.option("--from", "date_from", default=None, help="First operation day (ISO).")
@click.option("--to", "date_to", default=None, help="Last operation day (ISO).")
@click.option("--step-minutes", type=int, default=None, help="Discretization step [1].")
@click.option("--t", "intensity", type=float, default=None, help="Disruption intensity [0.95].")
@click.option("--gamma", type=float, default=None, help="Impact threshold [0.05].")
@click.option("--jobs", type=int, default=None, help="Parallel day pipelines [1].")
@click.option("--out", "out_dir", type=click.Path(), default=None, help="Results directory.")
@click.option("--format", "fmt", type=click.Choice(["canonical_csv", "sbb_ist_daten_csv"]), default=None)
@click.option("--config", "config_path", type=click.Path(), default=None, help="key=value config file.")
def analyze(input_dir, stations, date_from, date_to, step_minutes, intensity, gamma, jobs, out_dir, fmt, config_path):
    """Run the full pipeline over a date range and write snapshots,
    aggregate statistics and ranking CSVs."""
    cfg = _read_config_file(config_path)
    input_dir = _resolve(input_dir, cfg, "input", None, str)
    stations = _resolve(stations, cfg, "stations", None, str)
    date_from = _resolve(date_from, cfg, "from", None, str)
    date_to = _resolve(date_to, cfg, "to", None, str)
    step_minutes = _resolve(step_minutes, cfg, "step-minutes", 1, int)
    intensity = _resolve(intensity, cfg, "t", 0.95, float)
    gamma = _resolve(gamma, cfg, "gamma", 0.05, float)
    jobs = _resolve(jobs, cfg, "jobs", 1, int)
    out_dir = _resolve(out_dir, cfg, "out", "results", str)
    fmt = _resolve(fmt, cfg, "format", "canonical_csv", str)

    if input_dir is None:
        _fatal("MissingArgument", "--input is required")
    if not (0.0 < intensity <= 1.0):
        _fatal("InvalidArgument", f"t must be in (0, 1], got {intensity}")
    if gamma < 0:
        _fatal("InvalidArgument", f"gamma must be non-negative, got {gamma}")
    input_path = Path(input_dir)
    if not input_path.is_dir():
        _fatal("MissingInput", f"input directory not found: {input_dir}")

    try:
        trips, warns = _load_trips(input_path, fmt)
    except StationRankError as exc:
        _fatal(type(exc).__name__, str(exc))

    by_day = ingest.group_by_operation_day(trips)
    if date_from:
        lo = date.fromisoformat(date_from)
        by_day = {d: t for d, t in by_day.items() if d >= lo}
    if date_to:
        hi = date.fromisoformat(date_to)
        by_day = {d: t for d, t in by_day.items() if d <= hi}
    if not by_day:
        _fatal("EmptyInput", "no trips in the requested date range")

    day_config = agg_mod.DayConfig(step=step_minutes, t=intensity, gamma=gamma, jobs=1)
    snapshots, failures = agg_mod.run_days(by_day, day_config, day_jobs=jobs)

    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    if stations and Path(stations).exists():
        shutil.copy(stations, out_path / "stations.csv")

    for snap in snapshots:
        agg_mod.save_snapshot(snap, out_path)
        click.echo(
            f"{snap.operation_day.isoformat()}  n={snap.n_states}  "
            f"K={snap.kemeny:.6f}  dropped={snap.dropped_fraction:.6f}"
        )
    for failure in failures:
        click.echo(f"{failure.operation_day.isoformat()}  FAILED: {failure.error}")

    if not snapshots:
        _fatal("NoSuccessfulDays", "every day failed", failures=len(failures))

    monthly = agg_mod.aggregate_range(snapshots)
    agg_mod.save_aggregate(monthly, out_path)
    directory = _load_directory(out_path, stations)
    for measure in ("remoteness", "influence", "fragility"):
        rows = agg_mod.median_ranking(monthly, measure)
        for row in rows:
            row["name"] = directory.name(row["station_id"]) or row["name"]
        (out_path / f"rankings_{measure}.csv").write_text(rankings_csv(rows, measure))

    sys.exit(EXIT_PARTIAL if failures else EXIT_OK)


@main.command()
@click.argument("station")
@click.option("--day", required=True, help="Operation day (ISO).")
@click.option("--t", "intensity", type=float, default=0.95, show_default=True)
@click.option("--out", "out_dir", type=click.Path(), default="results", show_default=True)
@click.option("--stations", type=click.Path(), default=None, help="Station directory CSV.")
@click.option("--figure/--no-figure", default=True, help="Also render the heat map PNG.")
def disrupt(station, day, intensity, out_dir, stations, figure):
    """Disrupt one station on one day; export JSON, GeoJSON and a map."""
    out_path = Path(out_dir)
    try:
        snapshot = _load_snapshot_or_fail(out_path, day)
    except DayUnavailable as exc:
        _fatal("DayUnavailable", str(exc))
    if not (0.0 < intensity <= 1.0):
        _fatal("InvalidArgument", f"t must be in (0, 1], got {intensity}")

    model = agg_mod.model_from_snapshot(snapshot)
    directory = _load_directory(out_path, stations)
    target = _find_station_state(snapshot, station, directory)
    if target is None:
        _fatal("UnknownStation", f"station {station!r} not in the {day} chain")

    result = perturb.disrupt_node(model, target, t=intensity)

    stem = f"disrupt_{day}_{target.origin}"
    (out_path / f"{stem}.json").write_text(
        perturb.export_disruption_json(result, model)
    )
    geojson = _disruption_geojson(result, model, snapshot, directory)
    (out_path / f"{stem}.geojson").write_text(json.dumps(geojson, indent=2))

    dwell_idx = model.dwell_indices
    rel = result.rel_delta[dwell_idx]
    if figure:
        report.render_disruption_map(
            snapshot.station_ids,
            rel,
            directory,
            directory.name(target.origin) or target.origin,
            out_path / f"{stem}.png",
        )
    click.echo(
        f"disrupted {target.origin} on {day} (t={intensity:.6f}): "
        f"max_gain={rel.max():.6f} max_loss={rel.min():.6f}"
    )
    sys.exit(EXIT_OK)


def _load_snapshot_or_fail(out_path: Path, day: str):
    try:
        d = date.fromisoformat(day)
    except ValueError as exc:
        raise DayUnavailable(f"bad day {day!r}: {exc}") from exc
    json_path, npz_path = agg_mod.snapshot_paths(out_path, d)
    if not json_path.exists() or not npz_path.exists():
        raise DayUnavailable(f"no snapshot for {day} in {out_path}")
    return agg_mod.load_snapshot(out_path, d)


def _find_station_state(snapshot, station: str, directory=None) -> State | None:
    for sid, name in zip(snapshot.station_ids, snapshot.station_names):
        names = {sid, name}
        if directory is not None and directory.name(sid):
            names.add(directory.name(sid))
        if station in names:
            return State.dwell(sid)
    return None


def _disruption_geojson(result, model, snapshot, directory):
    dwell_idx = model.dwell_indices
    features = []
    for sid, name, i in zip(snapshot.station_ids, snapshot.station_names, dwell_idx):
        lat, lon = directory.coords(sid)
        rel = float(result.rel_delta[i])
        features.append(
            {
                "type": "Feature",
                "geometry": (
                    {"type": "Point", "coordinates": [lon, lat]}
                    if lat is not None and lon is not None
                    else None
                ),
                "properties": {
                    "station_id": sid,
                    "name": name,
                    "pi": round(float(result.pi[i]), 6),
                    "pi_tilde": round(float(result.pi_tilde[i]), 6),
                    "rel_delta": round(rel, 6),
                    "sign": "positive" if rel >= 0 else "negative",
                    "missing_coordinates": lat is None or lon is None,
                },
            }
        )
    return {
        "type": "FeatureCollection",
        "properties": {"target": result.target.origin, "t": result.t},
        "features": features,
    }


@main.command()
@click.option("--out", "out_dir", type=click.Path(), default="results", show_default=True)
@click.option(
    "--measure",
    type=click.Choice(["remoteness", "influence", "fragility"]),
    default="influence",
    show_default=True,
)
@click.option("--top", type=int, default=10, show_default=True)
def rank(out_dir, measure, top):
    """Print the top/bottom stations by monthly median and write the CSV."""
    out_path = Path(out_dir)
    if not (out_path / "aggregate.json").exists():
        _fatal("AggregateMissing", f"no aggregate.json in {out_dir}")
    monthly = agg_mod.load_aggregate(out_path)
    rows = agg_mod.median_ranking(monthly, measure)
    directory = _load_directory(out_path, None)
    for row in rows:
        row["name"] = directory.name(row["station_id"]) or row["name"]
    (out_path / f"rankings_{measure}.csv").write_text(rankings_csv(rows, measure))

    header = f"{'rank':>4}  {'name':<30} {'pi':>10} {'remoteness':>12} {'influence':>10} {'fragility':>10}"
    click.echo(header)
    shown = rows[:top] + ([] if len(rows) <= 2 * top else rows[-top:])
    for rank_no, row in enumerate(rows, start=1):
        if row not in shown:
            continue
        click.echo(
            f"{rank_no:>4}  {row['name']:<30} {row['pi']:>10.6f} "
            f"{row['remoteness']:>12.6f} {row['influence']:>10.6f} {row['fragility']:>10.6f}"
        )
    sys.exit(EXIT_OK)


@main.command("report")
@click.option("--out", "out_dir", type=click.Path(), default="results", show_default=True)
@click.option("--stations", type=click.Path(), default=None)
@click.option("--day", default=None, help="Render one day only (ISO date).")
@click.option("--figures", "figures_dir", type=click.Path(), default=None, help="Output directory [OUT/figures].")
def report_cmd(out_dir, stations, day, figures_dir):
    """Render map and ranking figures from stored results."""
    out_path = Path(out_dir)
    figures_path = Path(figures_dir) if figures_dir else out_path / "figures"
    directory = _load_directory(out_path, stations)

    days = agg_mod.list_snapshot_days(out_path)
    if day:
        days = [d for d in days if d.isoformat() == day]
        if not days:
            _fatal("DayUnavailable", f"no snapshot for {day}")
    if not days and not (out_path / "aggregate.json").exists():
        _fatal("EmptyInput", f"nothing to render in {out_dir}")

    written = []
    for d in days:
        snapshot = agg_mod.load_snapshot(out_path, d)
        written += report.render_snapshot_figures(snapshot, directory, figures_path)
    if (out_path / "aggregate.json").exists():
        monthly = agg_mod.load_aggregate(out_path)
        written += report.render_aggregate_figures(monthly, figures_path)
    for path in written:
        click.echo(str(path))
    sys.exit(EXIT_OK)


@main.command()
@click.option("--out", "out_dir", type=click.Path(), default="results", show_default=True)
@click.option("--stations", type=click.Path(), default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--webui", "webui_dir", type=click.Path(), default=None, help="Built web UI bundle to serve at /.")
def serve(out_dir, stations, host, port, webui_dir):
    """Serve the HTTP API (and optionally the web UI) over stored results."""
    import uvicorn

    from .service import create_app

    app = create_app(Path(out_dir), stations_path=stations, webui_dir=webui_dir)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
