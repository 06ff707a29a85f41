"""Per-day pipeline orchestration, snapshot persistence and time-series
aggregation.

One operation day is one chain: discretize trips, count transitions,
restrict to the strongly connected core, solve the chain, sweep node
disruptions and reduce to risk measures. Daily snapshots persist as a
JSON header plus an ``.npz`` of vectors so the HTTP service can serve
cold results (and rebuild the chain for on-demand disruptions) without
recomputation.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

import numpy as np
from scipy import sparse

from .errors import NoSuccessfulDays, StationRankError
from .graph import TransitionGraph, build_transition_graph, strongly_connected_restrict
from .ingest import Trip
from .markov import MarkovModel, build_markov, spectral_clusters
from .perturb import perturb_all_nodes
from .risk import DEFAULT_GAMMA, compute_risk
from .trajectory import State, discretize_day

MEASURES = [
    "inflow",
    "outflow",
    "pi",
    "cluster",
    "remoteness",
    "influence",
    "fragility",
]


@dataclass
class DayConfig:
    step: int = 1
    t: float = 0.95
    gamma: float = DEFAULT_GAMMA
    jobs: int = 1


@dataclass
class DailySnapshot:
    operation_day: date
    config: DayConfig
    # dwell-station table (aligned arrays)
    station_ids: list[str]
    station_names: list[str]
    inflow: np.ndarray
    outflow: np.ndarray
    pi: np.ndarray
    cluster: np.ndarray
    remoteness: np.ndarray
    influence: np.ndarray
    fragility: np.ndarray
    # chain level
    n_states: int
    kemeny: float
    lambda2: complex
    lambda2_is_real: bool
    cluster_degenerate: bool
    dropped_fraction: float
    # full chain payload, enough to rebuild the model for on-demand disruption
    state_kinds: list[str] = field(repr=False, default_factory=list)
    state_origins: list[str] = field(repr=False, default_factory=list)
    state_dests: list[str] = field(repr=False, default_factory=list)
    counts: sparse.csr_matrix | None = field(repr=False, default=None)
    pi_full: np.ndarray | None = field(repr=False, default=None)
    warnings: list[str] = field(default_factory=list)


@dataclass
class DayFailure:
    operation_day: date
    error: str


@dataclass
class MonthlyAggregate:
    days: list[date]
    station_ids: list[str]  # union across days, sorted
    station_names: dict[str, str]
    # measure -> station_id -> {min, max, median, std, presence}
    stats: dict[str, dict[str, dict[str, float]]]


def run_day(trips: list[Trip], config: DayConfig | None = None) -> DailySnapshot:
    """Full pipeline for one operation day."""
    config = config or DayConfig()
    if not trips:
        raise StationRankError("no trips for this day")
    day = trips[0].operation_day

    name_of: dict[str, str] = {}
    for trip in trips:
        for stop in trip.stops:
            name_of.setdefault(stop.station_id, stop.station_name)

    sequences, warns = discretize_day(trips, step=config.step)
    graph = build_transition_graph(sequences)
    scc = strongly_connected_restrict(graph)
    model = build_markov(scc.largest)

    clusters, is_real, degenerate = spectral_clusters(model)
    sweep, failures = perturb_all_nodes(
        model, t=config.t, dwell_only=True, jobs=config.jobs
    )
    risk = compute_risk(model, sweep, gamma=config.gamma)

    dwell_idx = model.dwell_indices
    station_ids = [model.states[i].origin for i in dwell_idx]

    counts = scc.largest.counts
    inflow = np.asarray(counts.sum(axis=0)).ravel()[dwell_idx].astype(float)
    outflow = np.asarray(counts.sum(axis=1)).ravel()[dwell_idx].astype(float)

    influence_by_state = {s: v for s, v in zip(risk.targets, risk.influence)}
    influence = np.array(
        [influence_by_state.get(model.states[i], 0.0) for i in dwell_idx]
    )

    warn_msgs = [str(w) for w in warns]
    warn_msgs += [f"disruption skipped for {s.label}: {msg}" for s, msg in failures.items()]

    return DailySnapshot(
        operation_day=day,
        config=config,
        station_ids=station_ids,
        station_names=[name_of.get(sid, sid) for sid in station_ids],
        inflow=inflow,
        outflow=outflow,
        pi=model.pi[dwell_idx],
        cluster=clusters[dwell_idx].astype(np.int8),
        remoteness=risk.remoteness[dwell_idx],
        influence=influence,
        fragility=risk.fragility[dwell_idx],
        n_states=model.n,
        kemeny=model.kemeny,
        lambda2=model.second_eigenvalue,
        lambda2_is_real=is_real,
        cluster_degenerate=degenerate,
        dropped_fraction=scc.dropped_fraction,
        state_kinds=[s.kind for s in model.states],
        state_origins=[s.origin for s in model.states],
        state_dests=[s.dest for s in model.states],
        counts=counts,
        pi_full=model.pi,
        warnings=warn_msgs,
    )


def run_days(
    trips_by_day: dict[date, list[Trip]],
    config: DayConfig | None = None,
    day_jobs: int = 1,
) -> tuple[list[DailySnapshot], list[DayFailure]]:
    """Run the day pipeline over a date-keyed trip map; failed days are
    recorded, not fatal."""
    config = config or DayConfig()

    def one(item):
        day, trips = item
        try:
            return run_day(trips, config), None
        except StationRankError as exc:
            return None, DayFailure(day, str(exc))

    items = sorted(trips_by_day.items())
    if day_jobs > 1:
        with ThreadPoolExecutor(max_workers=day_jobs) as pool:
            outcomes = list(pool.map(one, items))
    else:
        outcomes = [one(i) for i in items]
    snapshots = [s for s, _ in outcomes if s is not None]
    failures = [f for _, f in outcomes if f is not None]
    return snapshots, failures


def aggregate_range(snapshots: list[DailySnapshot]) -> MonthlyAggregate:
    """Descriptive statistics (min, max, median, population std) per station
    and measure over the days where the station was present."""
    if not snapshots:
        raise NoSuccessfulDays("no successful day snapshots")

    station_ids = sorted({sid for s in snapshots for sid in s.station_ids})
    names: dict[str, str] = {}
    series: dict[str, dict[str, list[float]]] = {
        m: {sid: [] for sid in station_ids} for m in MEASURES
    }
    for snap in snapshots:
        index = {sid: i for i, sid in enumerate(snap.station_ids)}
        for sid, name in zip(snap.station_ids, snap.station_names):
            names.setdefault(sid, name)
        for measure in MEASURES:
            values = getattr(snap, measure)
            for sid, i in index.items():
                series[measure][sid].append(float(values[i]))

    stats: dict[str, dict[str, dict[str, float]]] = {}
    for measure in MEASURES:
        stats[measure] = {}
        for sid in station_ids:
            vals = np.array(series[measure][sid])
            if vals.size == 0:
                continue
            stats[measure][sid] = {
                "min": float(vals.min()),
                "max": float(vals.max()),
                "median": float(np.median(vals)),
                "std": float(vals.std()),  # population convention
                "presence": int(vals.size),
            }
    return MonthlyAggregate(
        days=sorted(s.operation_day for s in snapshots),
        station_ids=station_ids,
        station_names=names,
        stats=stats,
    )


# --- persistence ----------------------------------------------------------


def snapshot_paths(results_dir: Path, day: date) -> tuple[Path, Path]:
    stem = day.isoformat()
    return results_dir / f"{stem}.json", results_dir / f"{stem}.npz"


def save_snapshot(snapshot: DailySnapshot, results_dir: Path) -> None:
    results_dir = Path(results_dir)
    results_dir.mkdir(parents=True, exist_ok=True)
    json_path, npz_path = snapshot_paths(results_dir, snapshot.operation_day)
    header = {
        "operation_day": snapshot.operation_day.isoformat(),
        "config": {
            "step": snapshot.config.step,
            "t": snapshot.config.t,
            "gamma": snapshot.config.gamma,
        },
        "n_states": snapshot.n_states,
        "kemeny": snapshot.kemeny,
        "lambda2": {"re": snapshot.lambda2.real, "im": snapshot.lambda2.imag},
        "lambda2_is_real": snapshot.lambda2_is_real,
        "cluster_degenerate": snapshot.cluster_degenerate,
        "dropped_fraction": snapshot.dropped_fraction,
        "station_ids": snapshot.station_ids,
        "station_names": snapshot.station_names,
        "warnings": snapshot.warnings,
        "vectors_file": npz_path.name,
    }
    json_path.write_text(json.dumps(header, indent=2))
    counts = snapshot.counts.tocsr()
    np.savez_compressed(
        npz_path,
        inflow=snapshot.inflow,
        outflow=snapshot.outflow,
        pi=snapshot.pi,
        cluster=snapshot.cluster,
        remoteness=snapshot.remoteness,
        influence=snapshot.influence,
        fragility=snapshot.fragility,
        pi_full=snapshot.pi_full,
        counts_data=counts.data,
        counts_indices=counts.indices,
        counts_indptr=counts.indptr,
        state_kinds=np.array(snapshot.state_kinds),
        state_origins=np.array(snapshot.state_origins),
        state_dests=np.array(snapshot.state_dests),
    )


def load_snapshot(results_dir: Path, day: date) -> DailySnapshot:
    json_path, npz_path = snapshot_paths(Path(results_dir), day)
    header = json.loads(json_path.read_text())
    vecs = np.load(npz_path, allow_pickle=False)
    n = header["n_states"]
    counts = sparse.csr_matrix(
        (vecs["counts_data"], vecs["counts_indices"], vecs["counts_indptr"]),
        shape=(n, n),
    )
    return DailySnapshot(
        operation_day=date.fromisoformat(header["operation_day"]),
        config=DayConfig(
            step=header["config"]["step"],
            t=header["config"]["t"],
            gamma=header["config"]["gamma"],
        ),
        station_ids=header["station_ids"],
        station_names=header["station_names"],
        inflow=vecs["inflow"],
        outflow=vecs["outflow"],
        pi=vecs["pi"],
        cluster=vecs["cluster"],
        remoteness=vecs["remoteness"],
        influence=vecs["influence"],
        fragility=vecs["fragility"],
        n_states=n,
        kemeny=header["kemeny"],
        lambda2=complex(header["lambda2"]["re"], header["lambda2"]["im"]),
        lambda2_is_real=header["lambda2_is_real"],
        cluster_degenerate=header["cluster_degenerate"],
        dropped_fraction=header["dropped_fraction"],
        state_kinds=[str(x) for x in vecs["state_kinds"]],
        state_origins=[str(x) for x in vecs["state_origins"]],
        state_dests=[str(x) for x in vecs["state_dests"]],
        counts=counts,
        pi_full=vecs["pi_full"],
        warnings=header.get("warnings", []),
    )


def list_snapshot_days(results_dir: Path) -> list[date]:
    out = []
    for path in sorted(Path(results_dir).glob("*.json")):
        if path.name == "aggregate.json":
            continue
        try:
            out.append(date.fromisoformat(path.stem))
        except ValueError:
            continue
    return out


def model_from_snapshot(snapshot: DailySnapshot) -> MarkovModel:
    """Rebuild the day's chain from the persisted counts and stationary
    vector (no re-solve needed)."""
    states = [
        State(kind=k, origin=o, dest=d)
        for k, o, d in zip(
            snapshot.state_kinds, snapshot.state_origins, snapshot.state_dests
        )
    ]
    counts = snapshot.counts.astype(float)
    row_sums = np.asarray(counts.sum(axis=1)).ravel()
    P = (sparse.diags(1.0 / row_sums) @ counts).tocsr()
    return MarkovModel(states=states, P=P, pi=np.asarray(snapshot.pi_full, dtype=float))


def save_aggregate(agg: MonthlyAggregate, results_dir: Path) -> None:
    payload = {
        "days": [d.isoformat() for d in agg.days],
        "station_ids": agg.station_ids,
        "station_names": agg.station_names,
        "stats": agg.stats,
    }
    (Path(results_dir) / "aggregate.json").write_text(json.dumps(payload, indent=2))


def load_aggregate(results_dir: Path) -> MonthlyAggregate:
    path = Path(results_dir) / "aggregate.json"
    payload = json.loads(path.read_text())
    return MonthlyAggregate(
        days=[date.fromisoformat(d) for d in payload["days"]],
        station_ids=payload["station_ids"],
        station_names=payload["station_names"],
        stats=payload["stats"],
    )


def median_ranking(agg: MonthlyAggregate, measure: str) -> list[dict]:
    """Stations sorted by descending monthly median of ``measure``; ties
    break by station id. Rows carry the medians of the table measures."""
    if measure not in MEASURES:
        raise ValueError(f"unknown measure: {measure}")

    def med(m, sid):
        entry = agg.stats.get(m, {}).get(sid)
        return entry["median"] if entry else math.nan

    rows = []
    for sid in agg.station_ids:
        if sid not in agg.stats.get(measure, {}):
            continue
        rows.append(
            {
                "station_id": sid,
                "name": agg.station_names.get(sid, sid),
                "pi": med("pi", sid),
                "remoteness": med("remoteness", sid),
                "influence": med("influence", sid),
                "fragility": med("fragility", sid),
                "value": med(measure, sid),
            }
        )
    rows.sort(key=lambda r: (-r["value"], r["station_id"]))
    return rows
