from datetime import date, datetime

import numpy as np
import pytest
from scipy import sparse

from stationrank.ingest import StopEvent, Trip

DAY = date(2019, 10, 1)


def ts(hhmm: str, day: date = DAY) -> datetime:
    h, m = hhmm.split(":")
    return datetime(day.year, day.month, day.day, int(h), int(m))


def make_trip(trip_id, stops, day=DAY, mode="train"):
    """stops: list of (station_id, arrival 'HH:MM' or None,
    departure 'HH:MM' or None[, passthrough])."""
    events = []
    for stop in stops:
        sid, arr, dep = stop[:3]
        passthrough = stop[3] if len(stop) > 3 else False
        events.append(
            StopEvent(
                station_id=sid,
                station_name=sid,
                arrival=ts(arr, day) if arr else None,
                departure=ts(dep, day) if dep else None,
                is_passthrough=passthrough,
            )
        )
    return Trip(trip_id=trip_id, operation_day=day, stops=tuple(events), mode=mode)


def random_irreducible_counts(n, rng, density=0.3, max_count=9):
    """Integer count matrix that is strongly connected and aperiodic:
    random sparse counts on top of a ring, with positive diagonal."""
    A = (rng.random((n, n)) < density) * rng.integers(1, max_count + 1, (n, n))
    for i in range(n):
        A[i, (i + 1) % n] = max(A[i, (i + 1) % n], 1)  # ring keeps it connected
        A[i, i] = max(A[i, i], 1)  # self-loop keeps it aperiodic
    return A.astype(np.int64)


def counts_to_P(A):
    A = np.asarray(A, dtype=float)
    return A / A.sum(axis=1, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(20191001)


def line_hub_day(n_leaves=5, day=DAY):
    """Star-shaped toy day: hub H with out-and-back trips to each leaf."""
    trips = []
    for k in range(n_leaves):
        leaf = f"L{k}"
        trips.append(
            make_trip(
                f"out{k}",
                [("H", "08:00", "08:02"), (leaf, "08:06", "08:08")],
                day=day,
            )
        )
        trips.append(
            make_trip(
                f"back{k}",
                [(leaf, "09:00", "09:02"), ("H", "09:06", "09:08")],
                day=day,
            )
        )
    return trips


def sparse_P(rows):
    return sparse.csr_matrix(np.asarray(rows, dtype=float))


STATIONS_CSV = (
    "station_id,name,lat,lon\n"
    "H,Hub Central,47.00,8.00\n"
    "L0,Leaf Nord,47.10,8.00\n"
    "L1,Leaf Ost,47.00,8.10\n"
    "L2,Leaf Sued,46.90,8.00\n"
    "L3,Leaf West,47.00,7.90\n"
    "L4,Leaf Hoch,47.10,8.10\n"
)


@pytest.fixture(scope="session")
def toy_workspace(tmp_path_factory):
    """Input directory with two toy days of canonical trips plus a station
    directory, ready for the batch entry point."""
    import dataclasses
    from datetime import timedelta

    from stationrank import ingest as ingest_mod

    root = tmp_path_factory.mktemp("toy")
    input_dir = root / "input"
    input_dir.mkdir()
    trips = []
    for offset in (0, 1):
        day = DAY + timedelta(days=offset)
        for trip in line_hub_day(day=day):
            trips.append(dataclasses.replace(trip, trip_id=f"{trip.trip_id}d{offset}"))
    (input_dir / "trips.csv").write_text(ingest_mod.trips_to_canonical_csv(trips))
    (root / "stations.csv").write_text(STATIONS_CSV)
    return root


@pytest.fixture(scope="session")
def toy_results(toy_workspace):
    """Results directory produced by one batch run over the toy corpus."""
    from click.testing import CliRunner

    from stationrank.cli import main

    out_dir = toy_workspace / "results"
    result = CliRunner().invoke(
        main,
        [
            "analyze",
            "--input",
            str(toy_workspace / "input"),
            "--stations",
            str(toy_workspace / "stations.csv"),
            "--out",
            str(out_dir),
        ],
    )
    assert result.exit_code == 0, result.output
    return out_dir
