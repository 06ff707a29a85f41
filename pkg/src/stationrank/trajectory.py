"""Minute-resolution discretization of trips into Markovian state sequences.

The state space mixes dwell states (a train standing at a station) with
running states (a train in transit between an ordered pair of stations).
Each time step of a discretized trip maps to exactly one state.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from datetime import date, datetime, time, timedelta
from typing import Iterable

from .errors import DegenerateTrip, StateAmbiguity
from .ingest import IngestWarning, Trip


@dataclass(frozen=True, order=True)
class State:
    kind: str  # "dwell" | "run"
    origin: str
    dest: str = ""

    @staticmethod
    def dwell(station_id: str) -> "State":
        return State("dwell", station_id)

    @staticmethod
    def run(a: str, b: str) -> "State":
        if a == b:
            raise ValueError(f"running state requires distinct endpoints, got {a!r}")
        return State("run", a, b)

    @property
    def is_dwell(self) -> bool:
        return self.kind == "dwell"

    @property
    def label(self) -> str:
        if self.is_dwell:
            return f"({self.origin})"
        return f"({self.origin}->{self.dest})"

    def __repr__(self):
        return self.label


@dataclass
class StateSequence:
    trip_id: str
    operation_day: date
    states: list[State]
    start_minute: int  # minute-of-operation-day of the first entry
    step: int = 1  # minutes per entry


def _minute_of_day(dt: datetime, day: date) -> int:
    delta = dt - datetime.combine(day, time(0, 0))
    return int(delta.total_seconds() // 60)


def legal_adjacency(a: State, b: State) -> bool:
    """Whether a->b is a valid consecutive state pattern.

    Allowed: staying put, leaving a station into one of its runs, a run
    arriving at its destination, a direct station-to-station hop
    (sub-minute run), and chained run legs through a passthrough waypoint.
    Trips whose stops collide within a single minute can additionally skip
    a zero-minute state; such handoffs are outside these patterns.
    """
    if a == b:
        return True
    if a.is_dwell and not b.is_dwell:
        return b.origin == a.origin
    if not a.is_dwell and b.is_dwell:
        return b.origin == a.dest
    if a.is_dwell and b.is_dwell:
        return True  # sub-minute run collapses to a direct hop
    return a.dest == b.origin  # run -> run via passthrough


def discretize_trip(trip: Trip, step: int = 1) -> StateSequence:
    """Discretize one trip into a state per time step.

    A minute inside a stop's [arrival, departure] window maps to the dwell
    state; minutes between consecutive stops map to the running state of
    that leg. Boundary minutes shared by a departure and the start of a run
    stay with the dwell state. Passthrough waypoints take no dwell minutes
    but split the surrounding run into per-leg running states.
    """
    if step < 1:
        raise ValueError("step must be a positive whole number of minutes")
    day = trip.operation_day

    # Route points: (station_id, arr_minute, dep_minute, is_halt). Missing
    # arrival/departure imputed as the present one. Boundary passthroughs
    # degrade to halts since there is no adjacent run leg to absorb them.
    points = []
    for idx, stop in enumerate(trip.stops):
        arr = _minute_of_day(stop.arrival or stop.departure, day)
        dep = _minute_of_day(stop.departure or stop.arrival, day)
        halt = not stop.is_passthrough or idx in (0, len(trip.stops) - 1)
        points.append((stop.station_id, arr, dep, halt))

    start = points[0][1]
    end = points[-1][2]
    if end == start:
        raise DegenerateTrip(f"trip {trip.trip_id}: all stops within one minute")

    # Segments of consecutive minutes mapped to one state each.
    segments: list[tuple[State, int, int]] = []  # (state, lo, hi) inclusive
    for i, (sid, arr, dep, halt) in enumerate(points):
        if halt:
            segments.append((State.dwell(sid), arr, dep))
        run_from = dep + 1  # waypoint minute itself belongs to the incoming leg
        if i + 1 < len(points):
            nsid, narr, ndep, nhalt = points[i + 1]
            # a passthrough's whole time window rides on the incoming leg
            run_to = ndep if not nhalt else narr - 1
            if run_to >= run_from and sid != nsid:
                segments.append((State.run(sid, nsid), run_from, run_to))

    # Assemble the fine (1-minute) sequence. Sequential fill with a cursor
    # keeps the step->state map injective by construction: at a boundary
    # minute shared by two segments the earlier one (the dwell) wins.
    fine: list[State] = []
    cursor = start
    for state, lo, hi in segments:
        lo = max(lo, cursor)
        if hi < lo:
            continue
        if lo > cursor:
            raise StateAmbiguity(
                f"trip {trip.trip_id}: minutes {cursor}..{lo - 1} unassigned"
            )
        fine.extend([state] * (hi - lo + 1))
        cursor = hi + 1
    if cursor != end + 1:
        raise StateAmbiguity(f"trip {trip.trip_id}: minutes {cursor}..{end} unassigned")

    if step == 1:
        states = list(fine)
    else:
        idxs = list(range(0, len(fine), step))
        states = [fine[i] for i in idxs]
        # A coarse step is an error as soon as it would skip over a state.
        for a, b in zip(idxs, idxs[1:]):
            between = set(fine[a : b + 1])
            if not between <= {fine[a], fine[b]}:
                raise StateAmbiguity(
                    f"trip {trip.trip_id}: step {step}min spans "
                    f"{len(between)} states between minutes {a + start} and {b + start}"
                )

    return StateSequence(
        trip_id=trip.trip_id,
        operation_day=day,
        states=states,
        start_minute=start,
        step=step,
    )


def discretize_day(
    trips: Iterable[Trip], step: int = 1
) -> tuple[list[StateSequence], list[IngestWarning]]:
    """Discretize all trips of one operation day; per-trip failures become
    warnings, never aborts."""
    sequences: list[StateSequence] = []
    warnings: list[IngestWarning] = []
    for trip in trips:
        try:
            sequences.append(discretize_trip(trip, step=step))
        except (DegenerateTrip, StateAmbiguity) as exc:
            warnings.append(IngestWarning(f"trip skipped: {exc}"))
    return sequences, warnings


def sequences_to_csv(sequences: Iterable[StateSequence]) -> str:
    """Debug dump: one row per (trip, minute, state)."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["trip_id", "minute", "state_kind", "from", "to"])
    for seq in sequences:
        for i, state in enumerate(seq.states):
            writer.writerow(
                [
                    seq.trip_id,
                    seq.start_minute + i * seq.step,
                    state.kind,
                    state.origin,
                    state.dest,
                ]
            )
    return buf.getvalue()
