"""HTTP API over precomputed snapshots plus on-demand perturbation.

Read-only with respect to the stored results: day summaries, per-station
stationary views and monthly aggregates come straight from the store,
while disruptions are computed on request against a cached, immutable
rebuild of the day's chain.
"""

from __future__ import annotations

import logging
import threading
from collections import OrderedDict
from datetime import date
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import aggregate as agg_mod
from . import ingest, perturb
from .aggregate import MEASURES
from .errors import StationRankError

log = logging.getLogger(__name__)


def _r6(x: float) -> float:
    return round(float(x), 6)


class DisruptRequest(BaseModel):
    station_id: str
    t: float | None = None


class ResultStore:
    """Snapshot store with a bounded day-keyed model cache. Model loads are
    single-flight: concurrent first requests for a day trigger one load."""

    def __init__(self, results_dir: Path, stations_path=None, cache_size: int = 8):
        self.results_dir = Path(results_dir)
        self.cache_size = cache_size
        self._cache: OrderedDict[date, tuple] = OrderedDict()
        self._cache_lock = threading.Lock()
        self._day_locks: dict[date, threading.Lock] = {}
        self._disrupt_cache: OrderedDict[tuple, dict] = OrderedDict()

        self.directory = ingest.StationDirectory()
        for candidate in filter(None, [stations_path, self.results_dir / "stations.csv"]):
            path = Path(candidate)
            if path.exists():
                self.directory, _ = ingest.load_station_directory(path.read_bytes())
                break

    def days(self) -> list[dict]:
        out = []
        for day in agg_mod.list_snapshot_days(self.results_dir):
            try:
                snap = agg_mod.load_snapshot(self.results_dir, day)
            except (OSError, KeyError, ValueError) as exc:
                log.warning("skipping malformed snapshot for %s: %s", day, exc)
                continue
            out.append(
                {
                    "day": day.isoformat(),
                    "n": snap.n_states,
                    "kemeny": _r6(snap.kemeny),
                    "dropped_fraction": _r6(snap.dropped_fraction),
                }
            )
        return out

    def _day_lock(self, day: date) -> threading.Lock:
        with self._cache_lock:
            return self._day_locks.setdefault(day, threading.Lock())

    def load(self, day: date):
        """(snapshot, model) for a day, cached LRU by day."""
        with self._cache_lock:
            if day in self._cache:
                self._cache.move_to_end(day)
                return self._cache[day]
        with self._day_lock(day):
            with self._cache_lock:
                if day in self._cache:
                    self._cache.move_to_end(day)
                    return self._cache[day]
            json_path, npz_path = agg_mod.snapshot_paths(self.results_dir, day)
            if not json_path.exists() or not npz_path.exists():
                raise KeyError(day)
            snapshot = agg_mod.load_snapshot(self.results_dir, day)
            model = agg_mod.model_from_snapshot(snapshot)
            with self._cache_lock:
                self._cache[day] = (snapshot, model)
                while len(self._cache) > self.cache_size:
                    self._cache.popitem(last=False)
            return snapshot, model

    def disrupt(self, day: date, station_id: str, t: float) -> dict:
        key = (day, station_id, t)
        with self._cache_lock:
            if key in self._disrupt_cache:
                self._disrupt_cache.move_to_end(key)
                return self._disrupt_cache[key]
        snapshot, model = self.load(day)
        from .trajectory import State

        target = State.dwell(station_id)
        if station_id not in snapshot.station_ids:
            raise KeyError(station_id)
        result = perturb.disrupt_node(model, target, t=t)
        dwell_idx = model.dwell_indices
        rel = result.rel_delta[dwell_idx]
        body = {
            "target": station_id,
            "t": t,
            "stations": [
                {
                    "id": sid,
                    "pi": _r6(result.pi[i]),
                    "pi_tilde": _r6(result.pi_tilde[i]),
                    "rel_delta": _r6(result.rel_delta[i]),
                }
                for sid, i in zip(snapshot.station_ids, dwell_idx)
            ],
            "summary": {"max_gain": _r6(rel.max()), "max_loss": _r6(rel.min())},
        }
        with self._cache_lock:
            self._disrupt_cache[key] = body
            while len(self._disrupt_cache) > 64:
                self._disrupt_cache.popitem(last=False)
        return body


def create_app(
    results_dir: Path,
    stations_path=None,
    webui_dir=None,
    cache_size: int = 8,
    max_workers: int = 4,
) -> FastAPI:
    store = ResultStore(results_dir, stations_path=stations_path, cache_size=cache_size)
    workers = threading.Semaphore(max_workers)
    app = FastAPI(title="stationrank")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.store = store

    @app.get("/api/health")
    def health():
        return {"status": "ok"}

    @app.get("/api/days")
    def days():
        try:
            return store.days()
        except OSError as exc:
            raise HTTPException(status_code=500, detail=str(exc)) from exc

    @app.get("/api/day/{d}/stationary")
    def stationary(d: str):
        day = _parse_day(d)
        try:
            snapshot, _ = store.load(day)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown day {d}")
        out = []
        for sid, name, pi, cluster in zip(
            snapshot.station_ids,
            snapshot.station_names,
            snapshot.pi,
            snapshot.cluster,
        ):
            lat, lon = store.directory.coords(sid)
            out.append(
                {
                    "id": sid,
                    "name": store.directory.name(sid) or name,
                    "lat": lat,
                    "lon": lon,
                    "missing_coordinates": lat is None or lon is None,
                    "pi": _r6(pi),
                    "cluster": int(cluster),
                }
            )
        return out

    @app.post("/api/day/{d}/disrupt")
    def disrupt(d: str, req: DisruptRequest):
        day = _parse_day(d)
        t = 0.95 if req.t is None else req.t
        if not (0.0 < t <= 1.0):
            raise HTTPException(status_code=422, detail=f"t must be in (0, 1], got {t}")
        if not workers.acquire(blocking=False):
            raise HTTPException(status_code=503, detail="disruption workers busy")
        try:
            return store.disrupt(day, req.station_id, t)
        except KeyError as exc:
            raise HTTPException(
                status_code=404, detail=f"unknown day or station: {exc}"
            ) from exc
        except StationRankError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        finally:
            workers.release()

    @app.get("/api/aggregate/{measure}")
    def aggregate(measure: str):
        if measure not in MEASURES:
            raise HTTPException(status_code=404, detail=f"unknown measure {measure}")
        path = Path(results_dir) / "aggregate.json"
        if not path.exists():
            raise HTTPException(status_code=404, detail="aggregate not computed")
        monthly = agg_mod.load_aggregate(Path(results_dir))
        stats = monthly.stats.get(measure, {})
        return {
            sid: {
                "min": _r6(entry["min"]),
                "max": _r6(entry["max"]),
                "median": _r6(entry["median"]),
                "std": _r6(entry["std"]),
                "presence": int(entry["presence"]),
                "name": monthly.station_names.get(sid, sid),
            }
            for sid, entry in stats.items()
        }

    if webui_dir and Path(webui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(webui_dir), html=True), name="webui")

    return app


def _parse_day(d: str) -> date:
    try:
        return date.fromisoformat(d)
    except ValueError:
        raise HTTPException(status_code=404, detail=f"unknown day {d}")
