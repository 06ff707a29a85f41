"""Node-disruption sensitivity analysis.

A disruption at a station is modelled as a homogeneous fractional
reduction (default 95%) of all its inflows: edges into the station itself
and into the running states that lead into it. Each affected source row is
rewritten so that targeted entries shrink by the factor ``(1 - t)`` while
the remaining entries of the row rescale to keep it stochastic. The
perturbed matrix is kept as the base matrix plus sparse row overlays and
its stationary vector is re-solved warm-started from the base one.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .errors import IsolatedTarget, NoSuchEdge, NoSuchEdges
from .markov import MarkovModel, stationary_distribution
from .trajectory import State

_SATURATION_EPS = 1e-12


@dataclass
class PerturbationSpec:
    target: State
    intensity: float = 0.95
    affected_rows: list[int] = field(default_factory=list)

    def __post_init__(self):
        if not (0.0 < self.intensity <= 1.0):
            raise ValueError(f"intensity must be in (0, 1], got {self.intensity}")


@dataclass
class PerturbedResult:
    target: State
    t: float
    row_updates: dict[int, tuple[np.ndarray, np.ndarray]]  # row -> (indices, values)
    pi_tilde: np.ndarray
    pi: np.ndarray

    @property
    def delta(self) -> np.ndarray:
        return self.pi_tilde - self.pi

    @property
    def rel_delta(self) -> np.ndarray:
        return (self.pi_tilde - self.pi) / self.pi


def _row_of(P: sparse.csr_matrix, i: int) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = P.indptr[i], P.indptr[i + 1]
    return P.indices[lo:hi].copy(), P.data[lo:hi].copy()


def edge_perturbation(
    P: sparse.csr_matrix, i: int, p: int, t: float
) -> tuple[np.ndarray, np.ndarray]:
    """Reduce the single entry (i, p) by the fraction ``t``.

    Returns the rewritten sparse row i as ``(indices, values)``: the target
    entry becomes ``(1-t) * P_ip`` and the rest of the row rescales by
    ``1 + t * P_ip / (1 - P_ip)`` so the row still sums to one. When
    ``P_ip = 1`` the removed mass goes onto the diagonal instead.
    """
    if not (0.0 < t <= 1.0):
        raise ValueError(f"t must be in (0, 1], got {t}")
    idx, vals = _row_of(P, i)
    where = np.flatnonzero(idx == p)
    if len(where) == 0 or vals[where[0]] == 0.0:
        raise NoSuchEdge(f"P[{i},{p}] = 0")
    pos = where[0]
    pip = vals[pos]
    if pip >= 1.0 - _SATURATION_EPS:
        # saturated row: mass t moves to the diagonal
        return _saturated_row(idx, vals, np.array([pos]), i, t)
    scale = 1.0 + t * pip / (1.0 - pip)
    vals = vals * scale
    vals[pos] = (1.0 - t) * pip
    return idx, vals


def multi_edge_perturbation(
    P: sparse.csr_matrix, i: int, targets: np.ndarray, t: float
) -> tuple[np.ndarray, np.ndarray]:
    """Reduce all entries (i, j) for j in ``targets`` by the fraction ``t``;
    remaining entries of row i rescale to keep the row stochastic. A
    saturated row (all mass inside the target set) moves the removed mass
    onto the diagonal, mirroring the single-edge special case."""
    if not (0.0 < t <= 1.0):
        raise ValueError(f"t must be in (0, 1], got {t}")
    idx, vals = _row_of(P, i)
    mask = np.isin(idx, targets)
    sigma = float(vals[mask].sum())
    if sigma == 0.0:
        raise NoSuchEdges(f"row {i} has no edges into the target set")
    if sigma >= 1.0 - _SATURATION_EPS:
        return _saturated_row(idx, vals, np.flatnonzero(mask), i, t)
    scale = 1.0 + t * sigma / (1.0 - sigma)
    out = vals * scale
    out[mask] = (1.0 - t) * vals[mask]
    return idx, out


def _saturated_row(idx, vals, positions, i, t):
    removed = t * float(vals[positions].sum())
    out = vals.copy()
    out[positions] = (1.0 - t) * vals[positions]
    diag = np.flatnonzero(idx == i)
    if len(diag):
        out[diag[0]] += removed
        return idx, out
    idx = np.append(idx, i)
    out = np.append(out, removed)
    order = np.argsort(idx)
    return idx[order], out[order]


class OverlayMatrix:
    """Base row-stochastic matrix plus sparse row replacements; supports the
    left vector product needed by the stationary solve without densifying."""

    __array_ufunc__ = None  # make ndarray @ overlay dispatch to __rmatmul__

    def __init__(self, P: sparse.csr_matrix, row_updates: dict[int, tuple[np.ndarray, np.ndarray]]):
        self.P = P
        self.rows = np.array(sorted(row_updates), dtype=np.int64)
        n = P.shape[0]
        self.old = P[self.rows, :].tocsr()
        data, indices, indptr = [], [], [0]
        for r in self.rows:
            idx, vals = row_updates[int(r)]
            indices.extend(idx.tolist())
            data.extend(vals.tolist())
            indptr.append(len(indices))
        self.new = sparse.csr_matrix(
            (np.array(data), np.array(indices), np.array(indptr)),
            shape=(len(self.rows), n),
        )
        self.shape = P.shape
        # pre-transposed copies make the left product a plain csr matvec
        self._PT = P.T.tocsr()
        self._oldT = self.old.T.tocsr()
        self._newT = self.new.T.tocsr()

    def __rmatmul__(self, x: np.ndarray) -> np.ndarray:
        y = self._PT.dot(x)
        xr = x[self.rows]
        return y - self._oldT.dot(xr) + self._newT.dot(xr)

    def diagonal(self) -> np.ndarray:
        d = self.P.diagonal().copy()
        d[self.rows] = np.asarray(
            self.new[np.arange(len(self.rows)), self.rows]
        ).ravel()
        return d

    def toarray(self) -> np.ndarray:
        dense = self.P.toarray()
        dense[self.rows] = self.new.toarray()
        return dense


def inflow_targets(model: MarkovModel, target: State) -> np.ndarray:
    """Indices of the disrupted station's dwell state and of every running
    state leading into it."""
    out = []
    for i, s in enumerate(model.states):
        if s == target or (not s.is_dwell and s.dest == target.origin):
            out.append(i)
    return np.array(out, dtype=np.int64)


def disrupt_node(
    model: MarkovModel,
    target: State,
    t: float = 0.95,
    pi_tol: float = 1e-12,
) -> PerturbedResult:
    """Perturb all inflows of ``target`` by the fraction ``t`` and re-solve
    the stationary vector (warm-started from the base one).

    Sources feeding a single member of the inflow set get the single-edge
    update; sources feeding several members in parallel get the multi-edge
    generalization. Self-loops are preservation of state, not inflow, and
    are left untouched.
    """
    if target not in model._index:
        raise IsolatedTarget(f"{target.label} not in the chain")
    targets = inflow_targets(model, target)
    csc = model.__dict__.get("_P_csc")
    if csc is None:
        csc = model.__dict__["_P_csc"] = model.P.tocsc()
    sources: dict[int, list[int]] = {}
    for col in targets:
        lo, hi = csc.indptr[col], csc.indptr[col + 1]
        for row in csc.indices[lo:hi]:
            if row == col:
                continue  # self-loop is not an inflow
            sources.setdefault(int(row), []).append(int(col))
    if not sources:
        raise IsolatedTarget(f"{target.label} has no inflows")

    row_updates: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for i, cols in sources.items():
        if len(cols) == 1:
            row_updates[i] = edge_perturbation(model.P, i, cols[0], t)
        else:
            row_updates[i] = multi_edge_perturbation(
                model.P, i, np.array(cols, dtype=np.int64), t
            )

    overlay = OverlayMatrix(model.P, row_updates)
    pi_tilde = stationary_distribution(overlay, warm_start=model.pi, tol=pi_tol)
    return PerturbedResult(
        target=target, t=t, row_updates=row_updates, pi_tilde=pi_tilde, pi=model.pi
    )


def perturb_all_nodes(
    model: MarkovModel,
    t: float = 0.95,
    dwell_only: bool = True,
    jobs: int = 1,
) -> tuple[dict[State, PerturbedResult], dict[State, str]]:
    """Disrupt every (dwell) state in turn against the immutable base model.

    Per-node failures are recorded, not fatal. Returns (results, failures).
    """
    targets = [
        s for s in model.states if (s.is_dwell or not dwell_only)
    ]
    results: dict[State, PerturbedResult] = {}
    failures: dict[State, str] = {}

    def run(state):
        try:
            return state, disrupt_node(model, state, t=t), None
        except IsolatedTarget as exc:
            return state, None, str(exc)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(run, targets))
    else:
        outcomes = [run(s) for s in targets]
    for state, res, err in outcomes:
        if res is not None:
            results[state] = res
        else:
            failures[state] = err
    return results, failures


def export_disruption_json(result: PerturbedResult, model: MarkovModel) -> str:
    """Per-disruption export: base and perturbed occupancy per state."""
    payload = {
        "target": result.target.label,
        "t": result.t,
        "states": [
            {
                "label": s.label,
                "kind": s.kind,
                "pi": float(result.pi[i]),
                "pi_tilde": float(result.pi_tilde[i]),
                "delta": float(result.delta[i]),
                "rel_delta": float(result.rel_delta[i]),
            }
            for i, s in enumerate(model.states)
        ],
    }
    return json.dumps(payload, indent=2)
