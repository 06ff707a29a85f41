"""Systemic risk measures derived from the perturbation sweep.

Influence of a station is the (max-normalized) total absolute shift in
stationary occupancy its disruption causes elsewhere, counting only
shifts whose relative size exceeds a threshold. Fragility of a station
counts how many disruptions elsewhere touch it, again max-normalized.
Remoteness is the stationary-weighted average first passage time into a
station.
"""

from __future__ import annotations

import csv
import io
import warnings as _warnings
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import IncompleteSweep
from .markov import MarkovModel
from .perturb import PerturbedResult
from .trajectory import State

DEFAULT_GAMMA = 0.05


@dataclass
class RiskMeasures:
    model: MarkovModel
    gamma: float
    targets: list[State]  # disrupted states, order = rows of W
    W: sparse.csr_matrix  # absolute impacts, rows = targets, cols = all states
    influence: np.ndarray  # per target
    fragility: np.ndarray  # per chain state
    remoteness: np.ndarray  # per chain state


def impact_matrix(
    pi: np.ndarray,
    sweep: dict[State, PerturbedResult],
    gamma: float,
    model: MarkovModel,
    targets: list[State] | None = None,
) -> tuple[sparse.csr_matrix, list[State]]:
    """Absolute impact ``W_ij = |pi~_j - pi_j|`` where the relative change
    exceeds ``gamma``; the disrupted state's own column is excluded."""
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    if targets is None:
        targets = sorted(sweep, key=model.index_of)
    missing = [s for s in targets if s not in sweep]
    if missing:
        raise IncompleteSweep(f"sweep lacks {len(missing)} targets, e.g. {missing[0].label}")

    rows, cols, vals = [], [], []
    for r, state in enumerate(targets):
        res = sweep[state]
        delta = np.abs(res.pi_tilde - pi)
        mask = (delta / pi) > gamma
        mask[model.index_of(state)] = False
        js = np.flatnonzero(mask)
        rows.extend([r] * len(js))
        cols.extend(js.tolist())
        vals.extend(delta[js].tolist())
    W = sparse.coo_matrix(
        (vals, (rows, cols)), shape=(len(targets), model.n)
    ).tocsr()
    return W, targets


def systemic_influence(W: sparse.csr_matrix) -> np.ndarray:
    """Row sums of the impact matrix, normalized by the maximal row sum."""
    sums = np.asarray(W.sum(axis=1)).ravel()
    top = sums.max() if sums.size else 0.0
    if top <= 0:
        _warnings.warn("all impacts are zero (gamma too high?)", stacklevel=2)
        return np.zeros_like(sums)
    return sums / top


def systemic_fragility(W: sparse.csr_matrix) -> np.ndarray:
    """Per affected state: how many disruptions touch it, max-normalized."""
    touched = np.asarray((W > 0).sum(axis=0)).ravel().astype(float)
    top = touched.max() if touched.size else 0.0
    if top <= 0:
        _warnings.warn("all impacts are zero (gamma too high?)", stacklevel=2)
        return np.zeros_like(touched)
    return touched / top


def remoteness(model: MarkovModel) -> np.ndarray:
    """Stationary-weighted average first passage time into each state:
    ``r_i = sum_j pi_j m_ji``."""
    return model.pi @ model.mfpt


def compute_risk(
    model: MarkovModel,
    sweep: dict[State, PerturbedResult],
    gamma: float = DEFAULT_GAMMA,
) -> RiskMeasures:
    W, targets = impact_matrix(model.pi, sweep, gamma, model)
    return RiskMeasures(
        model=model,
        gamma=gamma,
        targets=targets,
        W=W,
        influence=systemic_influence(W),
        fragility=systemic_fragility(W),
        remoteness=remoteness(model),
    )


def rankings_csv(
    rows: list[dict],
    measure: str,
) -> str:
    """Render ranking rows (already sorted) in the standard column layout."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(
        ["rank", "station_id", "name", "pi", "remoteness", "influence", "fragility"]
    )
    for rank, row in enumerate(rows, start=1):
        writer.writerow(
            [
                rank,
                row["station_id"],
                row.get("name", ""),
                f"{row['pi']:.6f}",
                f"{row['remoteness']:.6f}",
                f"{row['influence']:.6f}",
                f"{row['fragility']:.6f}",
            ]
        )
    return buf.getvalue()
