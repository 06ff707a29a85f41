"""Row-stochastic chain construction and its spectral / passage-time
quantities: stationary vector, eigenvalue spectrum, second-eigenvector
clustering, group inverse, mean first passage times and the Kemeny
constant.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg
import scipy.sparse.linalg
from scipy import sparse

from .errors import (
    NoConvergence,
    NotIrreducible,
    SingularSystem,
    SolverFailure,
    ZeroRow,
)
from .graph import TransitionGraph
from .trajectory import State

_DENSE_EIG_CUTOFF = 600  # below this, a full dense eigensolve is cheapest


def stationary_distribution(
    P: sparse.csr_matrix | np.ndarray,
    warm_start: np.ndarray | None = None,
    tol: float = 1e-12,
    max_iter: int = 1_000_000,
) -> np.ndarray:
    """Left fixed point of the row-stochastic matrix ``P``.

    Power iteration with an optional warm start; falls back to a direct
    linear solve when iteration stalls but the chain shows self-loop
    evidence of aperiodicity. Raises ``NoConvergence`` otherwise (e.g. for
    periodic chains, which have no limiting distribution to iterate to).
    """
    n = P.shape[0]
    diag = np.asarray(P.diagonal()).ravel()
    aperiodic = bool(np.any(diag > 0))
    if not aperiodic and (sparse.issparse(P) or isinstance(P, np.ndarray)):
        if not _aperiodic(P):
            raise NoConvergence(float("inf"), 0)
        aperiodic = True
    if warm_start is not None and warm_start.shape == (n,) and warm_start.min() >= 0:
        x = np.asarray(warm_start, dtype=float).copy()
        x /= x.sum()
    else:
        x = np.full(n, 1.0 / n)

    # practical cap before trying the direct solve; the hard cap only
    # matters for the pathological fall-through path
    iter_cap = min(max_iter, 100_000)
    check_every = 10
    residual = np.inf
    for it in range(1, iter_cap + 1):
        x_new = x @ P
        s = x_new.sum()
        if s <= 0:
            raise NotIrreducible("probability mass vanished during iteration")
        x_new /= s
        if it % check_every == 0 or it == iter_cap:
            residual = float(np.max(np.abs(x_new - x)))
            if residual < tol:
                x = x_new
                break
        x = x_new
    else:
        # stalled: a direct solve is legitimate only for aperiodic chains
        if not aperiodic:
            raise NoConvergence(residual, iter_cap)
        x = _stationary_direct(P)

    if n <= _DENSE_EIG_CUTOFF and (sparse.issparse(P) or isinstance(P, np.ndarray)):
        # polish to near machine precision; passage-time formulas divide by
        # pi and inherit its error amplified by the chain's scale
        x = _stationary_direct(P)

    resid = float(np.max(np.abs(x @ P - x)))
    if resid > 1e-10:
        raise NoConvergence(resid, iter_cap)
    if np.any(x <= 0):
        raise NotIrreducible("stationary vector has non-positive entries")
    return x / x.sum()


def _aperiodic(P) -> bool:
    """Period-1 test: gcd over non-tree edges of the BFS level mismatch.

    For an irreducible chain the period equals gcd(level[u] + 1 - level[v])
    over all edges u->v, taken against a breadth-first leveling.
    """
    csr = sparse.csr_matrix(P)
    n = csr.shape[0]
    indptr, indices = csr.indptr, csr.indices
    level = np.full(n, -1, dtype=np.int64)
    level[0] = 0
    queue = [0]
    g = 0
    while queue:
        u = queue.pop()
        base = level[u] + 1
        for v in indices[indptr[u] : indptr[u + 1]]:
            if level[v] < 0:
                level[v] = base
                queue.append(v)
            else:
                g = math.gcd(g, abs(base - level[v]))
                if g == 1:
                    return True
    return g == 1


def _stationary_direct(P) -> np.ndarray:
    dense = P.toarray() if hasattr(P, "toarray") else np.asarray(P, dtype=float)
    n = dense.shape[0]
    A = dense.T - np.eye(n)
    A[-1, :] = 1.0  # replace one redundant equation with the normalization
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        x = np.linalg.solve(A, b)
        x += np.linalg.solve(A, b - A @ x)  # refinement step
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    return x


def eigen_spectrum(
    P: sparse.csr_matrix | np.ndarray, k: int | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Leading eigenvalues and left eigenvectors, sorted by descending
    modulus. Returns ``(eigenvalues, vectors)`` with vectors in columns."""
    n = P.shape[0]
    if k is None:
        k = n
    if k > n:
        raise ValueError(f"k={k} exceeds matrix order {n}")

    try:
        if k >= n - 2 or n <= _DENSE_EIG_CUTOFF:
            dense = P.toarray() if sparse.issparse(P) else np.asarray(P, dtype=float)
            vals, vecs = scipy.linalg.eig(dense.T)
        else:
            # left eigenvectors of P are right eigenvectors of P^T
            vals, vecs = scipy.sparse.linalg.eigs(
                sparse.csr_matrix(P).T.tocsr().astype(float), k=k, which="LM"
            )
    except (np.linalg.LinAlgError, scipy.sparse.linalg.ArpackError) as exc:
        raise SolverFailure(str(exc)) from exc

    order = np.lexsort((-vals.real, -np.abs(vals)))
    vals = vals[order][:k]
    vecs = vecs[:, order][:, :k]
    return vals, vecs


def group_inverse(P, pi: np.ndarray) -> np.ndarray:
    """Group inverse of ``I - P`` via the fundamental-matrix identity
    ``(I - P + 1 pi^T)^{-1} - 1 pi^T``."""
    dense = P.toarray() if sparse.issparse(P) else np.asarray(P, dtype=float)
    n = dense.shape[0]
    ones_pi = np.outer(np.ones(n), pi)
    A = np.eye(n) - dense + ones_pi
    I = np.eye(n)
    try:
        inv = np.linalg.solve(A, I)
        # one step of iterative refinement tightens the residual to near
        # machine precision, which downstream passage-time ratios need
        inv += np.linalg.solve(A, I - A @ inv)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    return inv - ones_pi


def mean_first_passage(qsharp: np.ndarray, pi: np.ndarray) -> np.ndarray:
    """Mean first passage matrix from the group inverse:
    ``m_ij = (q#_jj - q#_ij) / pi_j`` with the ``m_ii = 0`` convention."""
    M = (np.diag(qsharp)[None, :] - qsharp) / pi[None, :]
    np.fill_diagonal(M, 0.0)
    return M


@dataclass
class MarkovModel:
    """Immutable daily chain with lazily computed heavy fields."""

    states: list[State]
    P: sparse.csr_matrix
    pi: np.ndarray
    _index: dict[State, int] = field(init=False, repr=False)

    def __post_init__(self):
        self._index = {s: i for i, s in enumerate(self.states)}

    @property
    def n(self) -> int:
        return len(self.states)

    def index_of(self, state: State) -> int:
        return self._index[state]

    @property
    def dwell_indices(self) -> np.ndarray:
        return np.fromiter(
            (i for i, s in enumerate(self.states) if s.is_dwell), dtype=np.int64
        )

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        k = self.n if self.n <= _DENSE_EIG_CUTOFF else 2
        vals, vecs = eigen_spectrum(self.P, k=k)
        self.__dict__["_left_vectors"] = vecs
        return vals

    @cached_property
    def second_vector(self) -> np.ndarray:
        vals = self.eigenvalues
        vecs = self.__dict__["_left_vectors"]
        if len(vals) < 2:
            return np.zeros(self.n)
        return vecs[:, 1]

    @property
    def second_eigenvalue(self) -> complex:
        vals = self.eigenvalues
        return complex(vals[1]) if len(vals) > 1 else 0j

    @cached_property
    def group_inverse(self) -> np.ndarray:
        return group_inverse(self.P, self.pi)

    @cached_property
    def mfpt(self) -> np.ndarray:
        return mean_first_passage(self.group_inverse, self.pi)

    @cached_property
    def kemeny(self) -> float:
        return kemeny_constant(self, method="mfpt")


def build_markov(scc_graph: TransitionGraph, warm_start: np.ndarray | None = None) -> MarkovModel:
    """Row-normalize the strongly connected counts into ``P`` and solve the
    stationary vector."""
    counts = scc_graph.counts.astype(float)
    row_sums = np.asarray(counts.sum(axis=1)).ravel()
    zero = np.flatnonzero(row_sums == 0)
    if len(zero):
        raise ZeroRow(zero)
    inv = sparse.diags(1.0 / row_sums)
    P = (inv @ counts).tocsr()
    pi = stationary_distribution(P, warm_start=warm_start)
    return MarkovModel(states=list(scc_graph.states), P=P, pi=pi)


def spectral_clusters(model: MarkovModel) -> tuple[np.ndarray, bool, bool]:
    """Sign clustering on the second left eigenvector.

    Returns ``(clusters, is_real, degenerate)`` where clusters holds
    +1/-1 per state (all 0 when degenerate). For a complex second
    eigenvalue the real part is used and ``is_real`` is False, marking the
    clustering as indicative only.
    """
    lam2 = model.second_eigenvalue
    if abs(lam2) < 1e-10:
        return np.zeros(model.n, dtype=np.int8), True, True
    is_real = abs(lam2.imag) < 1e-9
    v = model.second_vector.real.copy()
    if np.max(np.abs(v)) < 1e-14:
        return np.zeros(model.n, dtype=np.int8), is_real, True
    # canonical orientation: the largest-magnitude entry is positive
    if v[int(np.argmax(np.abs(v)))] < 0:
        v = -v
    clusters = np.where(v >= 0, 1, -1).astype(np.int8)
    return clusters, is_real, False


def kemeny_constant(model: MarkovModel, method: str = "mfpt") -> float:
    """Kemeny constant, either from the eigenvalue sum over the non-unit
    spectrum or as the pi-weighted mean first passage time from any fixed
    start (verified start-independent)."""
    if method == "spectral":
        vals, _ = eigen_spectrum(model.P, k=model.n)
        # drop the Perron root (closest to 1 after sorting by modulus)
        rest = vals[1:]
        return float(np.sum(1.0 / (1.0 - rest)).real)
    if method == "mfpt":
        K_per_start = model.mfpt @ model.pi
        K = float(K_per_start[0])
        spread = float(np.max(np.abs(K_per_start - K)))
        if spread > 1e-8 * max(K, 1.0):
            raise SolverFailure(
                f"Kemeny constant varies with start state (spread {spread:.3e})"
            )
        return K
    raise ValueError(f"unknown method: {method}")


def export_summary_json(model: MarkovModel) -> str:
    """Stationary vector and eigen summary as JSON."""
    clusters, is_real, degenerate = spectral_clusters(model)
    lam2 = model.second_eigenvalue
    payload = {
        "n": model.n,
        "kemeny": model.kemeny,
        "lambda2": {"re": lam2.real, "im": lam2.imag},
        "lambda2_is_real": is_real,
        "cluster_degenerate": degenerate,
        "states": [
            {
                "label": s.label,
                "kind": s.kind,
                "pi": float(model.pi[i]),
                "cluster": int(clusters[i]),
            }
            for i, s in enumerate(model.states)
        ],
    }
    return json.dumps(payload, indent=2)


def export_mfpt_binary(model: MarkovModel, path) -> None:
    """MFPT matrix as row-major float64 file next to a small JSON header."""
    import pathlib

    path = pathlib.Path(path)
    model.mfpt.astype("<f8").tofile(path)
    header = {
        "n": model.n,
        "state_labels": [s.label for s in model.states],
        "dtype": "float64",
        "byte_order": "little-endian",
        "layout": "row-major",
    }
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(header))
