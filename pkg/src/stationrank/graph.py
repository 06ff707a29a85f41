"""Transition counting into the weight matrix and extraction of the
strongly connected core.

The weight matrix counts observed state-to-state transitions (diagonal
entries count staying put). Parallel observations collapse into integer
edge weights, so the matrix doubles as the adjacency of a weighted
directed multigraph. The analysis chain keeps only the largest strongly
connected component; removed states are classified for reporting.
"""

from __future__ import annotations

import csv
import io
from collections import Counter, deque
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy import sparse

from .errors import EmptyDay, NoEdges
from .trajectory import State, StateSequence


@dataclass
class TransitionGraph:
    states: list[State]  # lexicographically sorted; index <-> state bijection
    counts: sparse.csr_matrix  # integer transition counts

    @property
    def n(self) -> int:
        return len(self.states)

    def index_of(self, state: State) -> int:
        # states list is sorted, but a dict lookup is simpler and O(1)
        return self._index[state]

    def __post_init__(self):
        self._index = {s: i for i, s in enumerate(self.states)}


@dataclass
class SccResult:
    component_assignment: dict[State, int]
    largest: TransitionGraph
    dropped_fraction: float
    largest_component_id: int


def build_transition_graph(sequences: Iterable[StateSequence]) -> TransitionGraph:
    """Count adjacent state pairs over all sequences into the weight matrix."""
    pair_counts: Counter[tuple[State, State]] = Counter()
    seen = False
    for seq in sequences:
        seen = True
        for a, b in zip(seq.states, seq.states[1:]):
            pair_counts[(a, b)] += 1
    if not seen:
        raise EmptyDay("no state sequences")
    if not pair_counts:
        raise EmptyDay("sequences contain no transitions")

    states = sorted({s for pair in pair_counts for s in pair})
    index = {s: i for i, s in enumerate(states)}
    n = len(states)
    rows = np.fromiter((index[a] for a, _ in pair_counts), dtype=np.int64)
    cols = np.fromiter((index[b] for _, b in pair_counts), dtype=np.int64)
    vals = np.fromiter(pair_counts.values(), dtype=np.int64)
    counts = sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    return TransitionGraph(states=states, counts=counts)


def _tarjan_components(indptr: np.ndarray, indices: np.ndarray, n: int) -> np.ndarray:
    """Iterative single-pass DFS strongly connected components.

    Returns an array mapping node -> component id (ids are arbitrary but
    consistent; members of one SCC share an id).
    """
    UNVISITED = -1
    index = np.full(n, UNVISITED, dtype=np.int64)
    lowlink = np.zeros(n, dtype=np.int64)
    on_stack = np.zeros(n, dtype=bool)
    comp = np.full(n, UNVISITED, dtype=np.int64)
    stack: list[int] = []
    next_index = 0
    next_comp = 0

    for root in range(n):
        if index[root] != UNVISITED:
            continue
        # work stack entries: (node, position in its adjacency slice)
        work = [(root, indptr[root])]
        while work:
            v, ptr = work[-1]
            if index[v] == UNVISITED:
                index[v] = lowlink[v] = next_index
                next_index += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            while ptr < indptr[v + 1]:
                w = indices[ptr]
                ptr += 1
                if index[w] == UNVISITED:
                    work[-1] = (v, ptr)
                    work.append((w, indptr[w]))
                    advanced = True
                    break
                if on_stack[w]:
                    lowlink[v] = min(lowlink[v], index[w])
            if advanced:
                continue
            work.pop()
            if lowlink[v] == index[v]:
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp[w] = next_comp
                    if w == v:
                        break
                next_comp += 1
            if work:
                u, _ = work[-1]
                lowlink[u] = min(lowlink[u], lowlink[v])
    return comp


def strongly_connected_restrict(graph: TransitionGraph) -> SccResult:
    """Restrict the graph to its largest strongly connected component.

    Size ties break by total internal transition weight, then by lowest
    member state index.
    """
    if graph.n == 0:
        raise EmptyDay("empty graph")
    if graph.counts.nnz == 0:
        raise NoEdges("graph has states but no transitions")

    csr = graph.counts
    comp = _tarjan_components(csr.indptr, csr.indices, graph.n)
    n_comps = int(comp.max()) + 1

    sizes = np.bincount(comp, minlength=n_comps)
    coo = csr.tocoo()
    internal = coo.row[comp[coo.row] == comp[coo.col]]
    weights = np.bincount(
        comp[internal],
        weights=coo.data[comp[coo.row] == comp[coo.col]],
        minlength=n_comps,
    )
    # lowest member index per component, for the final tie-break
    first_member = np.full(n_comps, graph.n, dtype=np.int64)
    for i in range(graph.n - 1, -1, -1):
        first_member[comp[i]] = i
    order = sorted(
        range(n_comps), key=lambda c: (-sizes[c], -weights[c], first_member[c])
    )
    best = order[0]

    keep = np.flatnonzero(comp == best)
    sub_counts = csr[keep][:, keep].tocsr()
    sub_states = [graph.states[i] for i in keep]
    largest = TransitionGraph(states=sub_states, counts=sub_counts)
    assignment = {graph.states[i]: int(comp[i]) for i in range(graph.n)}
    dropped = 1.0 - len(keep) / graph.n
    return SccResult(
        component_assignment=assignment,
        largest=largest,
        dropped_fraction=dropped,
        largest_component_id=int(best),
    )


def classify_removed_states(
    graph: TransitionGraph, scc: SccResult
) -> dict[State, str]:
    """Classify states dropped by the SCC restriction.

    ``absorbing``: only self-loop out-edges. ``null_recurrent_like``:
    reachable from the retained core but with no way back. ``other_component``
    otherwise.
    """
    csr = graph.counts
    core = {s for s in scc.largest.states}
    core_idx = [graph.index_of(s) for s in scc.largest.states]

    # forward reachability from the core
    reachable = np.zeros(graph.n, dtype=bool)
    queue = deque(core_idx)
    reachable[core_idx] = True
    while queue:
        v = queue.popleft()
        for w in csr.indices[csr.indptr[v] : csr.indptr[v + 1]]:
            if not reachable[w]:
                reachable[w] = True
                queue.append(w)

    out: dict[State, str] = {}
    for i, state in enumerate(graph.states):
        if state in core:
            continue
        row = csr.indices[csr.indptr[i] : csr.indptr[i + 1]]
        if len(row) > 0 and np.all(row == i):
            out[state] = "absorbing"
        elif reachable[i]:
            out[state] = "null_recurrent_like"
        else:
            out[state] = "other_component"
    return out


def edge_list_csv(graph: TransitionGraph) -> str:
    """Export the weighted edge list as CSV."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["from_state", "to_state", "count"])
    coo = graph.counts.tocoo()
    for r, c, v in zip(coo.row, coo.col, coo.data):
        writer.writerow([graph.states[r].label, graph.states[c].label, int(v)])
    return buf.getvalue()
