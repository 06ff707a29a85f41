import numpy as np
import pytest
from scipy import sparse

from stationrank.errors import IncompleteSweep
from stationrank.graph import build_transition_graph, strongly_connected_restrict
from stationrank.markov import MarkovModel, build_markov, stationary_distribution
from stationrank.perturb import PerturbedResult, perturb_all_nodes
from stationrank.risk import (
    compute_risk,
    impact_matrix,
    rankings_csv,
    remoteness,
    systemic_fragility,
    systemic_influence,
)
from stationrank.trajectory import State, discretize_day

from conftest import counts_to_P, line_hub_day, random_irreducible_counts

D = State.dwell


def model_from_P(P, labels=None):
    P = sparse.csr_matrix(np.asarray(P, dtype=float))
    labels = labels or [f"S{i:02d}" for i in range(P.shape[0])]
    return MarkovModel(
        states=[D(x) for x in labels], P=P, pi=stationary_distribution(P)
    )


def fake_result(model, target, pi_tilde):
    return PerturbedResult(
        target=target,
        t=0.95,
        row_updates={},
        pi_tilde=np.asarray(pi_tilde, dtype=float),
        pi=model.pi,
    )


def hub_model(n_leaves=5):
    seqs, _ = discretize_day(line_hub_day(n_leaves))
    scc = strongly_connected_restrict(build_transition_graph(seqs))
    return build_markov(scc.largest)


# --- impact matrix --------------------------------------------------------


def test_impact_threshold_arithmetic():
    model = model_from_P([[0.5, 0.5], [0.5, 0.5]])
    # occupancy of S01 moves 0.10 -> 0.12 in spirit: here 0.5 -> 0.6
    res = fake_result(model, D("S00"), [0.4, 0.6])
    W, targets = impact_matrix(model.pi, {D("S00"): res}, 0.1, model)
    assert targets == [D("S00")]
    assert W[0, 1] == pytest.approx(0.1)
    assert W[0, 0] == 0.0  # own column excluded

    W_high, _ = impact_matrix(model.pi, {D("S00"): res}, 0.5, model)
    assert W_high.nnz == 0  # rel change 0.2 below the higher threshold


def test_zero_perturbation_gives_zero_row():
    model = model_from_P([[0.5, 0.5], [0.5, 0.5]])
    res = fake_result(model, D("S00"), model.pi.copy())
    W, _ = impact_matrix(model.pi, {D("S00"): res}, 0.05, model)
    assert W.nnz == 0


def test_incomplete_sweep():
    model = model_from_P([[0.5, 0.5], [0.5, 0.5]])
    res = fake_result(model, D("S00"), [0.4, 0.6])
    with pytest.raises(IncompleteSweep):
        impact_matrix(
            model.pi, {D("S00"): res}, 0.05, model, targets=[D("S00"), D("S01")]
        )


def test_gamma_monotone(rng):
    model = hub_model()
    sweep, failures = perturb_all_nodes(model)
    assert not failures
    gammas = [0.0, 0.01, 0.05, 0.1, 0.5]
    prev = None
    for g in gammas:
        W, _ = impact_matrix(model.pi, sweep, g, model)
        dense = W.toarray()
        if prev is not None:
            assert (dense <= prev + 1e-15).all()
        prev = dense


# --- influence / fragility ------------------------------------------------


def test_influence_normalization():
    W = sparse.csr_matrix(np.array([[0.0, 0.04, 0.0], [0.03, 0.0, 0.05]]))
    assert systemic_influence(W) == pytest.approx([0.5, 1.0])


def test_fragility_counting():
    rowsets = np.array(
        [
            [0.0, 1.0, 1.0, 1.0],
            [1.0, 0.0, 1.0, 1.0],
            [1.0, 1.0, 0.0, 1.0],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )
    phi = systemic_fragility(sparse.csr_matrix(rowsets * 0.01))
    # column touch counts 2,2,2,4 -> normalized by 4
    assert phi == pytest.approx([0.5, 0.5, 0.5, 1.0])


def test_all_zero_impacts_warn():
    W = sparse.csr_matrix((2, 3))
    with pytest.warns(UserWarning):
        assert (systemic_influence(W) == 0).all()
    with pytest.warns(UserWarning):
        assert (systemic_fragility(W) == 0).all()


def test_max_normalization_after_real_sweep():
    model = hub_model()
    sweep, _ = perturb_all_nodes(model)
    risk = compute_risk(model, sweep, gamma=0.01)
    assert risk.influence.max() == pytest.approx(1.0)
    assert risk.fragility.max() == pytest.approx(1.0)
    assert (risk.influence >= 0).all() and (risk.influence <= 1).all()
    assert (risk.fragility >= 0).all() and (risk.fragility <= 1).all()


def test_star_network_influence_and_fragility_rank_differently():
    model = hub_model(n_leaves=6)
    sweep, _ = perturb_all_nodes(model)
    risk = compute_risk(model, sweep, gamma=0.01)
    hub_row = risk.targets.index(D("H"))
    # the hub's disruption moves the most mass...
    assert risk.influence[hub_row] == pytest.approx(1.0)
    # ...while the hub itself is touched by no more disruptions than a leaf,
    # so the two rankings cannot coincide
    hub_col = model.index_of(D("H"))
    leaf_cols = [model.index_of(s) for s in model.states if s.is_dwell and s != D("H")]
    assert risk.fragility[hub_col] <= max(risk.fragility[c] for c in leaf_cols)
    infl_order = np.argsort(-risk.influence)
    frag_order = np.argsort(-risk.fragility[[model.index_of(s) for s in risk.targets]])
    assert list(infl_order) != list(frag_order)


# --- remoteness -----------------------------------------------------------


def test_remoteness_two_state():
    model = model_from_P([[0.5, 0.5], [0.5, 0.5]])
    assert remoteness(model) == pytest.approx([1.0, 1.0], abs=1e-12)


def test_remoteness_identity_with_kemeny(rng):
    A = random_irreducible_counts(18, rng)
    model = model_from_P(counts_to_P(A))
    r = remoteness(model)
    assert float(model.pi @ r) == pytest.approx(model.kemeny, rel=1e-8)


def test_hub_less_remote_than_leaves():
    model = hub_model()
    r = remoteness(model)
    hub = r[model.index_of(D("H"))]
    leaves = [r[model.index_of(s)] for s in model.states if s.is_dwell and s != D("H")]
    assert all(hub < leaf for leaf in leaves)


# --- export ---------------------------------------------------------------


def test_rankings_csv_layout():
    rows = [
        {
            "station_id": "A",
            "name": "Alpha",
            "pi": 0.25,
            "remoteness": 12.5,
            "influence": 1.0,
            "fragility": 0.5,
        },
        {
            "station_id": "B",
            "name": "Beta",
            "pi": 0.125,
            "remoteness": 20.0,
            "influence": 0.5,
            "fragility": 1.0,
        },
    ]
    text = rankings_csv(rows, "influence")
    lines = text.strip().splitlines()
    assert lines[0] == "rank,station_id,name,pi,remoteness,influence,fragility"
    assert lines[1] == "1,A,Alpha,0.250000,12.500000,1.000000,0.500000"
    assert lines[2].startswith("2,B,Beta,")
