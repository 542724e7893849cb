import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from hypersparse.certify import brute_force_group_leverage, generate_random, generate_random_matrix
from hypersparse.errors import InternalError, InvalidArgument
from hypersparse.hypergraph import GraphicalHypergraph, MatrixHypergraph, clique_expand, unitize
from hypersparse.leverage import SolverConfig, make_overestimator
from hypersparse.overestimates import (
    GroupOverestimates,
    certify_overestimates,
    compute_overestimates,
    default_iterations,
    graphical_overestimates,
    group_leverage_overestimate,
    renormalize,
)

from conftest import dense_quadratic_forms


def naive_reweighting(A, groups, T):
    """Plain-loop reference: returns tau, wbar, per-iteration nu."""
    A = np.asarray(A)
    m = A.shape[0]
    r = max(len(g) for g in groups)
    w = np.zeros(m)
    for g in groups:
        w[g] = 1.0 / len(g)
    wsum = np.zeros(m)
    tsum = np.zeros(len(groups))
    nus = []
    for _ in range(T):
        sigma = w * dense_quadratic_forms(A, w)
        nus.append(sigma.sum())
        wsum += w
        new = np.zeros(m)
        for i, g in enumerate(groups):
            s = sigma[g].sum()
            tsum[i] += s
            new[g] = sigma[g] / s
        w = new
    blow = r ** (1.0 / T)
    return blow * tsum / T, wsum / T, nus


def unit_matrix(seed, n=8, k=20, r=4):
    return unitize(generate_random_matrix(n=n, k=k, r=r, seed=seed, weighted=True))


def test_default_iterations():
    assert default_iterations(1) == 1
    assert default_iterations(2) == 1
    assert default_iterations(100) == 5
    assert math.exp(math.log(100) / 5) <= 2.512
    with pytest.raises(InvalidArgument):
        default_iterations(0)


@pytest.mark.parametrize("n, T", [(3, 1), (5, 2), (6, 3)])
def test_identity_single_group(n, T):
    G = MatrixHypergraph(sp.identity(n, format="csr"), np.zeros(n, dtype=np.int64))
    O = group_leverage_overestimate(G, T, make_overestimator(G.rows))
    assert O.tau[0] == pytest.approx(math.exp(math.log(n) / T) * n, rel=1e-12)
    np.testing.assert_allclose(O.witness_weights, 1.0 / n, rtol=1e-12)
    assert O.nu == pytest.approx(math.exp(math.log(n) / T) * n, rel=1e-12)


def test_singleton_groups():
    rs = np.random.default_rng(0)
    A = sp.csr_matrix(rs.standard_normal((10, 4)))
    G = MatrixHypergraph(A, np.arange(10))
    O = group_leverage_overestimate(G, 3, make_overestimator(A))
    sigma = np.linalg.norm(np.linalg.qr(A.toarray())[0], axis=1) ** 2
    np.testing.assert_allclose(O.witness_weights, 1.0)
    np.testing.assert_allclose(O.tau, sigma, atol=1e-10)
    assert O.nu == pytest.approx(4.0)


@pytest.mark.parametrize("seed", range(4))
def test_matches_naive_reference(seed):
    G = unit_matrix(seed)
    T = 3
    O = group_leverage_overestimate(G, T, make_overestimator(G.rows))
    tau, wbar, nus = naive_reweighting(G.rows.toarray(), G.groups, T)
    np.testing.assert_allclose(O.tau, tau, rtol=1e-8)
    np.testing.assert_allclose(O.witness_weights, wbar, rtol=1e-8, atol=1e-12)
    np.testing.assert_allclose(O.iteration_nu, nus, rtol=1e-8)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), r=st.integers(1, 6), T=st.integers(1, 4))
def test_certified_on_random_instances(seed, r, T):
    G = unit_matrix(seed, n=6, k=12, r=r)
    O = group_leverage_overestimate(G, T, make_overestimator(G.rows))
    report = certify_overestimates(G, O)
    assert report.overall, report.to_json()
    assert np.all(O.tau > 0)
    assert O.tau.sum() <= math.exp(math.log(G.rank) / T) * max(O.iteration_nu) + 1e-9


def test_brute_force_oracle_examples():
    n = 4
    G = MatrixHypergraph(sp.identity(n, format="csr"), np.zeros(n, dtype=np.int64))
    np.testing.assert_allclose(brute_force_group_leverage(G, np.full(n, 1 / n)), [n])
    w = np.array([0.5, 2.0, 4.0, 0.25])
    S = MatrixHypergraph(sp.identity(n, format="csr"), np.arange(n))
    np.testing.assert_allclose(brute_force_group_leverage(S, w), 1 / w)


def test_fixpoint_invariance():
    # every row of an identity matrix has leverage 1 for any positive weights,
    # so uniform weights inside each group are a fixpoint
    n = 9
    G = MatrixHypergraph(sp.identity(n, format="csr"), np.array([0, 0, 1, 2, 2, 2, 3, 3, 3]))
    over = make_overestimator(G.rows)
    w = 1.0 / G.group_sizes[G.row_group]
    nxt, _ = renormalize(G, over(w).sigma)
    np.testing.assert_allclose(nxt, w, atol=1e-12)


def test_fixpoint_reached_is_stable():
    G = unit_matrix(5, n=6, k=10, r=3)
    over = make_overestimator(G.rows)
    w = 1.0 / G.group_sizes[G.row_group]
    for _ in range(50):
        w, _ = renormalize(G, over(w).sigma)
    once, _ = renormalize(G, over(w).sigma)
    twice, _ = renormalize(G, over(once).sigma)
    # contraction toward the fixpoint: the step shrinks
    assert np.abs(twice - once).max() <= np.abs(once - w).max() + 1e-12


def test_renormalize_zero_group():
    G = MatrixHypergraph(sp.identity(3, format="csr"), np.array([0, 1, 1]))
    with pytest.raises(InternalError, match="group 1"):
        renormalize(G, np.array([1.0, 0.0, 0.0]))


def test_halved_tau_fails_with_slack_two():
    G = unit_matrix(2)
    O = group_leverage_overestimate(G, 2, make_overestimator(G.rows))
    tight = brute_force_group_leverage(G, O.witness_weights)
    exact = GroupOverestimates(tight, O.witness_weights, O.nu, 2)
    assert certify_overestimates(G, exact).check("leverage_bound").worst_slack == pytest.approx(1.0, rel=1e-12)
    half = GroupOverestimates(tight / 2, O.witness_weights, O.nu, 2)
    check = certify_overestimates(G, half).check("leverage_bound")
    assert not check.passed
    assert check.worst_slack == pytest.approx(2.0, rel=1e-9)


def test_perturbed_weights_fail_normalization():
    G = unit_matrix(3)
    O = group_leverage_overestimate(G, 2, make_overestimator(G.rows))
    bad = GroupOverestimates(O.tau, O.witness_weights * 1.01, O.nu, 2)
    report = certify_overestimates(G, bad)
    assert not report.check("weight_sums").passed
    assert not report.overall


def test_norm_bound_and_shape_checks():
    G = unit_matrix(4)
    O = group_leverage_overestimate(G, 2, make_overestimator(G.rows))
    low_nu = GroupOverestimates(O.tau, O.witness_weights, O.tau.sum() * 0.9, 2)
    assert not certify_overestimates(G, low_nu).check("norm_bound").passed
    wrong = GroupOverestimates(O.tau[:-1], O.witness_weights, O.nu, 2)
    assert certify_overestimates(G, wrong).failed() == ["shapes"]


def test_star_lift_graph_equals_doubled_direct():
    H = generate_random(kind="graph", n=10, k=25, seed=1)
    O = graphical_overestimates(H, make_overestimator, T=1)
    C = unitize(clique_expand(H))
    direct = group_leverage_overestimate(C, 1, make_overestimator(C.rows))
    np.testing.assert_allclose(O.tau, 2 * direct.tau, rtol=1e-10)
    assert O.tau.sum() == pytest.approx(2 * direct.tau.sum(), rel=1e-12)
    assert O.source_mode == "star-lifted"


def test_star_lift_single_triangle():
    H = GraphicalHypergraph.from_edges(3, [[0, 1, 2]])
    O = graphical_overestimates(H, make_overestimator, T=1, centers=[0])
    C = clique_expand(H)
    # the pair (1, 2) is the clique row absent from the star
    q = dense_quadratic_forms(C.rows, O.witness_weights)
    assert O.witness_weights[2] == 0.0
    assert q[2] <= O.tau[0] * (1 + 1e-12)
    assert certify_overestimates(C, O).overall


@pytest.mark.parametrize("seed", range(5))
def test_star_lift_certifies_against_clique(seed):
    H = generate_random(n=15, k=25, r=6, weight_law="log-uniform", seed=seed)
    rs = np.random.default_rng(seed)
    centers = [int(rs.choice(e)) for e in H.edges()]
    O = graphical_overestimates(H, make_overestimator, centers=centers)
    C = unitize(clique_expand(H))
    assert certify_overestimates(C, O).overall
    assert np.all(brute_force_group_leverage(C, O.witness_weights) <= O.tau * (1 + 1e-8))


def test_zero_weight_hyperedges_are_dropped():
    H = GraphicalHypergraph.from_edges(4, [[0, 1, 2], [1, 3], [2, 3]], [1.0, 0.0, 2.0])
    unit, O, report = compute_overestimates(H, centers=[2, 3, 3])
    assert unit.k == 2 and len(O.tau) == 2
    assert report.overall


def test_compute_overestimates_sketched_certifies():
    H = generate_random(n=20, k=40, r=5, seed=3)
    unit, O, report = compute_overestimates(H, SolverConfig(mode="sketched"), seed=8)
    assert report.overall, report.to_json()
    assert report.check("certification_attempts").worst_slack >= 1
    assert O.nu == pytest.approx(2 * math.exp(math.log(4) / 2) * 5 / 3 * 20)


def test_compute_overestimates_cap_skips():
    G = generate_random_matrix(n=5, k=30, r=3, seed=0)
    _, _, report = compute_overestimates(G, cert_cap=10)
    assert report.checks[0].name == "certify_overestimates"
    assert "skipped" in report.checks[0].detail


def test_determinism_bitwise():
    H = generate_random(n=20, k=40, r=5, seed=3)
    cfg = SolverConfig(mode="sketched")
    a = compute_overestimates(H, cfg, seed=4, certify=False)[1]
    b = compute_overestimates(H, cfg, seed=4, certify=False)[1]
    assert a.tau.tobytes() == b.tau.tobytes()
    assert a.witness_weights.tobytes() == b.witness_weights.tobytes()


def test_rejects_non_unit():
    G = generate_random_matrix(n=4, k=5, r=2, seed=0, weighted=True)
    with pytest.raises(InvalidArgument):
        group_leverage_overestimate(G, 1, make_overestimator(G.rows))
