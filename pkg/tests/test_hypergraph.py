import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from hypersparse.certify import generate_random, generate_random_matrix
from hypersparse.errors import InvalidArgument
from hypersparse.hypergraph import (
    GraphicalHypergraph,
    MatrixHypergraph,
    clique_expand,
    drop_groups,
    energy,
    energy_batch,
    energy_graphical,
    star_expand,
    star_rows_in_clique,
    unitize,
)

from conftest import all_cuts, cut_value


def test_energy_of_zero_vector():
    G = generate_random_matrix(n=6, k=10, r=3, seed=1, weighted=True)
    prof = energy(G, np.zeros(6))
    assert prof.total == 0.0
    assert np.all(prof.per_group == 0.0)


def test_energy_clique_of_triangle():
    G = clique_expand(GraphicalHypergraph.from_edges(3, [[0, 1, 2]], [2.0]))
    prof = energy(G, np.array([0.0, 1.0, 3.0]))
    # pairwise squared differences are 1, 9, 4
    assert prof.total == 18.0
    assert prof.argmax_row[0] == 1  # pair (0, 2)


def test_energy_path_is_cut_value():
    H = GraphicalHypergraph.from_edges(3, [[0, 1], [1, 2]])
    x = np.array([0.0, 1.0, 1.0])
    assert energy(clique_expand(H), x).total == 1.0
    assert cut_value(H.edges(), H.weights, x) == 1.0


def test_energy_total_is_sum_of_groups():
    G = generate_random_matrix(n=8, k=30, r=4, seed=3, weighted=True)
    x = np.random.default_rng(0).standard_normal(8)
    prof = energy(G, x)
    assert prof.total == prof.per_group.sum()
    assert np.all(prof.per_group >= 0)


def test_energy_argmax_rows_attain_max():
    G = generate_random_matrix(n=5, k=20, r=4, seed=4)
    x = np.random.default_rng(1).standard_normal(5)
    prof = energy(G, x)
    sq = (G.rows @ x) ** 2
    for i in range(G.k):
        assert G.row_group[prof.argmax_row[i]] == i
        assert sq[prof.argmax_row[i]] == sq[G.group(i)].max()


def test_energy_dimension_mismatch():
    G = generate_random_matrix(n=5, k=4, r=2, seed=0)
    with pytest.raises(InvalidArgument):
        energy(G, np.zeros(4))
    with pytest.raises(InvalidArgument):
        energy_graphical(generate_random(n=5, k=4, r=2, seed=0), np.zeros(6))


def test_energy_graphical_examples():
    H = GraphicalHypergraph.from_edges(3, [[0, 1, 2]])
    assert energy_graphical(H, np.array([0.0, 1.0, 2.0])).total == 4.0
    assert energy_graphical(H, np.full(3, 7.5)).total == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_energy_graphical_matches_clique(seed):
    H = generate_random(n=15, k=40, r=6, weight_law="log-uniform", seed=seed)
    C = clique_expand(H)
    rs = np.random.default_rng(seed)
    for _ in range(10):
        x = rs.standard_normal(15)
        a = energy_graphical(H, x)
        b = energy(C, x)
        assert a.total == pytest.approx(b.total, rel=1e-12)
        np.testing.assert_allclose(a.per_group, b.per_group, rtol=1e-12)
        sq = (C.rows @ x) ** 2
        np.testing.assert_allclose(sq[a.argmax_row], b.per_group / H.weights, rtol=1e-12)


def test_cut_values_exhaustive():
    H = generate_random(n=8, k=15, r=4, weight_law="log-uniform", seed=9)
    for x in all_cuts(8):
        assert energy_graphical(H, x).total == pytest.approx(cut_value(H.edges(), H.weights, x), rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), c=st.floats(-1e3, 1e3, allow_nan=False))
def test_energy_homogeneous_degree_two(seed, c):
    G = generate_random_matrix(n=6, k=12, r=3, seed=seed % 1000, weighted=True)
    x = np.random.default_rng(seed).standard_normal(6)
    base = energy(G, x).total
    assert energy(G, c * x).total == pytest.approx(c * c * base, rel=1e-12, abs=1e-300)
    assert base >= 0


def test_energy_batch_matches_single():
    G = generate_random_matrix(n=7, k=15, r=4, seed=2, weighted=True)
    X = np.random.default_rng(3).standard_normal((7, 9))
    batch = energy_batch(G, X)
    for b in range(9):
        assert batch[b] == pytest.approx(energy(G, X[:, b]).total, rel=1e-14)


def test_clique_expand_counts():
    pair = clique_expand(GraphicalHypergraph.from_edges(4, [[1, 3]]))
    assert pair.m == 1
    assert pair.rows.toarray().tolist() == [[0.0, 1.0, 0.0, -1.0]]
    quad = clique_expand(GraphicalHypergraph.from_edges(5, [[0, 1, 2, 4]]))
    assert quad.m == math.comb(4, 2) and quad.k == 1
    H = generate_random(n=20, k=30, r=7, seed=5)
    C = clique_expand(H)
    assert C.m == sum(math.comb(int(s), 2) for s in H.sizes)
    assert C.rank <= H.rank * (H.rank - 1) // 2
    assert np.all(np.diff(C.rows.indptr) == 2)


def test_star_expand_counts_and_centers():
    assert star_expand(GraphicalHypergraph.from_edges(3, [[0, 2]]), [0]).m == 1
    five = star_expand(GraphicalHypergraph.from_edges(6, [[0, 1, 2, 3, 5]]), [3])
    assert five.m == 4
    assert np.all(five.rows.toarray()[:, 3] == -1.0)
    H = generate_random(n=20, k=30, r=7, seed=6)
    assert star_expand(H).m == int((H.sizes - 1).sum())
    with pytest.raises(InvalidArgument):
        star_expand(GraphicalHypergraph.from_edges(4, [[0, 1]]), [2])


def test_star_rows_map_into_clique():
    H = generate_random(n=12, k=25, r=6, seed=7)
    rs = np.random.default_rng(0)
    centers = np.array([rs.choice(e) for e in H.edges()])
    S = star_expand(H, centers).rows.toarray()
    C = clique_expand(H).rows.toarray()
    idx = star_rows_in_clique(H, centers)
    for s, c in enumerate(idx):
        assert np.array_equal(np.abs(S[s]), np.abs(C[c]))


def test_unitize_scaling():
    H = GraphicalHypergraph.from_edges(2, [[0, 1]], [4.0])
    U = unitize(clique_expand(H))
    assert U.is_unit
    assert U.rows.toarray().tolist() == [[2.0, -2.0]]
    same = unitize(clique_expand(GraphicalHypergraph.from_edges(3, [[0, 1, 2]])))
    assert np.array_equal(same.rows.toarray(), clique_expand(GraphicalHypergraph.from_edges(3, [[0, 1, 2]])).rows.toarray())


def test_unitize_preserves_energy_and_drops_zero_groups():
    G = generate_random_matrix(n=6, k=20, r=3, seed=8, weighted=True)
    gw = G.group_weights.copy()
    gw[[2, 5]] = 0.0
    G = G.with_weights(gw)
    U = unitize(G)
    assert U.k == G.k - 2
    assert U.m == G.m - len(G.group(2)) - len(G.group(5))
    rs = np.random.default_rng(0)
    for _ in range(20):
        x = rs.standard_normal(6)
        assert energy(U, x).total == pytest.approx(energy(G, x).total, rel=1e-12)


def test_expansions_have_no_zero_rows():
    H = generate_random(kind="power-law-degrees", n=30, k=60, r=8, seed=11)
    for G in (clique_expand(H), star_expand(H)):
        assert np.all(np.diff(G.rows.indptr) > 0)


def test_graphical_validation():
    with pytest.raises(InvalidArgument):
        GraphicalHypergraph.from_edges(3, [[0]])
    with pytest.raises(InvalidArgument):
        GraphicalHypergraph.from_edges(3, [[0, 3]])
    with pytest.raises(InvalidArgument):
        GraphicalHypergraph.from_edges(3, [[0, 1, 1]])
    with pytest.raises(InvalidArgument):
        GraphicalHypergraph.from_edges(3, [[0, 1]], [-1.0])


def test_matrix_validation():
    A = sp.csr_matrix(np.array([[1.0, 0.0], [0.0, 0.0]]))
    with pytest.raises(InvalidArgument, match="all zero"):
        MatrixHypergraph(A, np.array([0, 0]))
    B = sp.csr_matrix(np.eye(3))
    with pytest.raises(InvalidArgument, match="empty"):
        MatrixHypergraph(B, np.array([0, 2, 2]))
    with pytest.raises(InvalidArgument, match="overlaps"):
        MatrixHypergraph.from_groups(B, [[0, 1], [1, 2]])
    with pytest.raises(InvalidArgument, match="cover"):
        MatrixHypergraph.from_groups(B, [[0, 1]])
    G = MatrixHypergraph.from_groups(B, [[2, 0], [1]])
    assert list(G.group(0)) == [0, 2]


def test_types_are_read_only():
    G = generate_random_matrix(n=4, k=5, r=2, seed=0, weighted=True)
    with pytest.raises(ValueError):
        G.row_group[0] = 1
    with pytest.raises(ValueError):
        G.rows.data[0] = 3.0
    H = generate_random(n=4, k=3, r=2, seed=0)
    with pytest.raises(ValueError):
        H.weights[0] = 2.0


def test_drop_groups_reindexes():
    G = generate_random_matrix(n=5, k=6, r=3, seed=1, weighted=True)
    keep = np.array([True, False, True, True, False, True])
    D = drop_groups(G, keep)
    assert D.k == 4
    np.testing.assert_array_equal(D.group_weights, G.group_weights[keep])
