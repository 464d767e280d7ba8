import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from randcent import spectral
from randcent.netmodel import (
    BlockModel,
    ExpectedMatrix,
    MulticharacteristicModel,
    RealizedNetwork,
    build_counterexample_split,
    build_counterexample_star,
    build_expected_sbm,
    build_kronecker,
    build_spatial_grid,
    SpatialGridModel,
    sample_bernoulli,
)
from randcent.spectral import InfeasiblePhi, NonConvergence


def dense_top(mat):
    vals, vecs = np.linalg.eigh(mat)
    v = vecs[:, -1]
    return vals[-1], v if v.sum() >= 0 else -v


def cycle(n):
    rows = np.arange(n - 1)
    net = RealizedNetwork(n, np.r_[rows, 0], np.r_[rows + 1, n - 1], np.ones(n))
    return net


# ---------------------------------------------------------------------------
# eigenvector


def test_constant_matrix():
    n, p = 40, 0.3
    pair = spectral.top_eigenpair(ExpectedMatrix(np.full((n, n), p)))
    assert pair.value == pytest.approx(n * p, rel=1e-12)
    np.testing.assert_allclose(pair.vector, 1 / math.sqrt(n), atol=1e-12)


def test_cycle_graph():
    pair = spectral.top_eigenpair(cycle(11))
    assert pair.value == pytest.approx(2.0, abs=1e-10)
    np.testing.assert_allclose(pair.vector, 1 / math.sqrt(11), atol=1e-10)


def test_two_by_two():
    pair = spectral.top_eigenpair(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert pair.value == pytest.approx(1.0)
    np.testing.assert_allclose(pair.vector, [2**-0.5, 2**-0.5])
    assert np.allclose(spectral.eigenvector_centrality(np.array([[0.0, 1.0], [1.0, 0.0]])), pair.vector)


def test_eigenpair_against_dense_solver_and_contract():
    rng = np.random.default_rng(3)
    for _ in range(5):
        a = rng.uniform(0, 1, (30, 30))
        a = (a + a.T) / 2
        pair = spectral.top_eigenpair(a)
        lam, v = dense_top(a)
        assert pair.value == pytest.approx(lam, rel=1e-10)
        np.testing.assert_allclose(pair.vector, v, atol=1e-9)
        assert np.linalg.norm(pair.vector) == pytest.approx(1, abs=1e-12)
        assert np.linalg.norm(a @ pair.vector - pair.value * pair.vector) <= 1e-10 * 1.0001
        assert pair.vector.min() >= -1e-10


def test_block_reduction_matches_dense():
    model = BlockModel([0.5, 0.3, 0.2], [[0.5, 0.1, 0.2], [0.1, 0.4, 0.1], [0.2, 0.1, 0.3]])
    e = build_expected_sbm(model, 300)
    pair = spectral.top_eigenpair(e)
    lam, v = dense_top(e.entries)
    assert pair.value == pytest.approx(lam, rel=1e-12)
    assert np.abs(pair.vector - v).max() <= 1e-10
    assert np.linalg.norm(e.entries @ pair.vector - pair.value * pair.vector) <= 1e-10


def test_realized_network_matches_dense():
    e = build_expected_sbm(BlockModel.two_probability([0.6, 0.4], 0.3, 0.1), 200)
    net = sample_bernoulli(e, 5)
    pair = spectral.top_eigenpair(net)
    lam, v = dense_top(net.to_dense())
    assert pair.value == pytest.approx(lam, rel=1e-11)
    np.testing.assert_allclose(pair.vector, v, atol=1e-9)
    assert pair.residual <= 1e-10


def test_sparse_input_accepted():
    m = sp.csr_matrix(np.array([[0.0, 2.0], [2.0, 0.0]]))
    assert spectral.top_eigenpair(m).value == pytest.approx(2.0)


def test_disconnected_near_tie_resolves_to_one_block():
    # two nearly identical cliques: power iteration alone stalls
    n = 60
    rows, cols = np.triu_indices(30, 1)
    keep = ~((rows == 0) & (cols == 1))
    r = np.r_[rows, rows[keep] + 30]
    c = np.r_[cols, cols[keep] + 30]
    net = RealizedNetwork(n, r, c, np.ones(r.size))
    pair = spectral.top_eigenpair(net)
    assert pair.residual <= 1e-10
    assert np.abs(pair.vector[30:]).max() < 1e-8
    lam, _ = dense_top(net.to_dense())
    assert pair.value == pytest.approx(lam, rel=1e-12)


def test_nonconvergence_raised():
    a = np.array([[1.0, 0.0], [0.0, -1.0]])
    with pytest.raises(NonConvergence) as info:
        spectral.top_eigenpair(a, max_iter=50)
    assert info.value.iterations == 50


def test_sign_convention_first_nonzero():
    assert spectral._orient(np.array([0.0, -1.0, 1.0])).tolist() == [0.0, 1.0, -1.0]
    assert spectral._orient(np.array([-1.0, -2.0])).tolist() == [1.0, 2.0]


# ---------------------------------------------------------------------------
# second eigenvalue and diagnostics


def test_second_eigenvalue_rank_one():
    assert spectral.second_eigenvalue(ExpectedMatrix(np.full((20, 20), 0.2))) == 0.0
    assert spectral.second_eigenvalue(np.full((20, 20), 0.2)) == 0.0


def test_second_eigenvalue_two_groups():
    a, b = 25.0, 5.0
    assert abs(spectral.second_eigenvalue(np.array([[a, b], [b, a]]))) == pytest.approx(abs(a - b), rel=1e-9)
    e = build_expected_sbm(BlockModel.two_probability([0.5, 0.5], 0.5, 0.1), 100)
    assert abs(spectral.second_eigenvalue(e)) == pytest.approx(50 * 0.4, rel=1e-9)


def test_second_eigenvalue_against_dense_solver():
    rng = np.random.default_rng(8)
    a = rng.uniform(0, 1, (25, 25))
    a = (a + a.T) / 2
    vals = np.linalg.eigvalsh(a)
    want = max(vals[:-1], key=abs)
    assert spectral.second_eigenvalue(a) == pytest.approx(want, rel=1e-8)


def test_split_counterexample_gap_vanishes():
    d = spectral.diagnostics(build_counterexample_split(400))
    assert d.gap_ratio < 0.001
    assert abs(d.lambda2) / d.lambda1 > 0.999


def test_diagnostics_erdos_renyi():
    d = spectral.diagnostics(build_expected_sbm(BlockModel.erdos_renyi(0.25), 500))
    assert d.lambda1 == pytest.approx(125, rel=1e-12)
    assert d.max_expected_degree == pytest.approx(125, rel=1e-12)
    assert d.large_eig_ratio == pytest.approx(125 / math.sqrt(125 * math.log(500)), rel=1e-12)
    assert set(d.to_dict()) == {
        "lambda1", "lambda2", "gap_ratio", "max_expected_degree", "large_eig_ratio", "leveq_lhs", "leveq_rhs",
    }


def test_diagnostics_star_ratio_decreasing():
    ratios = [spectral.diagnostics(build_counterexample_star(n)).large_eig_ratio for n in (200, 400, 800)]
    assert ratios[0] > ratios[1] > ratios[2]


@pytest.mark.parametrize("ps,pd", [(0.5, 0.1), (0.3, 0.2), (0.9, 0.05)])
def test_gap_ratio_two_equal_groups(ps, pd):
    d = spectral.diagnostics(build_expected_sbm(BlockModel.two_probability([0.5, 0.5], ps, pd), 200))
    assert d.gap_ratio == pytest.approx(1 - abs(ps - pd) / (ps + pd), rel=1e-9)


@given(st.integers(2, 25), st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_leveq_on_positive_matrices(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.uniform(0.01, 1, (n, n))
    a = (a + a.T) / 2
    d = spectral.diagnostics(ExpectedMatrix(a))
    assert d.leveq_holds


# ---------------------------------------------------------------------------
# Katz-Bonacich


def test_katz_erdos_renyi_half():
    n, p = 400, 0.25
    e = build_expected_sbm(BlockModel.erdos_renyi(p), n)
    res = spectral.katz_bonacich(e, 0.5 / (n * p))
    np.testing.assert_allclose(res.scores, 2.0, rtol=1e-10)
    assert res.residual <= 1e-10


def test_katz_zero_decay():
    res = spectral.katz_bonacich(cycle(5), 0.0)
    assert np.array_equal(res.scores, np.ones(5))


def test_katz_path_graph():
    path = RealizedNetwork(3, [0, 1], [1, 2], [1.0, 1.0])
    res = spectral.katz_bonacich(path, 0.1)
    np.testing.assert_allclose(res.scores, [1.12245, 1.22449, 1.12245], atol=5e-6)
    oracle = np.linalg.solve(np.eye(3) - 0.1 * path.to_dense(), np.ones(3))
    assert np.linalg.norm(res.scores - oracle) <= 1e-10


def test_katz_infeasible():
    with pytest.raises(InfeasiblePhi, match="phi infeasible") as info:
        spectral.katz_bonacich(cycle(6), 0.6)
    assert info.value.lambda1 == pytest.approx(2.0)
    with pytest.raises(ValueError):
        spectral.katz_bonacich(cycle(6), -0.1)


@pytest.mark.parametrize("kind", ["dense", "realized", "expected-block"])
def test_katz_against_lu_oracle(kind):
    model = BlockModel([0.4, 0.6], [[0.3, 0.05], [0.05, 0.2]])
    e = build_expected_sbm(model, 150)
    if kind == "dense":
        matrix = e.entries + 0.01 * np.eye(150)
    elif kind == "realized":
        matrix = sample_bernoulli(e, 2)
    else:
        matrix = e
    lam = spectral.top_eigenpair(matrix).value
    for frac in (0.1, 0.5, 0.9):
        res = spectral.katz_bonacich(matrix, frac / lam)
        oracle = spectral.katz_dense_solve(matrix, frac / lam)
        np.testing.assert_allclose(res.scores, oracle, rtol=1e-9)
        assert res.residual <= 1e-10
        assert res.scores.min() >= 1


def test_katz_monotone_in_decay():
    net = sample_bernoulli(build_expected_sbm(BlockModel.erdos_renyi(0.1), 120), 4)
    lam = spectral.top_eigenpair(net).value
    prev = None
    for frac in (0.1, 0.3, 0.6, 0.9):
        c = spectral.katz_bonacich(net, frac / lam).scores
        if prev is not None:
            assert np.all(c >= prev)
        prev = c


def test_neumann_terms_bound():
    k = spectral.neumann_terms(0.5, 100, 1e-10)
    assert 0.5 ** (k + 1) / 0.5 * 10 < 1e-10
    assert 0.5 ** k / 0.5 * 10 >= 1e-10


def test_phi_preset():
    e = build_expected_sbm(BlockModel.erdos_renyi(0.2), 50)
    assert spectral.resolve_phi("half-inverse-lambda1", e) == pytest.approx(0.05)
    assert spectral.half_inverse_lambda1(e) == pytest.approx(0.05)
    assert spectral.resolve_phi(0.3) == 0.3
    with pytest.raises(ValueError):
        spectral.resolve_phi("quarter", e)


# ---------------------------------------------------------------------------
# representative-agent reduction


def test_reduced_block_matrix():
    assert spectral.reduced_block_matrix(BlockModel.erdos_renyi(0.3), 10).tolist() == [[3.0]]
    P = spectral.reduced_block_matrix(BlockModel.two_probability([0.5, 0.5], 0.5, 0.1), 100)
    np.testing.assert_allclose(P, [[25, 5], [5, 25]])


def test_reduced_spectrum_matches_expected_matrix():
    model = BlockModel([0.5, 0.3, 0.2], [[0.5, 0.1, 0.2], [0.1, 0.4, 0.1], [0.2, 0.1, 0.3]])
    n = 60
    P = spectral.reduced_block_matrix(model, n)
    full = np.linalg.eigvalsh(build_expected_sbm(model, n).entries)
    nonzero = np.sort(full[np.abs(full) > 1e-9])
    np.testing.assert_allclose(np.sort(np.linalg.eigvals(P).real), nonzero, rtol=1e-10)


@pytest.mark.parametrize("n", [30, 300, 500])
def test_block_centrality_matches_dense(n):
    model = BlockModel([0.5, 0.3, 0.2], [[0.5, 0.1, 0.2], [0.1, 0.4, 0.1], [0.2, 0.1, 0.3]])
    e = build_expected_sbm(model, n)
    lam, v = dense_top(e.entries)
    eig = spectral.expand_groups(spectral.block_centrality(model, n), model, n)
    assert np.abs(eig - v).max() <= 1e-10
    phi = 0.7 / lam
    katz = spectral.expand_groups(spectral.block_centrality(model, n, phi), model, n)
    oracle = np.linalg.solve(np.eye(n) - phi * e.entries, np.ones(n))
    assert np.abs(katz - oracle).max() <= 1e-10 * max(1, oracle.max())


def test_block_centrality_single_group_and_size_order():
    c = spectral.block_centrality(BlockModel.erdos_renyi(0.2), 100, 0.01)
    assert c[0] == pytest.approx(1 / (1 - 0.01 * 100 * 0.2))
    two = spectral.block_centrality(BlockModel.two_probability([0.65, 0.35], 0.5, 0.1), 1000, 0.001)
    assert two[0] > two[1]
    with pytest.raises(InfeasiblePhi):
        spectral.block_centrality(BlockModel.erdos_renyi(0.2), 100, 0.1)


def test_kronecker_eigenvector_factorizes():
    rng = np.random.default_rng(12)
    for n1, n2 in [(7, 9), (30, 40), (50, 50)]:
        a = rng.uniform(0.05, 1, (n1, n1))
        b = rng.uniform(0.05, 1, (n2, n2))
        l1, l2 = ExpectedMatrix((a + a.T) / 2), ExpectedMatrix((b + b.T) / 2)
        prod = build_kronecker(MulticharacteristicModel(l1, l2))
        v = spectral.top_eigenpair(prod).vector
        w = np.kron(spectral.top_eigenpair(l1).vector, spectral.top_eigenpair(l2).vector)
        assert np.linalg.norm(v - w) <= 1e-8


def test_spatial_grid_centrality_symmetry():
    model = SpatialGridModel(6, 0.8)
    c = spectral.katz_bonacich(build_spatial_grid(model), 0.01).scores
    assert c[model.index(1, 2)] == pytest.approx(c[model.index(2, 1)], rel=1e-12)
    assert c[model.index(0, 0)] == pytest.approx(c[model.index(6, 6)], rel=1e-12)


def test_centrality_csv_roundtrip(tmp_path):
    path = tmp_path / "s.csv"
    scores = np.array([0.1, 1 / 3, 2.0])
    spectral.write_centrality_csv(path, scores, [0, 0, 1])
    back, groups = spectral.read_centrality_csv(path)
    assert np.array_equal(back, scores)
    assert groups.tolist() == [0, 0, 1]
    spectral.write_centrality_csv(path, scores)
    assert spectral.read_centrality_csv(path)[1] is None
