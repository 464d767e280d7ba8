import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from randcent import _kernels as K

numba_only = pytest.mark.skipif(not K.HAVE_NUMBA, reason="numba backend unavailable")


def test_derive_seed_deterministic_and_coordinate_sensitive():
    assert K.derive_seed(5, 1, 2) == K.derive_seed(5, 1, 2)
    assert K.derive_seed(5, 1, 2) != K.derive_seed(5, 2, 1)
    assert K.derive_seed(5) != K.derive_seed(6)
    assert 0 <= K.derive_seed(2**63, 7) <= K.MASK64


def test_derive_seed_rejects_negative():
    with pytest.raises(ValueError):
        K.derive_seed(-1)
    with pytest.raises(ValueError):
        K.derive_seed(1, -3)


@given(st.integers(0, 2**62), st.integers(2, 40))
@settings(max_examples=30, deadline=None)
def test_pair_uniforms_match_scalar_hash(key, n):
    u = K.pair_uniforms(key, n)
    rows, cols = np.triu_indices(n, 1)
    assert u.shape == (n * (n - 1) // 2,)
    assert np.all((u >= 0) & (u < 1))
    for e in (0, len(u) // 2, len(u) - 1):
        assert u[e] == K.uniform_scalar(key, int(rows[e]), int(cols[e]))


def test_pair_uniforms_roughly_uniform():
    u = K.pair_uniforms(K.derive_seed(11, 0), 600)
    assert abs(u.mean() - 0.5) < 5 * np.sqrt(1 / 12 / u.size)
    hist, _ = np.histogram(u, bins=10, range=(0, 1))
    expected = u.size / 10
    chi2 = ((hist - expected) ** 2 / expected).sum()
    assert chi2 < 40  # 9 dof; far tail


@numba_only
def test_backends_agree_bitwise_on_draws():
    nb, npi = K.implementations("numba"), K.implementations("numpy")
    key = np.uint64(K.derive_seed(3, 0))
    assert np.array_equal(nb["pair_uniforms"](key, np.int64(57)), npi["pair_uniforms"](key, 57))
    g = np.repeat([0, 1, 2], [10, 8, 7]).astype(np.int64)
    t = np.random.default_rng(0).uniform(0, 0.1, (3, 3, 3))
    t = sum(t.transpose(p) for p in [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]) / 6
    assert np.array_equal(nb["triangle_counts"](key, g, t), npi["triangle_counts"](key, g, t))


@numba_only
def test_backends_agree_on_float_kernels():
    nb, npi = K.implementations("numba"), K.implementations("numpy")
    m = sp.random(120, 120, density=0.08, random_state=4)
    m = (m + m.T).tocsr()
    m.sort_indices()
    x0 = np.ones(120) / np.sqrt(120)
    a = nb["csr_power"](m.indptr, m.indices, m.data, x0, 1e-11, 50000)
    b = npi["csr_power"](m.indptr, m.indices, m.data, x0, 1e-11, 50000)
    assert a[0] == pytest.approx(b[0], rel=1e-12)
    np.testing.assert_allclose(a[1], b[1], atol=1e-10)
    x = np.arange(120.0)
    np.testing.assert_allclose(nb["csr_matvec"](m.indptr, m.indices, m.data, x), m @ x, rtol=1e-13)
    np.testing.assert_allclose(
        nb["csr_neumann"](m.indptr, m.indices, m.data, 0.05, 30),
        npi["csr_neumann"](m.indptr, m.indices, m.data, 0.05, 30),
        rtol=1e-13,
    )
    P = np.array([[3.0, 1.0, 0.5], [2.0, 4.0, 1.0], [0.25, 1.5, 2.0]])
    for pair in [(0, 1), (2, 2), (0, 2)]:
        assert nb["walk_sum"](P, 0.1, 1, *pair, 80) == pytest.approx(npi["walk_sum"](P, 0.1, 1, *pair, 80), rel=1e-13)


def test_triangle_counts_brute_force():
    key = K.derive_seed(9, 2)
    g = np.array([0, 0, 1, 1, 1, 0], dtype=np.int64)
    t = np.full((2, 2, 2), 0.4)
    counts = K.triangle_counts(key, g, t)
    n = g.size
    ref = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                if K.uniform_scalar(key, i, j, k) < 0.4:
                    ref[i, j] += 1
                    ref[i, k] += 1
                    ref[j, k] += 1
    assert np.array_equal(counts, ref)


def test_walk_sum_single_group_series():
    # one group: weighted count sum_k k (phi P)^k
    x = 0.3
    total = K.walk_sum(np.array([[3.0]]), 0.1, 0, 0, 0, 200)
    assert total == pytest.approx(x / (1 - x) ** 2, rel=1e-12)


def test_unknown_backend():
    with pytest.raises(ValueError):
        K.implementations("cuda")


def test_environment_flag_selects_numpy_backend_with_same_draws():
    import os
    import subprocess
    import sys

    code = (
        "from randcent import _kernels as K, netmodel as M;"
        "e = M.build_expected_sbm(M.BlockModel.erdos_renyi(0.3), 60);"
        "net = M.sample_bernoulli(e, 17);"
        "print(K.BACKEND, net.n_edges, int(net.rows.sum() * 7 + net.cols.sum()))"
    )
    env = dict(os.environ, RANDCENT_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    backend, edges, digest = out.stdout.split()
    assert backend == "numpy"
    from randcent import netmodel as M

    net = M.sample_bernoulli(M.build_expected_sbm(M.BlockModel.erdos_renyi(0.3), 60), 17)
    assert (int(edges), int(digest)) == (net.n_edges, int(net.rows.sum() * 7 + net.cols.sum()))
