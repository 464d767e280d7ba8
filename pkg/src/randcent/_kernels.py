"""Hot loops: counter-based hashing, triangle enumeration, CSR solvers, walk sums.

Every kernel has a numba implementation and a pure numpy/scipy implementation.
The numba path is used when numba imports and ``RANDCENT_DISABLE_NUMBA`` is
unset (or set to 0/false). Random draws are produced by integer hashing, so both
paths yield bit-identical uniforms; floating point kernels agree to rounding.
"""
from __future__ import annotations

import os

import numpy as np
import scipy.sparse as sp

_FLAG = os.environ.get("RANDCENT_DISABLE_NUMBA", "").strip().lower()
NUMBA_DISABLED = _FLAG not in {"", "0", "false", "no", "off"}

try:
    if NUMBA_DISABLED:
        raise ImportError("numba disabled by RANDCENT_DISABLE_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"

MASK64 = (1 << 64) - 1
_GOLDEN_INT = 0x9E3779B97F4A7C15
_M1_INT = 0xBF58476D1CE4E5B9
_M2_INT = 0x94D049BB133111EB

_GOLDEN = np.uint64(_GOLDEN_INT)
_M1 = np.uint64(_M1_INT)
_M2 = np.uint64(_M2_INT)
_ONE = np.uint64(1)
_S11 = np.uint64(11)
_S27 = np.uint64(27)
_S30 = np.uint64(30)
_S31 = np.uint64(31)
_INV53 = 1.0 / 9007199254740992.0


# ---------------------------------------------------------------------------
# scalar hashing (pure python ints, used for seed derivation)

def _mix_int(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1_INT) & MASK64
    z = ((z ^ (z >> 27)) * _M2_INT) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *coords: int) -> int:
    """Fold integer coordinates into a 64-bit seed (splitmix64 chain).

    ``derive_seed(seed, a, b)`` equals ``derive_seed(derive_seed(seed, a), b)``
    only in the sense that both are deterministic; callers should treat the
    output as an opaque key.
    """
    if seed < 0:
        raise ValueError(f"seed must be nonnegative, got {seed}")
    h = _mix_int(seed + _GOLDEN_INT)
    for c in coords:
        if c < 0:
            raise ValueError(f"hash coordinates must be nonnegative, got {c}")
        h = _mix_int(h + _GOLDEN_INT * (c + 1))
    return h


def uniform_scalar(key: int, *coords: int) -> float:
    """Uniform on [0, 1) for one coordinate tuple; matches the array kernels."""
    h = key
    for c in coords:
        h = _mix_int(h + _GOLDEN_INT * (c + 1))
    return (h >> 11) * _INV53


# ---------------------------------------------------------------------------
# numpy implementations

def _mix_np(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def _fold_np(h, c):
    return _mix_np(h + _GOLDEN * (c.astype(np.uint64) + _ONE))


def _pair_uniforms_np(key, n):
    rows, cols = np.triu_indices(n, 1)
    h = np.full(rows.shape, np.uint64(key), dtype=np.uint64)
    h = _fold_np(_fold_np(h, rows), cols)
    return (h >> _S11).astype(np.float64) * _INV53


def _triangle_counts_np(key, group_of, tri_probs):
    n = group_of.shape[0]
    counts = np.zeros((n, n), dtype=np.int64)
    base = np.uint64(key)
    for i in range(n - 2):
        m = n - i - 1
        jj, kk = np.triu_indices(m, 1)
        jj = jj + i + 1
        kk = kk + i + 1
        h = np.full(jj.shape, base, dtype=np.uint64)
        h = _fold_np(h, np.full(jj.shape, i, dtype=np.int64))
        h = _fold_np(_fold_np(h, jj), kk)
        u = (h >> _S11).astype(np.float64) * _INV53
        t = tri_probs[group_of[i], group_of[jj], group_of[kk]]
        hit = u < t
        if not hit.any():
            continue
        j_hit, k_hit = jj[hit], kk[hit]
        np.add.at(counts[i], j_hit, 1)
        np.add.at(counts[i], k_hit, 1)
        np.add.at(counts, (j_hit, k_hit), 1)
    return counts


def _csr_matvec_np(indptr, indices, data, x):
    n = indptr.shape[0] - 1
    mat = sp.csr_matrix((data, indices, indptr), shape=(n, n))
    return mat @ x


def _csr_power_np(indptr, indices, data, x0, tol, max_iter):
    n = indptr.shape[0] - 1
    mat = sp.csr_matrix((data, indices, indptr), shape=(n, n))
    x = x0.copy()
    lam = 0.0
    res = np.inf
    for it in range(1, max_iter + 1):
        y = mat @ x
        lam = float(x @ y)
        res = float(np.linalg.norm(y - lam * x))
        if res <= tol:
            return lam, x, res, it
        ny = float(np.linalg.norm(y))
        if ny == 0.0:
            return 0.0, x, res, it
        x = y / ny
    return lam, x, res, max_iter


def _csr_neumann_np(indptr, indices, data, phi, n_terms):
    n = indptr.shape[0] - 1
    mat = sp.csr_matrix((data, indices, indptr), shape=(n, n))
    term = np.ones(n)
    total = np.ones(n)
    for _ in range(n_terms):
        term = phi * (mat @ term)
        total += term
    return total


def _walk_sum_np(P, phi, start, gi, gj, n_terms):
    m = P.shape[0]
    flag = np.zeros((m, m))
    flag[gi, gj] = 1.0
    flag[gj, gi] = 1.0
    walks = np.zeros(m)
    walks[start] = 1.0
    weighted = np.zeros(m)
    scaled = phi * P
    total = 0.0
    for _ in range(n_terms):
        weighted = weighted @ scaled + walks @ (scaled * flag)
        walks = walks @ scaled
        total += weighted.sum()
    return total


# ---------------------------------------------------------------------------
# numba implementations

if HAVE_NUMBA:

    @njit(cache=True, inline="always")
    def _mix_nb(z):
        z = (z ^ (z >> _S30)) * _M1
        z = (z ^ (z >> _S27)) * _M2
        return z ^ (z >> _S31)

    @njit(cache=True, nogil=True)
    def _pair_uniforms_nb(key, n):
        out = np.empty(n * (n - 1) // 2, dtype=np.float64)
        base = np.uint64(key)
        pos = 0
        for i in range(n):
            hi = _mix_nb(base + _GOLDEN * (np.uint64(i) + _ONE))
            for j in range(i + 1, n):
                h = _mix_nb(hi + _GOLDEN * (np.uint64(j) + _ONE))
                out[pos] = np.float64(h >> _S11) * _INV53
                pos += 1
        return out

    @njit(cache=True, nogil=True)
    def _triangle_counts_nb(key, group_of, tri_probs):
        n = group_of.shape[0]
        counts = np.zeros((n, n), dtype=np.int64)
        base = np.uint64(key)
        for i in range(n - 2):
            hi = _mix_nb(base + _GOLDEN * (np.uint64(i) + _ONE))
            gi = group_of[i]
            for j in range(i + 1, n - 1):
                hj = _mix_nb(hi + _GOLDEN * (np.uint64(j) + _ONE))
                gj = group_of[j]
                for k in range(j + 1, n):
                    h = _mix_nb(hj + _GOLDEN * (np.uint64(k) + _ONE))
                    u = np.float64(h >> _S11) * _INV53
                    if u < tri_probs[gi, gj, group_of[k]]:
                        counts[i, j] += 1
                        counts[i, k] += 1
                        counts[j, k] += 1
        return counts

    @njit(cache=True, nogil=True)
    def _csr_matvec_nb(indptr, indices, data, x):
        n = indptr.shape[0] - 1
        y = np.empty(n, dtype=np.float64)
        for r in range(n):
            acc = 0.0
            for p in range(indptr[r], indptr[r + 1]):
                acc += data[p] * x[indices[p]]
            y[r] = acc
        return y

    @njit(cache=True, nogil=True)
    def _csr_power_nb(indptr, indices, data, x0, tol, max_iter):
        n = x0.shape[0]
        x = x0.copy()
        lam = 0.0
        res = np.inf
        for it in range(1, max_iter + 1):
            y = _csr_matvec_nb(indptr, indices, data, x)
            lam = 0.0
            for r in range(n):
                lam += x[r] * y[r]
            res2 = 0.0
            ny2 = 0.0
            for r in range(n):
                d = y[r] - lam * x[r]
                res2 += d * d
                ny2 += y[r] * y[r]
            res = np.sqrt(res2)
            if res <= tol:
                return lam, x, res, it
            if ny2 == 0.0:
                return 0.0, x, res, it
            ny = np.sqrt(ny2)
            for r in range(n):
                x[r] = y[r] / ny
        return lam, x, res, max_iter

    @njit(cache=True, nogil=True)
    def _csr_neumann_nb(indptr, indices, data, phi, n_terms):
        n = indptr.shape[0] - 1
        term = np.ones(n)
        total = np.ones(n)
        for _ in range(n_terms):
            term = _csr_matvec_nb(indptr, indices, data, term)
            for r in range(n):
                term[r] *= phi
                total[r] += term[r]
        return total

    @njit(cache=True, nogil=True)
    def _walk_sum_nb(P, phi, start, gi, gj, n_terms):
        m = P.shape[0]
        walks = np.zeros(m)
        walks[start] = 1.0
        weighted = np.zeros(m)
        total = 0.0
        for _ in range(n_terms):
            new_walks = np.zeros(m)
            new_weighted = np.zeros(m)
            for g in range(m):
                wg = walks[g]
                fg = weighted[g]
                for h in range(m):
                    step = phi * P[g, h]
                    new_walks[h] += wg * step
                    inc = fg
                    if (g == gi and h == gj) or (g == gj and h == gi):
                        inc += wg
                    new_weighted[h] += inc * step
            walks = new_walks
            weighted = new_weighted
            for h in range(m):
                total += weighted[h]
        return total


_NUMPY_IMPL = {
    "pair_uniforms": _pair_uniforms_np,
    "triangle_counts": _triangle_counts_np,
    "csr_matvec": _csr_matvec_np,
    "csr_power": _csr_power_np,
    "csr_neumann": _csr_neumann_np,
    "walk_sum": _walk_sum_np,
}

if HAVE_NUMBA:
    _NUMBA_IMPL = {
        "pair_uniforms": _pair_uniforms_nb,
        "triangle_counts": _triangle_counts_nb,
        "csr_matvec": _csr_matvec_nb,
        "csr_power": _csr_power_nb,
        "csr_neumann": _csr_neumann_nb,
        "walk_sum": _walk_sum_nb,
    }
else:
    _NUMBA_IMPL = {}


def implementations(backend: str) -> dict:
    """Kernel table for ``"numpy"`` or ``"numba"`` (benchmarks and tests)."""
    if backend == "numpy":
        return dict(_NUMPY_IMPL)
    if backend == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba backend unavailable")
        return dict(_NUMBA_IMPL)
    raise ValueError(f"unknown backend {backend!r}")


_ACTIVE = _NUMBA_IMPL if HAVE_NUMBA else _NUMPY_IMPL


# ---------------------------------------------------------------------------
# public dispatch

def pair_uniforms(key: int, n: int) -> np.ndarray:
    """Uniforms for every pair i < j in row-major ``triu_indices`` order."""
    return _ACTIVE["pair_uniforms"](np.uint64(key), np.int64(n))


def triangle_counts(key: int, group_of: np.ndarray, tri_probs: np.ndarray) -> np.ndarray:
    """Upper-triangular counts of formed triangles containing each pair."""
    g = np.ascontiguousarray(group_of, dtype=np.int64)
    t = np.ascontiguousarray(tri_probs, dtype=np.float64)
    return _ACTIVE["triangle_counts"](np.uint64(key), g, t)


def csr_matvec(indptr, indices, data, x):
    return _ACTIVE["csr_matvec"](indptr, indices, data, np.ascontiguousarray(x, dtype=np.float64))


def csr_power(indptr, indices, data, x0, tol, max_iter):
    lam, x, res, it = _ACTIVE["csr_power"](
        indptr, indices, data, np.ascontiguousarray(x0, dtype=np.float64), float(tol), int(max_iter)
    )
    return float(lam), x, float(res), int(it)


def csr_neumann(indptr, indices, data, phi, n_terms):
    return _ACTIVE["csr_neumann"](indptr, indices, data, float(phi), int(n_terms))


def walk_sum(P, phi, start, gi, gj, n_terms):
    P = np.ascontiguousarray(P, dtype=np.float64)
    return float(_ACTIVE["walk_sum"](P, float(phi), int(start), int(gi), int(gj), int(n_terms)))
