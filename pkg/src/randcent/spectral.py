"""Eigenvector and Katz-Bonacich centrality, and spectral diagnostics.

Inputs may be an :class:`ExpectedMatrix`, a :class:`RealizedNetwork`, a dense
``ndarray`` or a scipy sparse matrix. Expected matrices that are constant on
group blocks are solved through the m x m representative-agent system, which
carries the whole nonzero spectrum; everything else goes through power
iteration on the full matrix (sparse mat-vec for sampled networks).
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .netmodel import BlockModel, ExpectedMatrix, RealizedNetwork, group_sizes

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100_000
DEFAULT_MARGIN = 1e-6
MAX_RESTARTS = 3
# power iteration runs in chunks; less than 100x residual progress per chunk counts as a stall
POWER_CHUNK = 200
STALL_FACTOR = 1e-2
HALF_INVERSE_LAMBDA1 = "half-inverse-lambda1"


class NonConvergence(RuntimeError):
    def __init__(self, iterations: int, residual: float, what: str = "power iteration"):
        self.iterations = iterations
        self.residual = residual
        super().__init__(f"{what} did not converge after {iterations} iterations (residual {residual:.3e})")


class InfeasiblePhi(ValueError):
    def __init__(self, phi: float, lambda1: float, margin: float = DEFAULT_MARGIN):
        self.phi = phi
        self.lambda1 = lambda1
        self.margin = margin
        super().__init__(
            f"phi infeasible: phi={phi:.17g} with lambda1={lambda1:.17g} gives "
            f"phi*lambda1={phi * lambda1:.17g} > 1 - {margin:g}"
        )


@dataclass
class EigenPair:
    value: float
    vector: np.ndarray
    residual: float
    iterations: int


@dataclass
class KatzResult:
    phi: float
    scores: np.ndarray
    residual: float
    n_terms: int = 0


@dataclass
class SpectralDiagnostics:
    lambda1: float
    lambda2: float
    gap_ratio: float
    max_expected_degree: float
    large_eig_ratio: float
    leveq_lhs: float
    leveq_rhs: float

    @property
    def lower_bound_lambda1_sq(self) -> float:
        return self.leveq_rhs

    @property
    def leveq_holds(self) -> bool:
        return self.leveq_lhs >= self.leveq_rhs * (1 - 1e-9)

    @property
    def leveq_slack(self) -> float:
        return self.leveq_lhs - self.leveq_rhs

    def to_dict(self) -> dict:
        return {k: float(v) for k, v in asdict(self).items()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


# ---------------------------------------------------------------------------
# operator plumbing

class _Reduced:
    """Symmetrized representative-agent system for a block-constant matrix.

    With group sizes D and block values B, the agent matrix maps the expansion
    of x to the expansion of P x where P = B D. The symmetric matrix
    S = D^1/2 B D^1/2 is similar to P, and a unit vector u for S expands to the
    unit agent vector with entries u_g / sqrt(D_g).
    """

    def __init__(self, sizes: np.ndarray, block: np.ndarray, group_of: np.ndarray | None = None):
        self.sizes = np.asarray(sizes, dtype=np.float64)
        self.block = np.asarray(block, dtype=np.float64)
        self.group_of = group_of
        root = np.sqrt(self.sizes)
        self.sym = root[:, None] * self.block * root[None, :]
        self.P = self.block * self.sizes[None, :]
        self.n = int(self.sizes.sum())

    def expand(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values)[self.group_of]

    def agent_norm(self, values: np.ndarray) -> float:
        return float(np.sqrt(np.sum(self.sizes * np.asarray(values) ** 2)))


def _reduction(matrix) -> _Reduced | None:
    if isinstance(matrix, ExpectedMatrix):
        bs = matrix.block_structure
        if bs is not None:
            sizes, block = bs
            return _Reduced(sizes, block, matrix.group_of)
    return None


def _as_operator(matrix):
    """``(n, matvec, csr_or_None, dense_or_None)`` for a non-reduced input."""
    if isinstance(matrix, RealizedNetwork):
        csr = matrix.csr
        return matrix.n, None, csr, None
    if isinstance(matrix, ExpectedMatrix):
        dense = matrix.entries
    elif sp.issparse(matrix):
        csr = sp.csr_matrix(matrix, dtype=np.float64)
        csr.sort_indices()
        return csr.shape[0], None, csr, None
    else:
        dense = np.asarray(matrix, dtype=np.float64)
        if dense.ndim != 2 or dense.shape[0] != dense.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {dense.shape}")
    return dense.shape[0], (lambda x: dense @ x), None, dense


def _max_row_sum(matrix) -> float:
    red = _reduction(matrix)
    if red is not None:
        return float(red.P.sum(axis=1).max())
    n, _, csr, dense = _as_operator(matrix)
    if csr is not None:
        return float(np.asarray(abs(csr).sum(axis=1)).max()) if n else 0.0
    return float(np.abs(dense).sum(axis=1).max())


def _orient(v: np.ndarray) -> np.ndarray:
    s = v.sum()
    if s < 0:
        return -v
    if s == 0:
        nz = np.flatnonzero(v)
        if nz.size and v[nz[0]] < 0:
            return -v
    return v


def _power_dense(mat: np.ndarray, x0: np.ndarray, tol: float, max_iter: int):
    x = x0.copy()
    lam, res = 0.0, math.inf
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


# ---------------------------------------------------------------------------
# eigenvector centrality

def top_eigenpair(matrix, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> EigenPair:
    """Leading eigenpair by power iteration from the uniform start vector."""
    red = _reduction(matrix)
    if red is not None:
        u0 = np.sqrt(red.sizes / red.n)
        lam, u, res, it = _power_dense(red.sym, u0, tol, max_iter)
        if res > tol:
            raise NonConvergence(it, res)
        v = _orient(red.expand(u / np.sqrt(red.sizes)))
        return EigenPair(lam, v, res, it)
    n, _, csr, dense = _as_operator(matrix)
    if n == 0:
        raise ValueError("empty matrix")
    x = np.full(n, 1.0 / math.sqrt(n))
    used, prev = 0, math.inf
    while used < max_iter:
        budget = min(POWER_CHUNK, max_iter - used)
        if csr is not None:
            lam, x, res, it = _kernels.csr_power(csr.indptr, csr.indices, csr.data, x, tol, budget)
        else:
            lam, x, res, it = _power_dense(dense, x, tol, budget)
        used += it
        if res <= tol:
            x = x / np.linalg.norm(x)
            return EigenPair(lam, _orient(x), res, used)
        if res > STALL_FACTOR * prev:
            break
        prev = res
    if used >= max_iter:
        raise NonConvergence(used, res)
    block = (lambda X: csr @ X) if csr is not None else (lambda X: dense @ X)
    lam, x, res, it = _subspace_iteration(block, x, tol, max_iter - used)
    used += it
    if res > tol:
        raise NonConvergence(used, res)
    return EigenPair(lam, _orient(x), res, used)


def _subspace_iteration(block_matvec, x0: np.ndarray, tol: float, max_iter: int, width: int = 4, seed: int = 0):
    """Top Ritz pair of orthogonal iteration on ``width`` vectors.

    Converges at rate |lambda_(width+1) / lambda_1|, so it survives a near tie
    between the two leading eigenvalues (nearly disconnected networks).
    """
    n = x0.size
    width = min(width, n)
    rng = np.random.default_rng(seed)
    X = np.column_stack([x0, rng.standard_normal((n, width - 1))])
    X, _ = np.linalg.qr(X)
    lam, q, res = 0.0, X[:, 0], math.inf
    for it in range(1, max_iter + 1):
        Y = block_matvec(X)
        T = X.T @ Y
        vals, vecs = np.linalg.eigh((T + T.T) / 2)
        order = np.argsort(vals)[::-1]
        vals, vecs = vals[order], vecs[:, order]
        q = X @ vecs[:, 0]
        lam = float(vals[0])
        res = float(np.linalg.norm(Y @ vecs[:, 0] - lam * q))
        if res <= tol:
            return lam, q / np.linalg.norm(q), res, it
        X, _ = np.linalg.qr(Y @ vecs)
    return lam, q, res, max_iter


def eigenvector_centrality(matrix, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> np.ndarray:
    return top_eigenpair(matrix, tol, max_iter).vector


def second_eigenvalue(
    matrix,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    top: EigenPair | None = None,
    seed: int = 0,
) -> float:
    """Second eigenvalue (largest in magnitude after deflating the top pair).

    Returns the signed Rayleigh quotient; callers wanting the magnitude take
    ``abs``. Zero when the deflated operator vanishes (rank one input).
    """
    red = _reduction(matrix)
    if red is not None:
        u0 = np.sqrt(red.sizes / red.n)
        lam1, u, res, it = _power_dense(red.sym, u0, tol, max_iter)
        if res > tol:
            raise NonConvergence(it, res)
        n = red.sizes.size
        sym = red.sym
        matvec = lambda x: sym @ x - lam1 * u * (u @ x)  # noqa: E731
    else:
        top = top or top_eigenpair(matrix, tol, max_iter)
        n, mv, csr, dense = _as_operator(matrix)
        lam1, u = top.value, top.vector
        if csr is not None:
            base = lambda x: _kernels.csr_matvec(csr.indptr, csr.indices, csr.data, x)  # noqa: E731
        else:
            base = mv
        matvec = lambda x: base(x) - lam1 * u * (u @ x)  # noqa: E731
    # deflated operator is numerically zero below this scale
    zero_scale = max(tol, 1e-12 * abs(lam1))
    rng = np.random.default_rng(seed)
    last_it, last_res = 0, math.inf
    for _ in range(MAX_RESTARTS + 1):
        x = rng.standard_normal(n)
        x -= u * (u @ x)
        nx = float(np.linalg.norm(x))
        if nx <= 1e-12:
            # one-dimensional space: nothing left after deflation
            return 0.0
        x /= nx
        lam = 0.0
        for it in range(1, max_iter + 1):
            y = matvec(x)
            ny = float(np.linalg.norm(y))
            if ny <= zero_scale:
                return 0.0
            lam = float(x @ y)
            res = float(np.linalg.norm(y - lam * x))
            if res <= tol:
                return lam
            x = y / ny
        last_it, last_res = it, res
    raise NonConvergence(last_it, last_res, "deflated power iteration")


# ---------------------------------------------------------------------------
# Katz-Bonacich centrality

def half_inverse_lambda1(matrix) -> float:
    return 0.5 / top_eigenpair(matrix).value


def resolve_phi(rule, matrix=None, lambda1: float | None = None) -> float:
    """A fixed decay value, or the named preset 1/(2 lambda1)."""
    if isinstance(rule, str):
        if rule != HALF_INVERSE_LAMBDA1:
            raise ValueError(f"unknown phi rule {rule!r}; use a number or {HALF_INVERSE_LAMBDA1!r}")
        if lambda1 is None:
            lambda1 = top_eigenpair(matrix).value
        return 0.5 / lambda1
    return float(rule)


def neumann_terms(x: float, n: int, tol: float) -> int:
    """Smallest K with x^(K+1) / (1 - x) * sqrt(n) < tol."""
    if x <= 0:
        return 0
    if x >= 1:
        raise ValueError("series ratio must be below 1")
    bound = math.log(tol * (1 - x) / math.sqrt(n)) / math.log(x)
    return max(0, math.floor(bound))


def katz_bonacich(
    matrix,
    phi: float,
    tol: float = DEFAULT_TOL,
    max_terms: int = 10_000_000,
    margin: float = DEFAULT_MARGIN,
    top: EigenPair | None = None,
) -> KatzResult:
    """Katz-Bonacich scores by truncated Neumann series with a certified tail."""
    phi = float(phi)
    if phi < 0:
        raise ValueError(f"phi must be nonnegative, got {phi}")
    red = _reduction(matrix)
    n = red.n if red is not None else _as_operator(matrix)[0]
    if phi == 0:
        return KatzResult(0.0, np.ones(n), 0.0, 0)
    top = top or top_eigenpair(matrix, tol)
    lam1 = top.value
    if phi * lam1 > 1 - margin:
        raise InfeasiblePhi(phi, lam1, margin)
    rho = min(_max_row_sum(matrix), lam1 + top.residual)
    x = phi * rho
    if x >= 1:
        x = phi * (lam1 + top.residual)
    n_terms = neumann_terms(x, n, tol)
    if n_terms > max_terms:
        raise NonConvergence(max_terms, math.inf, "Neumann series")

    if red is not None:
        P = red.P
        term = np.ones(P.shape[0])
        total = term.copy()
        for _ in range(n_terms):
            term = phi * (P @ term)
            total += term
        residual = red.agent_norm(total - phi * (P @ total) - 1.0)
        return KatzResult(phi, red.expand(total), residual, n_terms)

    _, mv, csr, dense = _as_operator(matrix)
    if csr is not None:
        c = _kernels.csr_neumann(csr.indptr, csr.indices, csr.data, phi, n_terms)
        ac = _kernels.csr_matvec(csr.indptr, csr.indices, csr.data, c)
    else:
        term = np.ones(n)
        c = term.copy()
        for _ in range(n_terms):
            term = phi * (dense @ term)
            c += term
        ac = dense @ c
    residual = float(np.linalg.norm(c - phi * ac - 1.0))
    return KatzResult(phi, c, residual, n_terms)


def katz_dense_solve(matrix, phi: float) -> np.ndarray:
    """Direct LU solve of (I - phi A) c = 1; reference for small n."""
    if isinstance(matrix, RealizedNetwork):
        dense = matrix.to_dense()
    elif isinstance(matrix, ExpectedMatrix):
        dense = matrix.entries
    elif sp.issparse(matrix):
        dense = matrix.toarray()
    else:
        dense = np.asarray(matrix, dtype=np.float64)
    n = dense.shape[0]
    return np.linalg.solve(np.eye(n) - phi * dense, np.ones(n))


# ---------------------------------------------------------------------------
# block models through the representative-agent matrix

def reduced_block_matrix(model: BlockModel, n: int) -> np.ndarray:
    """P[i][j] = (size of group j) * p_ij with largest-remainder sizes."""
    sizes = group_sizes(model.shares, n)
    return model.probs * sizes[None, :].astype(np.float64)


def _katz_groups(probs: np.ndarray, sizes: np.ndarray, phi: float, margin: float = DEFAULT_MARGIN) -> np.ndarray:
    red = _Reduced(sizes, probs)
    lam1 = _power_dense(red.sym, np.sqrt(red.sizes / red.n), DEFAULT_TOL, DEFAULT_MAX_ITER)[0]
    if phi * lam1 > 1 - margin:
        raise InfeasiblePhi(phi, lam1, margin)
    m = probs.shape[0]
    return np.linalg.solve(np.eye(m) - phi * red.P, np.ones(m))


def block_lambda1(model: BlockModel, n: int) -> float:
    sizes = group_sizes(model.shares, n)
    red = _Reduced(sizes, model.probs)
    lam, _, res, it = _power_dense(red.sym, np.sqrt(red.sizes / red.n), DEFAULT_TOL, DEFAULT_MAX_ITER)
    if res > DEFAULT_TOL:
        raise NonConvergence(it, res)
    return lam


def block_centrality(model: BlockModel, n: int, phi: float | None = None) -> np.ndarray:
    """Per-group centrality of the expected matrix.

    Without ``phi``: the entries of the unit-norm top eigenvector of the
    n x n expected matrix, one value per group. With ``phi``: Katz scores
    from the m x m system c = 1 + phi P c.
    """
    sizes = group_sizes(model.shares, n)
    if np.any(sizes == 0):
        raise ValueError(f"n={n} leaves an empty group")
    if phi is not None:
        return _katz_groups(model.probs, sizes, float(phi))
    red = _Reduced(sizes, model.probs)
    lam, u, res, it = _power_dense(red.sym, np.sqrt(red.sizes / red.n), DEFAULT_TOL, DEFAULT_MAX_ITER)
    if res > DEFAULT_TOL:
        raise NonConvergence(it, res)
    v = u / np.sqrt(red.sizes)
    return v if v.sum() >= 0 else -v


def expand_groups(values, model: BlockModel, n: int) -> np.ndarray:
    sizes = group_sizes(model.shares, n)
    return np.repeat(np.asarray(values, dtype=np.float64), sizes)


# ---------------------------------------------------------------------------
# diagnostics

def diagnostics(matrix: ExpectedMatrix, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> SpectralDiagnostics:
    entries = matrix.entries if isinstance(matrix, ExpectedMatrix) else np.asarray(matrix, dtype=np.float64)
    n = entries.shape[0]
    if n < 2:
        raise ValueError("diagnostics need n >= 2")
    top = top_eigenpair(matrix, tol, max_iter)
    lam1 = top.value
    lam2 = second_eigenvalue(matrix, tol, max_iter, top=top)
    delta = float(entries.sum(axis=1).max())
    return SpectralDiagnostics(
        lambda1=lam1,
        lambda2=lam2,
        gap_ratio=1.0 - abs(lam2) / lam1,
        max_expected_degree=delta,
        large_eig_ratio=lam1 / math.sqrt(delta * math.log(n)),
        leveq_lhs=lam1 * lam1,
        leveq_rhs=float(entries.min() * entries.sum()),
    )


# ---------------------------------------------------------------------------
# file output

def write_centrality_csv(path, scores, group_of=None) -> None:
    scores = np.asarray(scores, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["agent", "group", "score"])
        for a, s in enumerate(scores):
            g = "" if group_of is None else int(group_of[a])
            w.writerow([a, g, f"{s:.17g}"])


def read_centrality_csv(path) -> tuple[np.ndarray, np.ndarray | None]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if rows and set(rows[0]) != {"agent", "group", "score"}:
        raise ValueError(f"{path}: expected header agent,group,score")
    rows.sort(key=lambda r: int(r["agent"]))
    scores = np.array([float(r["score"]) for r in rows])
    groups = None
    if rows and rows[0]["group"] != "":
        groups = np.array([int(r["group"]) for r in rows])
    return scores, groups
