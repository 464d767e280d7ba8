"""Comparative statics of mean-field centrality in block models.

Katz derivatives with respect to a link probability are computed three ways:
a walk-count dynamic program over group states, a closed matrix formula using
one m x m inverse, and central finite differences of the block solve. The
three routes share nothing beyond the reduced matrix and serve as mutual
checks.

Group sizes are the rounded integer sizes used to build the expected matrix,
so every formula here is exact for the matrix actually built.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import _kernels
from .netmodel import BlockModel, ModelError, group_sizes
from .spectral import (
    DEFAULT_MARGIN,
    DEFAULT_TOL,
    InfeasiblePhi,
    _katz_groups,
    block_lambda1,
    reduced_block_matrix,
)


class ZeroProbability(ValueError):
    pass


@dataclass(frozen=True)
class TwoGroupSpec:
    s1: float
    p_s: float
    p_d: float
    n: int = 1

    def __post_init__(self):
        if not 0.5 <= self.s1 < 1:
            raise ModelError(f"s1 must lie in [1/2, 1), got {self.s1}")
        if not (self.p_s >= self.p_d > 0):
            raise ModelError(f"need p_s >= p_d > 0, got p_s={self.p_s}, p_d={self.p_d}")

    def model(self) -> BlockModel:
        return BlockModel.two_probability([self.s1, 1 - self.s1], self.p_s, self.p_d)


@dataclass
class DerivativeReport:
    target: int
    parameter: tuple[int, int]
    walk_sum_value: float
    closed_form_value: float
    finite_diff_value: float
    agreement: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["parameter"] = list(self.parameter)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _homophily(model: BlockModel) -> tuple[float, float]:
    hp = model.homophily_params
    if hp is None:
        raise ModelError("this formula needs a model with one within-group and one between-group probability")
    return hp


def _check_phi(phi: float, lam1: float, margin: float = DEFAULT_MARGIN) -> None:
    if phi < 0:
        raise ValueError(f"phi must be nonnegative, got {phi}")
    if phi * lam1 > 1 - margin:
        raise InfeasiblePhi(phi, lam1, margin)


# ---------------------------------------------------------------------------
# ratios and elasticities

def group_centrality_ratio(
    model: BlockModel,
    n: int,
    groups: tuple[int, int],
    phi: float | None = None,
    lambda1: float | None = None,
) -> float:
    """Centrality of a group-l agent over that of a group-l' agent.

    Eigenvector case when ``phi`` is None, using ``lambda1`` if given (lets
    callers hold the top eigenvalue fixed) or the model's own otherwise.
    """
    p_s, p_d = _homophily(model)
    sizes = group_sizes(model.shares, n)
    l, lp = groups
    if phi is None:
        t = 1.0 / (lambda1 if lambda1 is not None else block_lambda1(model, n))
    else:
        _check_phi(phi, block_lambda1(model, n))
        t = float(phi)
    gap = p_s - p_d
    return (1 - sizes[lp] * gap * t) / (1 - sizes[l] * gap * t)


def ratio_elasticity(
    model: BlockModel,
    n: int,
    groups: tuple[int, int],
    wrt: str,
    phi: float | None = None,
    lambda1: float | None = None,
) -> float:
    """Derivative of :func:`group_centrality_ratio` in p_s or p_d.

    The eigenvector case holds the top eigenvalue fixed at its current value.
    """
    if wrt not in ("p_s", "p_d"):
        raise ValueError(f"wrt must be 'p_s' or 'p_d', got {wrt!r}")
    p_s, p_d = _homophily(model)
    sizes = group_sizes(model.shares, n)
    l, lp = groups
    if phi is None:
        t = 1.0 / (lambda1 if lambda1 is not None else block_lambda1(model, n))
    else:
        _check_phi(phi, block_lambda1(model, n))
        t = float(phi)
    value = t * (sizes[l] - sizes[lp]) / (1 - sizes[l] * (p_s - p_d) * t) ** 2
    return value if wrt == "p_s" else -value


# ---------------------------------------------------------------------------
# Katz derivatives in one link probability

def walk_tail_bound(x: float, n_terms: int, p: float, n: int, size: int) -> float:
    """Bound on the discarded walk-sum terms beyond ``n_terms``."""
    k = n_terms
    return (1.0 / p) * math.sqrt(n / size) * x ** (k + 1) * ((k + 1) - k * x) / (1 - x) ** 2


def _walk_terms(x: float, p: float, n: int, size: int, tol: float, cap: int = 10_000_000) -> int:
    if x <= 0:
        return 0
    k = 1
    while walk_tail_bound(x, k, p, n, size) >= tol:
        k *= 2
        if k > cap:
            raise RuntimeError("walk-sum truncation exceeds cap")
    lo, hi = k // 2, k
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if walk_tail_bound(x, mid, p, n, size) < tol:
            hi = mid
        else:
            lo = mid
    return hi


def katz_derivative_walks(
    model: BlockModel,
    n: int,
    group: int,
    pair: tuple[int, int],
    phi: float,
    tol: float = DEFAULT_TOL,
) -> float:
    """d c_group / d p_pair by summing walks weighted by how often they use the pair."""
    i, j = pair
    p = float(model.probs[i, j])
    if p == 0:
        raise ZeroProbability(f"p[{i}][{j}] = 0; the walk formula divides by it")
    lam1 = block_lambda1(model, n)
    _check_phi(phi, lam1)
    if phi == 0:
        return 0.0
    sizes = group_sizes(model.shares, n)
    P = reduced_block_matrix(model, n)
    K = _walk_terms(phi * lam1, p, n, int(sizes[group]), tol)
    return _kernels.walk_sum(P, phi, group, i, j, K) / p


def _closed_parts(model: BlockModel, n: int, phi: float):
    lam1 = block_lambda1(model, n)
    _check_phi(phi, lam1)
    sizes = group_sizes(model.shares, n).astype(np.float64)
    P = reduced_block_matrix(model, n)
    m = model.m
    M = np.linalg.inv(np.eye(m) - phi * P)
    return sizes, M, M.sum(axis=1)


def _closed_value(sizes, M, c, phi, group, i, j) -> float:
    if i == j:
        # one matrix entry moves, not two
        return phi * sizes[i] * M[group, i] * c[i]
    return phi * (sizes[j] * M[group, i] * c[j] + sizes[i] * M[group, j] * c[i])


def katz_derivative_closed(model: BlockModel, n: int, group: int, pair: tuple[int, int], phi: float) -> float:
    """d c_group / d p_pair from the inverse of I - phi P."""
    sizes, M, c = _closed_parts(model, n, phi)
    return float(_closed_value(sizes, M, c, phi, group, *pair))


def homophily_derivatives(model: BlockModel, n: int, phi: float, wrt: str) -> np.ndarray:
    """Per-group Katz derivatives when every within (p_s) or between (p_d) probability moves together."""
    if wrt not in ("p_s", "p_d"):
        raise ValueError(f"wrt must be 'p_s' or 'p_d', got {wrt!r}")
    sizes, M, c = _closed_parts(model, n, phi)
    m = model.m
    if wrt == "p_s":
        pairs = [(i, i) for i in range(m)]
    else:
        pairs = [(i, j) for i in range(m) for j in range(i + 1, m)]
    return np.array([sum(_closed_value(sizes, M, c, phi, g, i, j) for i, j in pairs) for g in range(m)])


def finite_difference_derivative(
    model: BlockModel,
    n: int,
    group: int,
    wrt,
    phi: float,
    step: float | None = None,
) -> float:
    """Central difference of the block Katz solve.

    ``wrt`` is a group pair ``(i, j)`` or one of ``"p_s"``/``"p_d"``. The
    default step is 1e-6 times the probability being moved.
    """
    m = model.m
    mask = np.zeros((m, m), dtype=bool)
    if wrt == "p_s":
        np.fill_diagonal(mask, True)
    elif wrt == "p_d":
        mask = ~np.eye(m, dtype=bool)
    else:
        i, j = wrt
        mask[i, j] = mask[j, i] = True
    if not mask.any():
        raise ValueError("no probabilities selected")
    if step is None:
        step = 1e-6 * float(np.max(model.probs[mask]))
    if step == 0:
        raise ValueError("finite-difference step must be nonzero")
    sizes = group_sizes(model.shares, n)
    up = model.probs.copy()
    down = model.probs.copy()
    up[mask] += step
    down[mask] -= step
    hi = _katz_groups(up, sizes, phi)
    lo = _katz_groups(down, sizes, phi)
    return float((hi[group] - lo[group]) / (2 * step))


def derivative_report(
    model: BlockModel, n: int, group: int, pair: tuple[int, int], phi: float, step: float | None = None
) -> DerivativeReport:
    walks = katz_derivative_walks(model, n, group, pair, phi)
    closed = katz_derivative_closed(model, n, group, pair, phi)
    fd = finite_difference_derivative(model, n, group, pair, phi, step)
    vals = (walks, closed, fd)
    scale = max(abs(v) for v in vals)
    agreement = 0.0 if scale == 0 else max(abs(a - b) for a in vals for b in vals) / scale
    return DerivativeReport(group, (int(pair[0]), int(pair[1])), walks, closed, fd, agreement)


# ---------------------------------------------------------------------------
# two groups

def two_group_entry_ratio(s1: float, p_s: float, p_d: float) -> float:
    """Minority over majority entry of the top eigenvector."""
    a = (1 - 2 * s1) * p_s
    root = math.sqrt(a * a + 4 * s1 * (1 - s1) * p_d * p_d)
    return (a + root) / ((2 - 2 * s1) * p_d)


def two_group_total(s1: float, p_s: float, p_d: float, n: float = 1.0) -> float:
    """Entry sum of the top eigenvector scaled so majority entries are 1."""
    return s1 * n + (1 - s1) * n * two_group_entry_ratio(s1, p_s, p_d)


def two_group_eigvec_closed_form(spec: TwoGroupSpec) -> tuple[float, float]:
    return (
        two_group_entry_ratio(spec.s1, spec.p_s, spec.p_d),
        two_group_total(spec.s1, spec.p_s, spec.p_d, spec.n),
    )


def group_size_threshold(p_s: float, p_d: float) -> float:
    """Majority share at which the two-group eigenvector total turns around."""
    if p_d <= 0:
        raise ValueError(f"p_d must be positive, got {p_d}")
    if p_s < p_d:
        raise ValueError(f"need p_s >= p_d, got p_s={p_s}, p_d={p_d}")
    return 0.5 + p_d / (2 * math.sqrt(2 * p_d * p_d + 2 * p_s * p_d))


# ---------------------------------------------------------------------------
# phi grids

def phi_grid(lambda1: float, count: int = 50, lo: float = 1e-3, hi: float = 1 - 1e-3) -> np.ndarray:
    """Log-spaced decay values between ``lo/lambda1`` and ``hi/lambda1``."""
    return np.geomspace(lo, hi, count) / lambda1


def exam_model(delta: float = 0.01, eps: float = 1e-6) -> BlockModel:
    """Three equal groups: dense group 1, weak 1-2 tie, everything else nearly absent."""
    probs = np.full((3, 3), eps)
    probs[0, 0] = 1.0
    probs[0, 1] = probs[1, 0] = delta
    return BlockModel(np.full(3, 1 / 3), probs)
