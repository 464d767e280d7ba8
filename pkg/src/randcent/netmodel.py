"""Random network families and reproducible samplers.

Agent indexing is fixed so exported files line up across runs: block models
are group-contiguous, grids are row-major (``x * (k + 1) + y``) and Kronecker
products are layer-major (``i1 * n2 + i2``).

Randomness is counter based. The uniform attached to pair ``(i, j)`` depends
only on ``(seed, stream, i, j)``, so switching off triangles in a clustered
model reproduces the plain Bernoulli draw exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Mapping

import numpy as np
import scipy.sparse as sp

from . import _kernels

# hash streams; one per independent family of draws
STREAM_DYAD = 0
STREAM_WEIGHT = 1
STREAM_TRIANGLE = 2


class ModelError(ValueError):
    """Invalid model parameters."""


def _as_matrix(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ModelError(f"{name} must be a square matrix, got shape {arr.shape}")
    return arr


def _check_shares(shares: np.ndarray) -> None:
    if shares.ndim != 1 or shares.size == 0:
        raise ModelError("shares must be a nonempty vector")
    if np.any(shares <= 0):
        raise ModelError(f"shares must be positive, got {shares.tolist()}")
    if abs(shares.sum() - 1.0) > 1e-12:
        raise ModelError(f"shares must sum to 1, got {float(shares.sum())!r}")


def _check_symmetric(mat: np.ndarray, name: str) -> None:
    if not np.array_equal(mat, mat.T):
        raise ModelError(f"{name} must be symmetric")


@dataclass(frozen=True)
class BlockModel:
    """Stochastic block family: group shares and between-group link probabilities.

    Probabilities may be zero (the dyad part of a clustered model, the
    sparse example configurations); :attr:`is_positive` reports whether the
    strictly positive regime of the convergence results applies.
    """

    shares: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        shares = np.array(self.shares, dtype=np.float64).ravel()
        probs = _as_matrix(self.probs, "probs")
        _check_shares(shares)
        if probs.shape[0] != shares.size:
            raise ModelError(f"probs is {probs.shape[0]}x{probs.shape[0]} but there are {shares.size} groups")
        _check_symmetric(probs, "probs")
        if np.any(probs < 0) or np.any(probs > 1):
            raise ModelError("probs entries must lie in [0, 1]")
        shares.flags.writeable = False
        probs.flags.writeable = False
        object.__setattr__(self, "shares", shares)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def two_probability(cls, shares, p_s: float, p_d: float) -> "BlockModel":
        """Model with ``p_s`` on the diagonal and ``p_d`` off it."""
        m = len(shares)
        probs = np.full((m, m), float(p_d))
        np.fill_diagonal(probs, float(p_s))
        return cls(shares, probs)

    @classmethod
    def erdos_renyi(cls, p: float) -> "BlockModel":
        return cls([1.0], [[p]])

    @property
    def m(self) -> int:
        return self.shares.size

    @property
    def is_positive(self) -> bool:
        return bool(np.all(self.probs > 0))

    @property
    def homophily_params(self) -> tuple[float, float] | None:
        """``(p_s, p_d)`` when the model has that form, else ``None``."""
        diag = np.diag(self.probs)
        if not np.all(diag == diag[0]):
            return None
        if self.m == 1:
            return float(diag[0]), float(diag[0])
        off = self.probs[~np.eye(self.m, dtype=bool)]
        if not np.all(off == off[0]):
            return None
        return float(diag[0]), float(off[0])


@dataclass
class ExpectedMatrix:
    """Symmetric nonnegative matrix of link probabilities or expected weights."""

    entries: np.ndarray
    group_of: np.ndarray | None = None

    def __post_init__(self):
        self.entries = _as_matrix(self.entries, "entries")
        _check_symmetric(self.entries, "entries")
        if np.any(self.entries < 0):
            raise ModelError("expected matrix entries must be nonnegative")
        if self.group_of is not None:
            self.group_of = np.asarray(self.group_of, dtype=np.int64)
            if self.group_of.shape != (self.n,):
                raise ModelError("group_of must have one entry per agent")

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @cached_property
    def block_structure(self):
        """``(sizes, block_values)`` if entries are constant on group blocks, else ``None``.

        Diagonal entries count: a block is constant only if the diagonal agrees
        with the off-diagonal values of its group pair.
        """
        if self.group_of is None:
            return None
        g = self.group_of
        m = int(g.max()) + 1
        sizes = np.bincount(g, minlength=m)
        if np.any(sizes == 0):
            return None
        reps = np.array([np.flatnonzero(g == k)[0] for k in range(m)])
        block = self.entries[np.ix_(reps, reps)]
        if not np.array_equal(block[np.ix_(g, g)], self.entries):
            return None
        return sizes, block


@dataclass
class RealizedNetwork:
    """Sampled symmetric network stored as an upper-triangular edge list.

    ``rows[e] < cols[e]`` for every edge; weights are strictly positive.
    """

    n: int
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray
    seed: int | None = None
    group_of: np.ndarray | None = None

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.int64)
        self.cols = np.asarray(self.cols, dtype=np.int64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if not (self.rows.shape == self.cols.shape == self.weights.shape):
            raise ModelError("rows, cols and weights must have equal length")
        if self.rows.size:
            if np.any(self.rows >= self.cols):
                raise ModelError("edges must satisfy i < j")
            if self.rows.min() < 0 or self.cols.max() >= self.n:
                raise ModelError("edge index out of range")
            if np.any(self.weights <= 0):
                raise ModelError("edge weights must be positive")

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        return list(zip(self.rows.tolist(), self.cols.tolist(), self.weights.tolist()))

    @property
    def n_edges(self) -> int:
        return int(self.rows.size)

    @cached_property
    def csr(self) -> sp.csr_matrix:
        r = np.concatenate([self.rows, self.cols])
        c = np.concatenate([self.cols, self.rows])
        w = np.concatenate([self.weights, self.weights])
        mat = sp.csr_matrix((w, (r, c)), shape=(self.n, self.n))
        mat.sort_indices()
        return mat

    def to_dense(self) -> np.ndarray:
        return self.csr.toarray()


@dataclass(frozen=True)
class SpatialGridModel:
    """Agents on the integer grid {0..k}^2 with weight d^-rho between distinct points."""

    k: int
    rho: float

    def __post_init__(self):
        if self.k < 1:
            raise ModelError(f"grid side k must be >= 1, got {self.k}")
        if not self.rho > 0:
            raise ModelError(f"rho must be positive, got {self.rho}")

    @property
    def n(self) -> int:
        return (self.k + 1) ** 2

    def index(self, x: int, y: int) -> int:
        return x * (self.k + 1) + y


@dataclass
class MulticharacteristicModel:
    layer1: ExpectedMatrix
    layer2: ExpectedMatrix


@dataclass(frozen=True)
class ClusteredModel:
    """Dyads from ``base`` plus triangles with group-triplet probabilities."""

    base: BlockModel
    triangle_probs: np.ndarray

    def __post_init__(self):
        t = np.array(self.triangle_probs, dtype=np.float64)
        m = self.base.m
        if t.shape != (m, m, m):
            raise ModelError(f"triangle_probs must have shape {(m, m, m)}, got {t.shape}")
        if np.any(t < 0) or np.any(t >= 1):
            raise ModelError("triangle probabilities must lie in [0, 1)")
        for perm in ((0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)):
            if not np.array_equal(t, t.transpose(perm)):
                raise ModelError("triangle_probs must be symmetric in its three indices")
        t.flags.writeable = False
        object.__setattr__(self, "triangle_probs", t)


@dataclass(frozen=True)
class WeightedIntervalModel:
    """Edge weights uniform on [lower_ij, upper_ij] by group pair."""

    shares: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        shares = np.array(self.shares, dtype=np.float64).ravel()
        lower = _as_matrix(self.lower, "lower")
        upper = _as_matrix(self.upper, "upper")
        _check_shares(shares)
        if lower.shape != (shares.size,) * 2 or upper.shape != lower.shape:
            raise ModelError("lower and upper must be m x m with m = number of groups")
        _check_symmetric(lower, "lower")
        _check_symmetric(upper, "upper")
        if np.any(lower < 0) or np.any(upper < lower):
            raise ModelError("need 0 <= lower <= upper entrywise")
        object.__setattr__(self, "shares", shares)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def m(self) -> int:
        return self.shares.size


# ---------------------------------------------------------------------------
# builders

def group_sizes(shares, n: int) -> np.ndarray:
    """Largest-remainder apportionment of ``n`` agents; ties go to the lower index."""
    shares = np.asarray(shares, dtype=np.float64)
    quotas = shares * n
    sizes = np.floor(quotas).astype(np.int64)
    left = int(n - sizes.sum())
    if left:
        frac = quotas - sizes
        # stable sort on -frac keeps lower indices first among ties
        order = np.argsort(-frac, kind="stable")
        sizes[order[:left]] += 1
    return sizes


def assign_groups(shares, n: int) -> np.ndarray:
    shares = np.asarray(shares, dtype=np.float64)
    if n < shares.size:
        raise ModelError(f"n={n} is smaller than the number of groups ({shares.size})")
    sizes = group_sizes(shares, n)
    if np.any(sizes == 0):
        raise ModelError(f"n={n} leaves an empty group (sizes {sizes.tolist()})")
    return np.repeat(np.arange(shares.size), sizes)


def build_expected_sbm(model: BlockModel, n: int) -> ExpectedMatrix:
    g = assign_groups(model.shares, n)
    return ExpectedMatrix(model.probs[np.ix_(g, g)], group_of=g)


def build_spatial_grid(model: SpatialGridModel) -> ExpectedMatrix:
    side = np.arange(model.k + 1)
    xs = np.repeat(side, model.k + 1).astype(np.float64)
    ys = np.tile(side, model.k + 1).astype(np.float64)
    dist = np.hypot(xs[:, None] - xs[None, :], ys[:, None] - ys[None, :])
    np.fill_diagonal(dist, 1.0)
    entries = dist ** (-model.rho)
    np.fill_diagonal(entries, 1.0)
    return ExpectedMatrix(entries)


def build_kronecker(model: MulticharacteristicModel) -> ExpectedMatrix:
    return ExpectedMatrix(np.kron(model.layer1.entries, model.layer2.entries))


def build_counterexample_split(n: int) -> ExpectedMatrix:
    """Two halves linked internally w.p. 1/2 and across w.p. n^-3."""
    if n < 4 or n % 2:
        raise ModelError(f"split counterexample needs even n >= 4, got {n}")
    g = np.repeat([0, 1], n // 2)
    block = np.array([[0.5, float(n) ** -3], [float(n) ** -3, 0.5]])
    return ExpectedMatrix(block[np.ix_(g, g)], group_of=g)


def build_counterexample_star(n: int) -> ExpectedMatrix:
    """Agent 0 linked to everyone w.p. 1/2; all other pairs w.p. log(n)/n.

    The diagonal follows the same rule (entry (0, 0) is 1/2).
    """
    if n < 3:
        raise ModelError(f"star counterexample needs n >= 3, got {n}")
    g = np.ones(n, dtype=np.int64)
    g[0] = 0
    q = math.log(n) / n
    block = np.array([[0.5, 0.5], [0.5, q]])
    return ExpectedMatrix(block[np.ix_(g, g)], group_of=g)


def expected_weighted_uniform(model: WeightedIntervalModel, n: int) -> ExpectedMatrix:
    g = assign_groups(model.shares, n)
    mid = (model.lower + model.upper) / 2.0
    return ExpectedMatrix(mid[np.ix_(g, g)], group_of=g)


def expected_clustered(model: ClusteredModel, n: int) -> ExpectedMatrix:
    """E[A_ij] = p_{g_i g_j} + sum over k != i, j of t_{g_i g_j g_k}."""
    if n < 3:
        raise ModelError(f"clustered model needs n >= 3, got {n}")
    g = assign_groups(model.base.shares, n)
    sizes = np.bincount(g, minlength=model.base.m)
    t = model.triangle_probs
    # third-party sum over all agents, then remove k = i and k = j
    tri_sum = t @ sizes  # (m, m)
    entries = model.base.probs[np.ix_(g, g)] + tri_sum[np.ix_(g, g)]
    entries -= t[g[:, None], g[None, :], g[:, None]]
    entries -= t[g[:, None], g[None, :], g[None, :]]
    entries = (entries + entries.T) / 2.0
    return ExpectedMatrix(entries, group_of=g)


# ---------------------------------------------------------------------------
# samplers

def _stream_key(seed: int, stream: int) -> int:
    return _kernels.derive_seed(int(seed), stream)


def sample_bernoulli(exp: ExpectedMatrix, seed: int) -> RealizedNetwork:
    """Independent Bernoulli edge for every pair i < j; no self-loops."""
    if np.any(exp.entries > 1):
        raise ModelError("Bernoulli sampling needs every expected entry <= 1")
    n = exp.n
    u = _kernels.pair_uniforms(_stream_key(seed, STREAM_DYAD), n)
    rows, cols = np.triu_indices(n, 1)
    hit = u < exp.entries[rows, cols]
    return RealizedNetwork(n, rows[hit], cols[hit], np.ones(int(hit.sum())), seed=seed, group_of=exp.group_of)


def sample_weighted_uniform(model: WeightedIntervalModel, n: int, seed: int) -> RealizedNetwork:
    g = assign_groups(model.shares, n)
    u = _kernels.pair_uniforms(_stream_key(seed, STREAM_WEIGHT), n)
    rows, cols = np.triu_indices(n, 1)
    lo = model.lower[g[rows], g[cols]]
    hi = model.upper[g[rows], g[cols]]
    w = lo + (hi - lo) * u
    keep = w > 0
    return RealizedNetwork(n, rows[keep], cols[keep], w[keep], seed=seed, group_of=g)


def sample_clustered(model: ClusteredModel, n: int, seed: int) -> RealizedNetwork:
    """Dyad indicators plus shared triangle indicators, summed per pair."""
    if n < 3:
        raise ModelError(f"clustered model needs n >= 3, got {n}")
    g = assign_groups(model.base.shares, n)
    rows, cols = np.triu_indices(n, 1)
    u = _kernels.pair_uniforms(_stream_key(seed, STREAM_DYAD), n)
    w = (u < model.base.probs[g[rows], g[cols]]).astype(np.float64)
    if np.any(model.triangle_probs > 0):
        tri = _kernels.triangle_counts(_stream_key(seed, STREAM_TRIANGLE), g, model.triangle_probs)
        w += tri[rows, cols]
    keep = w > 0
    return RealizedNetwork(n, rows[keep], cols[keep], w[keep], seed=seed, group_of=g)


def replication_seed(master_seed: int, *coords: int) -> int:
    """Seed for one replication, derived from the master seed and its coordinates."""
    return _kernels.derive_seed(int(master_seed), *coords) >> 1


# ---------------------------------------------------------------------------
# model specifications as plain mappings (config files, study configs)

MODEL_KINDS = ("er", "sbm", "weighted", "clustered", "spatial", "kronecker", "split", "star")


@dataclass
class ModelSpec:
    """A parsed model mapping; ``build`` gives the expected matrix at size n."""

    kind: str
    params: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_mapping(cls, spec: Mapping[str, Any]) -> "ModelSpec":
        spec = dict(spec)
        kind = spec.pop("kind", None)
        if kind not in MODEL_KINDS:
            raise ModelError(f"model.kind must be one of {', '.join(MODEL_KINDS)}; got {kind!r}")
        out = cls(kind, spec)
        out.validate()
        return out

    def to_mapping(self) -> dict[str, Any]:
        return {"kind": self.kind, **self.params}

    def _need(self, key):
        if key not in self.params:
            raise ModelError(f"model.{key} is required for kind {self.kind!r}")
        return self.params[key]

    def validate(self) -> None:
        # build the typed objects so parameter errors surface early
        kind = self.kind
        if kind == "er":
            BlockModel.erdos_renyi(self._need("p"))
        elif kind == "sbm":
            self.block_model()
        elif kind == "weighted":
            self.weighted_model()
        elif kind == "clustered":
            self.clustered_model()
        elif kind == "spatial":
            SpatialGridModel(int(self._need("k")), float(self._need("rho")))
        elif kind == "kronecker":
            for name in ("layer1", "layer2"):
                layer = self._need(name)
                if not isinstance(layer, Mapping) or "n" not in layer:
                    raise ModelError(f"model.{name} must be a table with a size n")
                ModelSpec.from_mapping({k: v for k, v in layer.items() if k != "n"})

    def block_model(self) -> BlockModel:
        if self.kind == "er":
            return BlockModel.erdos_renyi(self._need("p"))
        shares = self._need("shares")
        if "probs" in self.params:
            return BlockModel(shares, self.params["probs"])
        if "p_s" in self.params and "p_d" in self.params:
            return BlockModel.two_probability(shares, self.params["p_s"], self.params["p_d"])
        raise ModelError("model.probs (or model.p_s and model.p_d) is required")

    def weighted_model(self) -> WeightedIntervalModel:
        return WeightedIntervalModel(self._need("shares"), self._need("lower"), self._need("upper"))

    def clustered_model(self) -> ClusteredModel:
        base = BlockModel(self._need("shares"), self._need("probs"))
        return ClusteredModel(base, self._need("triangle_probs"))

    def fixed_n(self) -> int | None:
        """Population implied by the model itself (grids and products)."""
        if self.kind == "spatial":
            return SpatialGridModel(int(self.params["k"]), float(self.params["rho"])).n
        if self.kind == "kronecker":
            return int(self.params["layer1"]["n"]) * int(self.params["layer2"]["n"])
        return None

    def build(self, n: int | None = None) -> ExpectedMatrix:
        kind = self.kind
        fixed = self.fixed_n()
        if fixed is not None:
            if n is not None and n != fixed:
                raise ModelError(f"kind {kind!r} fixes n={fixed}; got n={n}")
        elif n is None:
            raise ModelError(f"kind {kind!r} needs a population size n")
        if kind in ("er", "sbm"):
            return build_expected_sbm(self.block_model(), n)
        if kind == "weighted":
            return expected_weighted_uniform(self.weighted_model(), n)
        if kind == "clustered":
            return expected_clustered(self.clustered_model(), n)
        if kind == "spatial":
            return build_spatial_grid(SpatialGridModel(int(self.params["k"]), float(self.params["rho"])))
        if kind == "kronecker":
            layers = []
            for name in ("layer1", "layer2"):
                layer = dict(self.params[name])
                ln = int(layer.pop("n"))
                layers.append(ModelSpec.from_mapping(layer).build(ln))
            return build_kronecker(MulticharacteristicModel(*layers))
        if kind == "split":
            return build_counterexample_split(n)
        return build_counterexample_star(n)

    def sample(self, n: int | None, seed: int) -> RealizedNetwork:
        if self.kind == "spatial":
            raise ModelError("spatial grids are deterministic; sampling them is not supported")
        if self.kind == "weighted":
            return sample_weighted_uniform(self.weighted_model(), n, seed)
        if self.kind == "clustered":
            return sample_clustered(self.clustered_model(), n, seed)
        return sample_bernoulli(self.build(n), seed)


# ---------------------------------------------------------------------------
# edge-list files

def write_edges_csv(path, net: RealizedNetwork) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("i,j,weight\n")
        for i, j, w in zip(net.rows.tolist(), net.cols.tolist(), net.weights.tolist()):
            fh.write(f"{i},{j},{w:.17g}\n")


def read_edges_csv(path, n: int | None = None) -> RealizedNetwork:
    """Read an ``i,j,weight`` file; ``n`` defaults to one past the largest index."""
    import csv

    rows, cols, weights = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["i", "j", "weight"]:
            raise ModelError(f"{path}: expected header i,j,weight, got {header}")
        for lineno, rec in enumerate(reader, start=2):
            try:
                i, j, w = int(rec[0]), int(rec[1]), float(rec[2])
            except (ValueError, IndexError) as exc:
                raise ModelError(f"{path}:{lineno}: malformed edge {rec}") from exc
            if i > j:
                i, j = j, i
            rows.append(i)
            cols.append(j)
            weights.append(w)
    if n is None:
        n = (max(cols) + 1) if cols else 0
    return RealizedNetwork(n, rows, cols, weights)
