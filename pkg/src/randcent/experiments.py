"""Seeded studies: Monte Carlo convergence, counterexamples, statics and inequality sweeps.

Each study takes a :class:`StudyConfig` and returns a :class:`StudyResult`
holding per-size summaries, per-replication rows, auxiliary tables and a list
of named checks. Replication ``r`` at population ``n`` draws from
``replication_seed(seed, n, r)``, so results do not depend on thread count or
execution order.
"""
from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import inequality, spectral, statics
from .netmodel import (
    BlockModel,
    ModelSpec,
    MulticharacteristicModel,
    SpatialGridModel,
    build_kronecker,
    build_spatial_grid,
    group_sizes,
    replication_seed,
    sample_bernoulli,
)
from .spectral import NonConvergence

STUDIES = ("convergence", "rate", "counterexamples", "spatial", "kronecker", "dominance", "statics")

# more than this share of failed solves fails the study
MAX_NONCONVERGED = 0.01


def default_threads() -> int:
    env = os.environ.get("RANDCENT_THREADS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


@dataclass
class StudyConfig:
    study: str
    model: dict[str, Any] | None = None
    n: list[int] = field(default_factory=list)
    reps: int = 1
    seed: int = 0
    phi: float | str | None = None
    bands: dict[str, dict[str, list[float]]] = field(default_factory=dict)
    params: dict[str, Any] = field(default_factory=dict)
    threads: int | None = None

    def __post_init__(self):
        if self.study not in STUDIES:
            raise ValueError(f"study must be one of {', '.join(STUDIES)}; got {self.study!r}")
        if self.reps < 1:
            raise ValueError(f"reps must be >= 1, got {self.reps}")
        if any(int(v) < 2 for v in self.n):
            raise ValueError(f"every n must be >= 2, got {self.n}")
        if self.seed < 0:
            raise ValueError(f"seed must be nonnegative, got {self.seed}")

    def model_spec(self) -> ModelSpec:
        if self.model is None:
            raise ValueError(f"study {self.study!r} needs a [model] table")
        return ModelSpec.from_mapping(self.model)

    def to_dict(self) -> dict[str, Any]:
        return {
            "study": self.study,
            "model": self.model,
            "n": list(self.n),
            "reps": self.reps,
            "seed": self.seed,
            "phi": self.phi,
            "bands": self.bands,
            "params": self.params,
        }


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


@dataclass
class Table:
    header: list[str]
    rows: list[list[Any]] = field(default_factory=list)


@dataclass
class StudyResult:
    study: str
    config: dict[str, Any]
    summary: dict[str, dict[str, dict[str, float]]] = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)
    rows: list[tuple[int, int, str, float]] = field(default_factory=list)
    tables: dict[str, Table] = field(default_factory=dict)
    nonconverged: dict[str, int] = field(default_factory=dict)
    wall_clock: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def stat(self, n, quantity: str, key: str = "mean") -> float:
        return self.summary[str(n)][quantity][key]

    def add_check(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append(Check(name, bool(passed), detail))

    def to_dict(self) -> dict[str, Any]:
        return {
            "study": self.study,
            "passed": self.passed,
            "config": self.config,
            "summary": self.summary,
            "checks": [c.to_dict() for c in self.checks],
            "nonconverged": self.nonconverged,
            "wall_clock": self.wall_clock,
        }

    def write(self, out_dir) -> list[Path]:
        """JSON summary, per-replication CSV and one CSV per table."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = [out / f"{self.study}.json", out / f"{self.study}.csv"]
        paths[0].write_text(json.dumps(self.to_dict(), indent=2, default=_json_default) + "\n")
        with open(paths[1], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["study", "n", "rep", "quantity", "value"])
            for n, rep, q, v in self.rows:
                w.writerow([self.study, n, rep, q, _fmt(v)])
        for name, table in self.tables.items():
            p = out / f"{self.study}_{name}.csv"
            with open(p, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(table.header)
                for row in table.rows:
                    w.writerow([_fmt(v) for v in row])
            paths.append(p)
        return paths


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return v


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o)}")


def summarize(values) -> dict[str, float]:
    arr = np.asarray(values, dtype=np.float64)
    count = int(arr.size)
    if count == 0:
        return {"mean": math.nan, "se": math.nan, "min": math.nan, "max": math.nan, "count": 0}
    se = float(arr.std(ddof=1) / math.sqrt(count)) if count > 1 else 0.0
    return {"mean": float(arr.mean()), "se": se, "min": float(arr.min()), "max": float(arr.max()), "count": count}


def run_replications(fn: Callable[[int], dict], reps: int, threads: int | None = None) -> list[dict | None]:
    """Evaluate ``fn(r)`` for r < reps; failed solves come back as ``None``.

    Results are returned in replication order whatever the thread count.
    """
    def safe(r):
        try:
            return fn(r)
        except NonConvergence:
            return None

    threads = default_threads() if threads is None else threads
    if threads <= 1 or reps == 1:
        return [safe(r) for r in range(reps)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(safe, range(reps)))


def _collect(result: StudyResult, n_key, outcomes: list[dict | None], label: str | None = None) -> dict[str, list[float]]:
    """Record rows and summaries for one population size (summary key ``label`` or n)."""
    by_q: dict[str, list[float]] = {}
    failed = 0
    for r, out in enumerate(outcomes):
        if out is None:
            failed += 1
            continue
        for q, v in out.items():
            by_q.setdefault(q, []).append(float(v))
            result.rows.append((n_key, r, q, float(v)))
    key = label or str(n_key)
    result.summary[key] = {q: summarize(vs) for q, vs in by_q.items()}
    result.nonconverged[key] = failed
    return by_q


def _check_nonconverged(result: StudyResult, reps: int) -> None:
    for key, failed in result.nonconverged.items():
        result.add_check(
            f"nonconverged[n={key}]",
            failed <= MAX_NONCONVERGED * reps,
            f"{failed} of {reps} replications failed to converge",
        )


def _check_bands(result: StudyResult, bands: dict) -> None:
    for quantity, per_n in bands.items():
        for n_key, (lo, hi) in per_n.items():
            stats = result.summary.get(str(n_key), {}).get(quantity)
            if stats is None:
                result.add_check(f"band[{quantity},n={n_key}]", False, "quantity not computed")
                continue
            m = stats["mean"]
            result.add_check(f"band[{quantity},n={n_key}]", lo <= m <= hi, f"mean {m:.6g} vs [{lo}, {hi}]")


# ---------------------------------------------------------------------------
# Monte Carlo convergence to the mean field

def run_convergence_study(cfg: StudyConfig) -> StudyResult:
    t0 = time.perf_counter()
    spec = cfg.model_spec()
    res = StudyResult("convergence", cfg.to_dict())
    for n in cfg.n:
        exp = spec.build(n)
        top = spectral.top_eigenpair(exp)
        phi = spectral.resolve_phi(cfg.phi or spectral.HALF_INVERSE_LAMBDA1, lambda1=top.value)
        c_bar = spectral.katz_bonacich(exp, phi, top=top).scores

        def rep(r, n=n, phi=phi, exp=exp, top=top, c_bar=c_bar):
            net = spec.sample(n, replication_seed(cfg.seed, n, r))
            v = spectral.top_eigenpair(net)
            c = spectral.katz_bonacich(net, phi, top=v)
            return {
                "eig_distance": float(np.linalg.norm(v.vector - top.vector)),
                "katz_distance": float(np.linalg.norm(c.scores - c_bar)),
                "eig_residual": v.residual,
                "katz_residual": c.residual,
            }

        _collect(res, n, run_replications(rep, cfg.reps, cfg.threads))
    _check_nonconverged(res, cfg.reps)
    _check_bands(res, cfg.bands)
    res.wall_clock = time.perf_counter() - t0
    return res


def run_rate_study(cfg: StudyConfig) -> StudyResult:
    """Realized eigenvector distance against the bound 8 f(n) / delta."""
    t0 = time.perf_counter()
    spec = cfg.model_spec()
    res = StudyResult("rate", cfg.to_dict())
    bounds = Table(["n", "lambda1", "gap_ratio", "f", "bound"])
    for n in cfg.n:
        exp = spec.build(n)
        diag = spectral.diagnostics(exp)
        f = 1.0 / diag.large_eig_ratio
        bound = 8 * f / diag.gap_ratio
        bounds.rows.append([n, diag.lambda1, diag.gap_ratio, f, bound])
        v_bar = spectral.top_eigenpair(exp).vector

        def rep(r, n=n, v_bar=v_bar, bound=bound):
            net = spec.sample(n, replication_seed(cfg.seed, n, r))
            d = float(np.linalg.norm(spectral.top_eigenpair(net).vector - v_bar))
            return {"eig_distance": d, "violation": float(d >= bound)}

        by_q = _collect(res, n, run_replications(rep, cfg.reps, cfg.threads))
        viol = by_q.get("violation", [])
        frac = float(np.mean(viol)) if viol else math.nan
        res.add_check(f"bound[n={n}]", viol and frac == 0.0, f"violation fraction {frac:.3g}, bound {bound:.6g}")
    res.tables["bounds"] = bounds
    b = [row[-1] for row in bounds.rows]
    res.add_check("bound_decreasing", all(x > y for x, y in zip(b, b[1:])), f"bounds {b}")
    _check_nonconverged(res, cfg.reps)
    res.wall_clock = time.perf_counter() - t0
    return res


def _support_class(v: np.ndarray, half: int, thresh: float) -> int:
    if np.max(np.abs(v[half:])) < thresh:
        return 0
    if np.max(np.abs(v[:half])) < thresh:
        return 1
    return 2


def run_counterexample_studies(cfg: StudyConfig) -> StudyResult:
    """Near-disconnected halves, and a hub whose Katz scores do not concentrate."""
    t0 = time.perf_counter()
    p = cfg.params
    res = StudyResult("counterexamples", cfg.to_dict())
    thresh = float(p.get("support_threshold", 1e-8))

    # split halves
    n1 = int(p.get("split_n", 400))
    reps1 = int(p.get("split_reps", cfg.reps))
    far = float(p.get("split_distance", 0.7))
    split = ModelSpec.from_mapping({"kind": "split"})
    exp = split.build(n1)
    v_bar = spectral.top_eigenpair(exp).vector
    half = n1 // 2

    def rep_split(r):
        net = split.sample(n1, replication_seed(cfg.seed, n1, r))
        v = spectral.top_eigenpair(net).vector
        crossing = bool(np.any((net.rows < half) & (net.cols >= half)))
        return {
            "support_class": float(_support_class(v, half, thresh)),
            "eig_distance": float(np.linalg.norm(v - v_bar)),
            "disconnected": float(not crossing),
        }

    by_q = _collect(res, n1, run_replications(rep_split, reps1, cfg.threads), f"split:{n1}")
    classes = np.array(by_q.get("support_class", []))
    lo, hi = p.get("split_class_band", [0.40, 0.60])
    done = max(classes.size, 1)
    for k in (0, 1):
        freq = float(np.sum(classes == k)) / done
        res.add_check(f"split_class_{k}_frequency", lo <= freq <= hi, f"{freq:.3f} vs [{lo}, {hi}]")
    dist = np.array(by_q.get("eig_distance", []))
    disc = np.array(by_q.get("disconnected", [])) > 0
    share = float(np.mean(dist[disc] >= far)) if disc.any() else math.nan
    min_share = float(p.get("split_far_share", 0.95))
    res.add_check(
        "split_far_when_disconnected",
        disc.any() and share >= min_share,
        f"{share:.3f} of {int(disc.sum())} disconnected replications at distance >= {far}",
    )

    # hub
    star = ModelSpec.from_mapping({"kind": "star"})
    star_n = [int(v) for v in p.get("star_n", [200, 400, 800])]
    reps2 = int(p.get("star_reps", 50))
    phi0 = float(p.get("star_phi0", 0.9))
    table = Table(["n", "phi", "lambda1", "large_eig_ratio", "mean_normalized_distance"])
    means = []
    for n in star_n:
        exp = star.build(n)
        phi = phi0 / math.sqrt(2 * n)
        diag = spectral.diagnostics(exp)
        c_bar = spectral.katz_bonacich(exp, phi).scores

        def rep_star(r, n=n, phi=phi, c_bar=c_bar):
            net = star.sample(n, replication_seed(cfg.seed, n, r))
            c = spectral.katz_bonacich(net, phi).scores
            return {"katz_distance_normalized": float(np.linalg.norm(c - c_bar) / math.sqrt(n))}

        by_q = _collect(res, n, run_replications(rep_star, reps2, cfg.threads), f"star:{n}")
        m = float(np.mean(by_q["katz_distance_normalized"])) if by_q else math.nan
        means.append(m)
        table.rows.append([n, phi, diag.lambda1, diag.large_eig_ratio, m])
    res.tables["star"] = table
    ratio = means[-1] / means[0] if means and means[0] > 0 else math.nan
    min_ratio = float(p.get("star_min_ratio", 0.5))
    res.add_check("star_nonvanishing", ratio >= min_ratio, f"n={star_n[-1]} over n={star_n[0]}: {ratio:.3f}")
    ratios = [row[3] for row in table.rows]
    res.add_check("star_large_eig_ratio_decreasing", all(a > b for a, b in zip(ratios, ratios[1:])), f"{ratios}")
    for key, failed in res.nonconverged.items():
        total = reps1 if key.startswith("split") else reps2
        res.add_check(f"nonconverged[{key}]", failed <= MAX_NONCONVERGED * total, f"{failed} of {total}")
    res.wall_clock = time.perf_counter() - t0
    return res


# ---------------------------------------------------------------------------
# spatial grid

def large_eig_ratio(matrix) -> float:
    """lambda1 / sqrt(max row sum * log n), without the second eigenvalue."""
    n = matrix.n
    lam1 = spectral.top_eigenpair(matrix).value
    delta = float(matrix.entries.sum(axis=1).max())
    return lam1 / math.sqrt(delta * math.log(n))


def run_spatial_ranking_study(cfg: StudyConfig) -> StudyResult:
    t0 = time.perf_counter()
    p = cfg.params
    res = StudyResult("spatial", cfg.to_dict())
    k = int(p.get("k", 20))
    if k < 6:
        raise ValueError(f"spatial study needs k >= 6, got {k}")
    phi_factor = float(p.get("phi_factor", 0.1))
    edge = (0, k // 2)
    inner = (3, 3)
    rhos = sorted({float(r) for r in p.get("rho_values", [0.5, 0.95])}
                  | {float(r) for r in p.get("edge_wins", [])}
                  | {float(r) for r in p.get("inner_wins", [])})
    table = Table(["rho", "phi", "c_edge", "c_inner", "edge_more_central", "max_min_ratio"])
    outcome = {}
    for rho in rhos:
        model = SpatialGridModel(k, rho)
        exp = build_spatial_grid(model)
        top = spectral.top_eigenpair(exp)
        phi = phi_factor / top.value
        c = spectral.katz_bonacich(exp, phi, top=top).scores
        ce, ci = c[model.index(*edge)], c[model.index(*inner)]
        outcome[rho] = (ce, ci, c.max() / c.min())
        table.rows.append([rho, phi, ce, ci, int(ce > ci), c.max() / c.min()])
        res.rows.append((model.n, 0, f"c_edge[rho={rho:g}]", float(ce)))
        res.rows.append((model.n, 0, f"c_inner[rho={rho:g}]", float(ci)))
    res.tables["ranking"] = table
    for rho in p.get("edge_wins", []):
        ce, ci, _ = outcome[float(rho)]
        res.add_check(f"edge_beats_inner[rho={rho}]", ce > ci, f"c{edge}={ce:.10g}, c{inner}={ci:.10g}")
    for rho in p.get("inner_wins", []):
        ce, ci, _ = outcome[float(rho)]
        res.add_check(f"inner_beats_edge[rho={rho}]", ci > ce, f"c{edge}={ce:.10g}, c{inner}={ci:.10g}")

    flat_rho = p.get("flat_rho")
    if flat_rho is not None:
        flat_tol = float(p.get("flat_tol", 1e-3))
        model = SpatialGridModel(k, float(flat_rho))
        exp = build_spatial_grid(model)
        top = spectral.top_eigenpair(exp)
        c = spectral.katz_bonacich(exp, phi_factor / top.value, top=top).scores
        spread = c.max() / c.min()
        res.add_check(f"flat[rho={flat_rho}]", abs(spread - 1) <= flat_tol, f"max/min = {spread:.10g}")

    growth = Table(["rho", "k", "n", "large_eig_ratio"])
    ks = [int(v) for v in p.get("growth_k", [5, 10, 20, 40])]
    for rho in p.get("growth_rho", [0.5, 1.0]):
        vals = []
        for kk in ks:
            val = large_eig_ratio(build_spatial_grid(SpatialGridModel(kk, float(rho))))
            vals.append(val)
            growth.rows.append([float(rho), kk, (kk + 1) ** 2, val])
        res.add_check(
            f"large_eig_ratio_increasing[rho={rho}]",
            all(a < b for a, b in zip(vals, vals[1:])),
            ", ".join(f"{v:.4g}" for v in vals),
        )
    res.tables["growth"] = growth
    res.wall_clock = time.perf_counter() - t0
    return res


# ---------------------------------------------------------------------------
# two-characteristic products

def run_kronecker_study(cfg: StudyConfig) -> StudyResult:
    t0 = time.perf_counter()
    p = cfg.params
    res = StudyResult("kronecker", cfg.to_dict())
    layer1 = ModelSpec.from_mapping(p["layer1"])
    layer2 = ModelSpec.from_mapping(p["layer2"])

    n1, n2 = (int(v) for v in p.get("mean_field_sizes", [30, 40]))
    e1, e2 = layer1.build(n1), layer2.build(n2)
    prod = build_kronecker(MulticharacteristicModel(e1, e2))
    v_prod = spectral.top_eigenpair(prod).vector
    v_layers = np.kron(spectral.top_eigenpair(e1).vector, spectral.top_eigenpair(e2).vector)
    err = float(np.linalg.norm(v_prod - v_layers))
    tol = float(p.get("identity_tol", 1e-8))
    res.add_check("mean_field_identity", err <= tol, f"error {err:.3e} vs {tol:g}")
    res.rows.append((n1 * n2, 0, "identity_error", err))

    table = Table(["n1", "n2", "median_distance", "mean_distance"])
    medians = []
    for idx, (a, b) in enumerate(p.get("sampled_sizes", [[20, 20], [40, 40]])):
        a, b = int(a), int(b)
        ea, eb = layer1.build(a), layer2.build(b)
        ep = build_kronecker(MulticharacteristicModel(ea, eb))

        def rep(r, a=a, b=b, ea=ea, eb=eb, ep=ep):
            base = replication_seed(cfg.seed, a * b, r)
            A1 = sample_bernoulli(ea, replication_seed(base, 1))
            A2 = sample_bernoulli(eb, replication_seed(base, 2))
            A = sample_bernoulli(ep, replication_seed(base, 3))
            v = spectral.top_eigenpair(A).vector
            v12 = np.kron(spectral.top_eigenpair(A1).vector, spectral.top_eigenpair(A2).vector)
            return {"distance": float(np.linalg.norm(v - v12))}

        by_q = _collect(res, a * b, run_replications(rep, cfg.reps, cfg.threads))
        d = by_q.get("distance", [math.nan])
        medians.append(float(np.median(d)))
        table.rows.append([a, b, medians[-1], float(np.mean(d))])
    res.tables["sampled"] = table
    res.add_check(
        "sampled_median_decreasing",
        all(x > y for x, y in zip(medians, medians[1:])),
        ", ".join(f"{m:.4g}" for m in medians),
    )
    _check_nonconverged(res, cfg.reps)
    res.wall_clock = time.perf_counter() - t0
    return res


# ---------------------------------------------------------------------------
# Lorenz dominance

def mean_field_centrality(s1: float, p_s: float, p_d: float, n: int, phi: float | None) -> np.ndarray:
    model = BlockModel.two_probability([s1, 1 - s1], p_s, p_d)
    return spectral.expand_groups(spectral.block_centrality(model, n, phi), model, n)


def _not_dominated(verdict: inequality.Dominance) -> bool:
    return verdict in (inequality.Dominance.X_DOMINATES, inequality.Dominance.EQUAL)


def run_dominance_sweep(cfg: StudyConfig) -> StudyResult:
    """Less homophily, and a smaller majority below the threshold, dominate."""
    t0 = time.perf_counter()
    p = cfg.params
    res = StudyResult("dominance", cfg.to_dict())
    ps_vals = [float(v) for v in p.get("p_s", [0.4, 0.5])]
    pd_vals = [float(v) for v in p.get("p_d", [0.05, 0.1])]
    s_vals = [float(v) for v in p.get("s1", [0.75])]
    table = Table(["kind", "a_p_s", "a_p_d", "a_s1", "b_p_s", "b_p_d", "b_s1", "verdict", "violation"])
    for sweep in p.get("sweeps", [{"kind": "katz", "n": 100, "phi": 0.02}]):
        kind = sweep["kind"]
        n = int(sweep["n"])
        phi = float(sweep["phi"]) if kind == "katz" else None
        cache: dict[tuple, np.ndarray] = {}

        def cent(s1, ps, pd):
            key = (s1, ps, pd)
            if key not in cache:
                cache[key] = mean_field_centrality(s1, ps, pd, n, phi)
            return cache[key]

        points = [(ps, pd, s) for ps in ps_vals for pd in pd_vals for s in s_vals if ps > pd]
        violations = 0
        compared = 0
        # less homophilous point first
        for a in points:
            for b in points:
                if a == b or a[2] != b[2] or not (b[0] >= a[0] and b[1] <= a[1]):
                    continue
                verdict = inequality.lorenz_compare(cent(a[2], a[0], a[1]), cent(b[2], b[0], b[1]))
                bad = not _not_dominated(verdict)
                violations += bad
                compared += 1
                table.rows.append([kind, *a, *b, verdict.value, int(bad)])
        if kind == "eig":
            # smaller majority first, both at or below the threshold
            for ps in ps_vals:
                for pd in pd_vals:
                    if ps <= pd:
                        continue
                    cap = statics.group_size_threshold(ps, pd)
                    eligible = [s for s in s_vals if s <= cap]
                    for s, s2 in zip(eligible, eligible[1:]):
                        verdict = inequality.lorenz_compare(cent(s, ps, pd), cent(s2, ps, pd))
                        bad = not _not_dominated(verdict)
                        violations += bad
                        compared += 1
                        table.rows.append([kind, ps, pd, s, ps, pd, s2, verdict.value, int(bad)])
        res.add_check(f"sweep[{kind},n={n}]", violations == 0, f"{violations} violations in {compared} comparisons")
        res.rows.append((n, 0, f"violations[{kind}]", float(violations)))

    for spec in p.get("pairs", []):
        kind = spec["kind"]
        n = int(spec["n"])
        phi = float(spec["phi"]) if kind == "katz" else None
        a = mean_field_centrality(*(float(v) for v in spec["a"]), n, phi)
        b = mean_field_centrality(*(float(v) for v in spec["b"]), n, phi)
        verdict = inequality.lorenz_compare(a, b)
        expect = spec["expect"]
        res.add_check(f"pair[{spec.get('name', kind)}]", verdict.value == expect, f"got {verdict.value}, want {expect}")
        sa, sb = spec["a"], spec["b"]
        table.rows.append([kind, sa[1], sa[2], sa[0], sb[1], sb[2], sb[0], verdict.value, int(verdict.value != expect)])
    res.tables["comparisons"] = table
    res.wall_clock = time.perf_counter() - t0
    return res


# ---------------------------------------------------------------------------
# comparative statics

def _strictly_ordered(values, key) -> bool:
    order = np.argsort(key, kind="stable")
    v = np.asarray(values)[order]
    return bool(np.all(np.diff(v) > 0))


def _random_block_model(rng: np.random.Generator, m: int) -> BlockModel:
    while True:
        shares = rng.dirichlet(np.full(m, 4.0))
        if shares.min() >= 0.1:
            break
    shares[-1] = 1.0 - shares[:-1].sum()
    probs = rng.uniform(0.05, 0.9, (m, m))
    probs = np.triu(probs) + np.triu(probs, 1).T
    return BlockModel(shares, probs)


def run_statics_regime_study(cfg: StudyConfig) -> StudyResult:
    t0 = time.perf_counter()
    p = cfg.params
    res = StudyResult("statics", cfg.to_dict())
    model = BlockModel.two_probability(
        [float(v) for v in p.get("shares", [0.5, 0.3, 0.2])], float(p.get("p_s", 0.5)), float(p.get("p_d", 0.1))
    )
    n = int(cfg.n[0]) if cfg.n else 300
    lam1 = spectral.block_lambda1(model, n)
    sizes = group_sizes(model.shares, n)

    # phi scan of the between-group derivative
    grid = statics.phi_grid(lam1, int(p.get("grid_points", 50)))
    scan = Table(["phi", "group", "derivative"])
    ascending_at = []
    for phi in grid:
        d = statics.homophily_derivatives(model, n, phi, "p_d")
        for g, val in enumerate(d):
            scan.rows.append([phi, g, val])
        ascending_at.append(_strictly_ordered(d, -sizes))
    res.tables["phi_scan"] = scan
    flips = [float(grid[i]) for i in range(1, len(grid)) if ascending_at[i] != ascending_at[i - 1]]
    res.rows.append((n, 0, "crossings", float(len(flips))))

    lo_f, hi_f = float(p.get("phi_low_factor", 0.01)), float(p.get("phi_high_factor", 0.99))
    d_lo = statics.homophily_derivatives(model, n, lo_f / lam1, "p_d")
    d_hi = statics.homophily_derivatives(model, n, hi_f / lam1, "p_d")
    res.add_check(
        "p_d_smaller_groups_gain_more_at_low_phi",
        _strictly_ordered(d_lo, -sizes),
        f"phi={lo_f}/lambda1: {np.array2string(d_lo, precision=6)}",
    )
    res.add_check(
        "p_d_larger_groups_gain_more_at_high_phi",
        _strictly_ordered(d_hi, sizes),
        f"phi={hi_f}/lambda1: {np.array2string(d_hi, precision=6)}",
    )

    # within-group derivative ordered by size at every grid point
    same_ok = all(_strictly_ordered(statics.homophily_derivatives(model, n, phi, "p_s"), sizes) for phi in grid)
    res.add_check("p_s_larger_groups_gain_more", same_ok, f"checked at {len(grid)} values of phi")

    # three-group crossing
    exam = statics.exam_model(float(p.get("exam_delta", 0.01)), float(p.get("exam_eps", 1e-6)))
    exam_n = int(p.get("exam_n", 300))
    exam_lam = spectral.block_lambda1(exam, exam_n)
    exam_scan = Table(["phi", "group1", "group2"])
    crossing = None
    for f in np.linspace(float(p.get("exam_lo", 0.9)), float(p.get("exam_hi", 0.9999)), int(p.get("exam_points", 200))):
        phi = f / exam_lam
        g1 = statics.katz_derivative_closed(exam, exam_n, 0, (1, 2), phi)
        g2 = statics.katz_derivative_closed(exam, exam_n, 1, (1, 2), phi)
        exam_scan.rows.append([phi, g1, g2])
        if crossing is None and g1 > g2:
            crossing = phi
    res.tables["exam_scan"] = exam_scan
    detail = "no crossing" if crossing is None else f"first at phi*lambda1 = {crossing * exam_lam:.6f}"
    res.add_check("exam_crossing", crossing is not None, detail)

    # derivative routes agree
    rng = np.random.default_rng(cfg.seed)
    instances = int(p.get("agreement_instances", 20))
    tol = float(p.get("agreement_tol", 1e-5))
    worst_off, worst_diag = 0.0, 0.0
    for t in range(instances):
        m = (2, 3, 4)[t % 3]
        bm = _random_block_model(rng, m)
        nn = int(rng.integers(50, 400))
        phi = float(rng.uniform(0.1, 0.9)) / spectral.block_lambda1(bm, nn)
        target = int(rng.integers(m))
        i, j = sorted(rng.choice(m, size=2, replace=False).tolist())
        rep = statics.derivative_report(bm, nn, target, (i, j), phi)
        worst_off = max(worst_off, rep.agreement)
        res.rows.append((nn, t, "agreement_offdiag", rep.agreement))
        k = int(rng.integers(m))
        rep_d = statics.derivative_report(bm, nn, target, (k, k), phi)
        worst_diag = max(worst_diag, rep_d.agreement)
        res.rows.append((nn, t, "agreement_diag", rep_d.agreement))
    res.add_check("derivative_agreement_offdiag", worst_off <= tol, f"worst relative gap {worst_off:.3e} over {instances}")
    res.add_check("derivative_agreement_diag", worst_diag <= tol, f"worst relative gap {worst_diag:.3e} over {instances}")
    res.wall_clock = time.perf_counter() - t0
    return res


RUNNERS = {
    "convergence": run_convergence_study,
    "rate": run_rate_study,
    "counterexamples": run_counterexample_studies,
    "spatial": run_spatial_ranking_study,
    "kronecker": run_kronecker_study,
    "dominance": run_dominance_sweep,
    "statics": run_statics_regime_study,
}


def run_study(cfg: StudyConfig) -> StudyResult:
    return RUNNERS[cfg.study](cfg)
