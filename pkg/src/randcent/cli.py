"""Command-line entry point.

Exit status: 0 success, 1 a study or agreement assertion failed, 2 usage or
configuration error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import experiments, inequality, spectral, statics
from .config import ConfigError, default_study_config, load_study_config, load_toml, model_from_mapping, study_from_mapping
from .netmodel import ModelError, read_edges_csv, write_edges_csv

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

VERDICT_TOKENS = {
    inequality.Dominance.X_DOMINATES: "DOMINATES",
    inequality.Dominance.Y_DOMINATES: "DOMINATED",
    inequality.Dominance.EQUAL: "EQUAL",
    inequality.Dominance.INCOMPARABLE: "INCOMPARABLE",
}


class UsageError(Exception):
    pass


def _phi_arg(text: str):
    try:
        return float(text)
    except ValueError:
        if text == spectral.HALF_INVERSE_LAMBDA1:
            return text
        raise argparse.ArgumentTypeError(f"--phi must be a number or {spectral.HALF_INVERSE_LAMBDA1!r}") from None


def _say(args, msg: str) -> None:
    if not args.quiet:
        print(msg)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _model_config(path):
    """``(ModelSpec, n, seed, raw)`` from a file with a [model] table."""
    data = load_toml(path)
    if "model" not in data:
        raise ConfigError(f"{path}: missing [model] table")
    spec = model_from_mapping(data["model"], str(path))
    return spec, data.get("n"), data.get("seed", 0), data


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, default=experiments._json_default) + "\n")


# ---------------------------------------------------------------------------
# subcommands

def cmd_generate(args) -> int:
    spec, n, seed, _ = _model_config(args.config)
    n = args.n if args.n is not None else n
    seed = args.seed if args.seed is not None else seed
    if n is None and spec.fixed_n() is None:
        raise ConfigError(f"{args.config}: field 'n' is required (or pass --n)")
    net = spec.sample(n, int(seed))
    out = _out_dir(args)
    write_edges_csv(out / "edges.csv", net)
    _write_json(out / "edges.json", {"model": spec.to_mapping(), "n": net.n, "seed": int(seed), "edges": net.n_edges})
    _say(args, f"wrote {net.n_edges} edges on {net.n} agents to {out / 'edges.csv'}")
    return EXIT_OK


def cmd_centrality(args) -> int:
    if (args.config is None) == (args.edges is None):
        raise UsageError("centrality needs exactly one of --config or --edges")
    if args.edges is not None:
        matrix = read_edges_csv(args.edges, args.n)
        group_of = None
    else:
        spec, n, _, _ = _model_config(args.config)
        n = args.n if args.n is not None else n
        matrix = spec.build(n)
        group_of = matrix.group_of
    top = spectral.top_eigenpair(matrix)
    diag = {"lambda1": top.value, "eig_residual": top.residual}
    if args.edges is None:
        diag.update(spectral.diagnostics(matrix).to_dict())
    if args.kind == "eig":
        scores = top.vector
    else:
        if args.phi is None:
            raise UsageError("--kind katz needs --phi")
        phi = spectral.resolve_phi(args.phi, lambda1=top.value)
        res = spectral.katz_bonacich(matrix, phi, top=top)
        scores = res.scores
        diag.update({"phi": phi, "katz_residual": res.residual, "neumann_terms": res.n_terms})
    out = _out_dir(args)
    spectral.write_centrality_csv(out / "scores.csv", scores, group_of)
    _write_json(out / "diagnostics.json", diag)
    _say(args, f"wrote {len(scores)} {args.kind} scores to {out / 'scores.csv'}")
    return EXIT_OK


def cmd_compare(args) -> int:
    a, _ = spectral.read_centrality_csv(args.scores_a)
    b, _ = spectral.read_centrality_csv(args.scores_b)
    verdict = inequality.lorenz_compare(a, b)
    out = _out_dir(args)
    inequality.lorenz_curve(a).write_csv(out / "lorenz_a.csv")
    inequality.lorenz_curve(b).write_csv(out / "lorenz_b.csv")
    _write_json(out / "compare.json", {
        "verdict": VERDICT_TOKENS[verdict],
        "gini_a": inequality.gini(a),
        "gini_b": inequality.gini(b),
    })
    print(VERDICT_TOKENS[verdict])
    return EXIT_OK


def cmd_derivative(args) -> int:
    spec, n, _, _ = _model_config(args.config)
    n = args.n if args.n is not None else n
    if n is None:
        raise ConfigError(f"{args.config}: field 'n' is required (or pass --n)")
    if spec.kind not in ("sbm", "er"):
        raise ConfigError(f"{args.config}: derivatives need an sbm or er model, got {spec.kind!r}")
    model = spec.block_model()
    if args.phi is None:
        raise UsageError("derivative needs --phi")
    phi = spectral.resolve_phi(args.phi, lambda1=spectral.block_lambda1(model, n))
    i, j = args.pair
    for g in (args.group, i, j):
        if not 0 <= g < model.m:
            raise UsageError(f"group index {g} out of range for {model.m} groups")
    report = statics.derivative_report(model, n, args.group, (i, j), phi)
    out = _out_dir(args)
    _write_json(out / "derivative.json", {**report.to_dict(), "phi": phi, "n": n})
    _say(args, report.to_json())
    return EXIT_OK if report.agreement <= args.tol else EXIT_FAIL


def cmd_study(args) -> int:
    if args.study_id not in experiments.STUDIES:
        raise UsageError(f"unknown study {args.study_id!r}; valid ids: {', '.join(experiments.STUDIES)}")
    cfg = load_study_config(args.config) if args.config else default_study_config(args.study_id)
    if cfg.study != args.study_id:
        raise ConfigError(f"{args.config}: config is for study {cfg.study!r}, not {args.study_id!r}")
    raw = cfg.to_dict()
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.reps is not None:
        raw["reps"] = args.reps
    if args.n is not None:
        raw["n"] = [args.n]
    if args.phi is not None:
        raw["phi"] = args.phi
    if args.k is not None:
        raw["params"] = {**raw["params"], "k": args.k}
    if raw["model"] is None:
        raw.pop("model")
    raw = {k: v for k, v in raw.items() if v is not None}
    if args.threads is not None:
        raw["threads"] = args.threads
    cfg = study_from_mapping(raw, f"<study {args.study_id}>")
    result = experiments.run_study(cfg)
    paths = result.write(args.out)
    for c in result.checks:
        _say(args, f"{'PASS' if c.passed else 'FAIL'}  {c.name}  {c.detail}")
    _say(args, f"{args.study_id}: {'passed' if result.passed else 'FAILED'} in {result.wall_clock:.1f}s; wrote {paths[0]}")
    return EXIT_OK if result.passed else EXIT_FAIL


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=".", help="output directory (created if missing)")
    common.add_argument("--quiet", action="store_true", help="suppress progress messages")

    parser = argparse.ArgumentParser(prog="randcent", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="sample a network to an edge-list CSV")
    p.add_argument("--config", required=True, help="TOML file with a [model] table, n and seed")
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("centrality", parents=[common], help="eigenvector or Katz scores")
    p.add_argument("--config", help="model file: scores of the expected matrix")
    p.add_argument("--edges", help="edge-list CSV: scores of a sampled network")
    p.add_argument("--kind", choices=("eig", "katz"), default="eig")
    p.add_argument("--phi", type=_phi_arg)
    p.add_argument("--n", type=int)
    p.set_defaults(func=cmd_centrality)

    p = sub.add_parser("compare", parents=[common], help="Lorenz comparison of two score files")
    p.add_argument("scores_a")
    p.add_argument("scores_b")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("derivative", parents=[common], help="Katz derivative in one link probability, three ways")
    p.add_argument("--config", required=True, help="TOML file with an sbm [model] table and n")
    p.add_argument("--n", type=int)
    p.add_argument("--phi", type=_phi_arg)
    p.add_argument("--group", type=int, default=0, help="group whose centrality is differentiated")
    p.add_argument("--pair", type=int, nargs=2, default=(0, 1), metavar=("I", "J"))
    p.add_argument("--tol", type=float, default=1e-5, help="largest accepted relative disagreement")
    p.set_defaults(func=cmd_derivative)

    p = sub.add_parser("study", parents=[common], help="run a seeded study")
    p.add_argument("study_id", help=", ".join(experiments.STUDIES))
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--phi", type=_phi_arg)
    p.add_argument("--k", type=int, help="grid side for the spatial study")
    p.add_argument("--threads", type=int, help="worker threads (default: RANDCENT_THREADS or CPU count)")
    p.set_defaults(func=cmd_study)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except spectral.InfeasiblePhi as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, ConfigError, ModelError, inequality.LengthMismatch, inequality.AllZero) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
