"""Command-line entry point ``mmsb``.

Exit codes: 0 success, 2 configuration error, 3 estimation failure,
4 lower-bound claim failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, MMSBError, ParameterError
from .estimators import spoc, spocpp
from .experiments import ExperimentConfig, default_bbar, run
from .io import read_graph, write_bundle, write_graph, write_membership
from .model import CommunityMatrix, ProbabilityOperator, make_membership, sample_graph

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXIT_OK, EXIT_CONFIG, EXIT_ESTIMATION, EXIT_CLAIM = 0, 2, 3, 4

KIND_OF = {
    "sweep-n": "n-sweep",
    "sweep-rho": "rho-sweep",
    "compare": "compare",
    "stat-dist": "stat-dist",
    "lowerbound-check": "lowerbound",
}


def _reg(value: str):
    if value in ("zero", "spectral"):
        return value
    try:
        v = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError("expected zero, spectral or a number") from None
    if v < 0:
        raise argparse.ArgumentTypeError("regularization must be nonnegative")
    return v


def _floats(value: str):
    try:
        return [float(x) for x in value.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated numbers") from None


def _estimator_options(p):
    p.add_argument("--k", type=int, help="number of communities (estimated when omitted)")
    p.add_argument("--threshold", type=float, help="selection threshold (default 2 ln n)")
    p.add_argument("--reg", type=_reg, help="covariance regularization: zero, spectral or a number")
    p.add_argument("--clip-theta", action="store_true", default=None, help="project membership rows onto the simplex")
    rank = p.add_mutually_exclusive_group()
    rank.add_argument("--signed-rank", dest="signed_rank", action="store_true", default=None, help="rank estimate on signed eigenvalues (default)")
    rank.add_argument("--abs-rank", dest="signed_rank", action="store_false", help="rank estimate on eigenvalue magnitudes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmsb", description="Spectral estimation for mixed-membership block models.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample memberships and a graph")
    g.add_argument("--n", type=int, default=1000)
    g.add_argument("--k", type=int, default=3)
    g.add_argument("--pure-fraction", type=float, default=0.09)
    g.add_argument("--alpha", type=_floats, help="Dirichlet parameters, comma-separated")
    g.add_argument("--rho", type=float, default=1.0)
    g.add_argument("--bbar", type=_floats, help="row-major K*K connection matrix")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", type=Path, default=Path("."))

    e = sub.add_parser("estimate", help="estimate B and Theta from a graph file")
    e.add_argument("graph", type=Path)
    e.add_argument("--algorithm", choices=("spoc++", "spoc"), default="spoc++")
    e.add_argument("--out", type=Path, help="output prefix for CSV files and the JSON sidecar")
    _estimator_options(e)

    for name, kind in KIND_OF.items():
        s = sub.add_parser(name, help=f"run a {kind} experiment")
        s.add_argument("--config", type=Path, help="TOML file; command-line flags take precedence")
        s.add_argument("--seed", type=int)
        s.add_argument("--jobs", type=int)
        s.add_argument("--out", type=Path, help="output directory")
        s.add_argument("--grid", type=_floats, help="comma-separated grid values")
        s.add_argument("--reps", type=int)
        s.add_argument("--n", type=int)
        s.add_argument("--rho", type=float)
        if kind != "lowerbound":
            s.add_argument("--no-plot", dest="plot", action="store_false", default=None)
            s.add_argument("--noiseless", action="store_true", default=None, help="feed the exact probability matrix")
            s.add_argument("--resample-theta", action="store_true", default=None)
            s.add_argument("--estimate-k", dest="known_k", action="store_false", default=None, help="estimate K per graph instead of passing --k")
            _estimator_options(s)
        else:
            s.add_argument("--k", type=int)
            s.add_argument("--delta", type=float)
    return parser


def load_toml(path: Path) -> dict:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return data.get("experiment", data)


def config_from_args(args) -> ExperimentConfig:
    kind = KIND_OF[args.command]
    data = load_toml(args.config) if args.config else {}
    if data.get("kind", kind) != kind:
        raise ConfigError(f"config kind {data['kind']!r} does not match command {args.command}")
    data["kind"] = kind
    flags = {
        "seed": args.seed,
        "jobs": args.jobs,
        "output_dir": str(args.out) if args.out else None,
        "grid": args.grid,
        "reps": args.reps,
        "n": args.n,
        "rho": args.rho,
        "K": args.k,
    }
    if kind == "lowerbound":
        flags["delta"] = args.delta
    else:
        flags.update(
            threshold=args.threshold,
            a=args.reg,
            clip_theta=args.clip_theta,
            signed_rank=args.signed_rank,
            plot=args.plot,
            noiseless=args.noiseless,
            resample_theta=args.resample_theta,
        )
        flags["known_k"] = args.known_k
    data.update({k: v for k, v in flags.items() if v is not None})
    return ExperimentConfig.from_dict(data)


def _generate(args) -> int:
    K = args.k
    bbar = default_bbar(K) if args.bbar is None else np.asarray(args.bbar).reshape(K, K)
    theta = make_membership(args.n, K, args.pure_fraction, args.alpha or [1.0] * K, args.seed)
    p = ProbabilityOperator(theta, CommunityMatrix(bbar, args.rho))
    A = sample_graph(p, args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    write_graph(args.out / "graph.txt", A)
    write_membership(args.out / "membership.csv", theta)
    np.savetxt(args.out / "b.csv", p.b.b, delimiter=",", header=",".join(f"b_{k + 1}" for k in range(K)), comments="")
    print(json.dumps({"n": A.n, "edges": A.edge_count, "graph_hash": A.digest(), "out": str(args.out)}))
    return EXIT_OK


def _estimate(args) -> int:
    A = read_graph(args.graph)
    try:
        if args.algorithm == "spoc":
            if args.k is None:
                raise ConfigError("spoc needs --k")
            est = spoc(A, args.k, clip_theta=bool(args.clip_theta))
        else:
            est = spocpp(
                A,
                t_n=args.threshold,
                a=args.reg,
                K=args.k,
                clip_theta=bool(args.clip_theta),
                signed_rank=args.signed_rank is not False,
            )
    except ConfigError:
        raise
    except MMSBError as exc:
        print(f"estimation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    if args.out:
        meta = write_bundle(args.out, est)
    else:
        meta = {"algorithm": est.algorithm, "k_hat": est.k_hat, "b_hat": est.b_hat.tolist()}
    print(json.dumps(meta))
    return EXIT_OK


def _experiment(args) -> int:
    cfg = config_from_args(args)
    result = run(cfg)
    if cfg.kind == "lowerbound":
        for entry in result.summary["claims"]:
            print(f"{entry['status'].upper():4s}  {entry['claim']}: lhs={entry['lhs']} rhs={entry['rhs']}")
        return EXIT_OK if result.summary["passed"] else EXIT_CLAIM
    if cfg.kind == "stat-dist":
        print(json.dumps(result.summary["grid"]))
    else:
        for alg, series in result.summary["algorithms"].items():
            slope = series["slope"]
            text = "null" if slope is None else f"{slope:.4f} +/- {series['slope_stderr']:.4f}"
            print(f"{alg}: slope {text}")
        for entry in result.summary.get("comparison", []):
            print(f"n={entry['n']}: spoc++ wins {entry['wins_spocpp']}/{entry['pairs']}")
    if result.paths:
        print(json.dumps(result.paths))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "generate":
            return _generate(args)
        if args.command == "estimate":
            return _estimate(args)
        return _experiment(args)
    except (ConfigError, ParameterError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MMSBError as exc:
        print(f"estimation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION


if __name__ == "__main__":
    sys.exit(main())
