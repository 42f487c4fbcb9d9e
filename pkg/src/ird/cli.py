"""Batch command-line front end.

Subcommands: generate | analyze | predict | sweep | version.  Exit codes:
0 success, 2 configuration or input-format error, 3 model-validity error,
4 output file already exists.  `--threads` (default: the IRD_THREADS
environment variable) only affects scheduling, never output bytes.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .config import load_config, parse_generation, parse_predict, parse_sweep
from .digraph import (
    EdgeListFormatError,
    arcs_per_vertex,
    joint_degree_table,
    largest_scc,
    read_edge_list,
    write_edge_list,
)
from .generate import GenConfig, generate, resolve_mode
from .kernels import ModelValidityError, Rank1Kernel, cell_weights, finitary_approximation
from .theory import (
    NumericalError,
    build_bp,
    rank1_threshold,
    survival_probabilities,
)
from .typespace import ConfigurationError, sample_types

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MODEL = 3
EXIT_OUTPUT_EXISTS = 4


class OutputExistsError(RuntimeError):
    pass


def _fresh(path: str) -> str:
    if path and os.path.exists(path):
        raise OutputExistsError(f"refusing to overwrite existing output: {path}")
    return path


def _emit(report: dict, output: str | None) -> None:
    text = json.dumps(report, indent=2, sort_keys=True)
    if output:
        with open(_fresh(output), "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_generate(args) -> int:
    model, n, seed, mode = parse_generation(load_config(args.config))
    cfg = GenConfig(model=model, n=n, seed=seed, mode=mode, threads=args.threads)
    out = _fresh(args.output)
    g = generate(cfg, sample_types(model.measure, n, seed))
    write_edge_list(g, out, header={
        "seed": seed,
        "model": model.label,
        "mode": resolve_mode(cfg),
    })
    return EXIT_OK


def cmd_analyze(args) -> int:
    g, _header = read_edge_list(args.input)
    degrees_path = args.degrees or args.input + ".degrees.csv"
    table = joint_degree_table(g)
    table.to_csv(_fresh(degrees_path))
    size, _members = largest_scc(g)
    report = {
        "n": g.n,
        "arcs": g.arc_count,
        "arcs_per_vertex": arcs_per_vertex(g),
        "largest_scc": size,
        "degree_table": degrees_path,
    }
    _emit(report, args.output)
    return EXIT_OK


def cmd_predict(args) -> int:
    model, options = parse_predict(load_config(args.config))
    fk = finitary_approximation(model.kernel, model.measure, options["resolution"])
    mu = cell_weights(model, fk.partition)
    bp = build_bp(fk, mu)
    sol = survival_probabilities(bp, tol=options["tol"], max_iter=options["max_iter"])
    report = {
        "spectral_radius_plus": sol.spectral_radius_plus,
        "spectral_radius_minus": sol.spectral_radius_minus,
        "rho_plus": sol.rho_plus.tolist(),
        "rho_minus": sol.rho_minus.tolist(),
        "rho_kappa": sol.rho_kappa,
        "mean_arcs": bp.mean_arcs,
        "critical": sol.critical,
    }
    if isinstance(model.kernel, Rank1Kernel):
        report["rank1_threshold"] = rank1_threshold(model.measure, model.kernel)
    _emit(report, args.output)
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .experiments import run_sweep

    spec = parse_sweep(load_config(args.config), threads=args.threads)
    out = _fresh(args.output)
    sidecar = args.sidecar or args.output + ".meta.json"
    _fresh(sidecar)
    result = run_sweep(spec)
    result.to_csv(out)
    result.write_sidecar(sidecar)
    return EXIT_OK


def cmd_version(_args) -> int:
    print(f"ird {__version__}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ird", description="Inhomogeneous random digraph toolkit"
    )
    parser.add_argument(
        "--threads", type=int, default=None,
        help="worker threads (default: IRD_THREADS or single-threaded); "
             "never changes output bytes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample a digraph and write its edge list")
    p.add_argument("--config", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("analyze", help="summary statistics of an edge-list file")
    p.add_argument("--input", required=True)
    p.add_argument("--output", default=None, help="report JSON (default: stdout)")
    p.add_argument("--degrees", default=None, help="degree-table CSV path")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("predict", help="limit-theory predictions for a model")
    p.add_argument("--config", required=True)
    p.add_argument("--output", default=None, help="report JSON (default: stdout)")
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("sweep", help="run a sweep and write its CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--sidecar", default=None, help="metadata JSON (default: <output>.meta.json)")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("version", help="print the package version")
    p.set_defaults(fn=cmd_version)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is None:
        env = os.environ.get("IRD_THREADS")
        if env is not None:
            try:
                args.threads = int(env)
            except ValueError:
                print(f"error: IRD_THREADS must be an integer, got {env!r}", file=sys.stderr)
                return EXIT_CONFIG
    try:
        return args.fn(args)
    except OutputExistsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OUTPUT_EXISTS
    except (ConfigurationError, EdgeListFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ModelValidityError, NumericalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
