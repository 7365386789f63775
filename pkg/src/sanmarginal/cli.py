"""Command line interface.

Automata are numbered from 1 on the command line and in all output files.
Exit codes: 0 success, 2 invalid input or model, 3 solver did not converge.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import experiments as ex
from .errors import InvalidConfig, InvalidModel, InvalidParams, InvalidPermutation, SanMarginalError
from .formats.ht import effective_rank, ht_sum, max_rank
from .formats.tree import canonical_tree
from .san import MhnParams, from_mhn, load_model, mhn_gamma, validate_model
from .solver import SolverConfig, low_rank_uniformization

EXIT_OK, EXIT_INVALID, EXIT_NOT_CONVERGED = 0, 2, 3


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x]


def _blocks(text: str) -> list:
    return [x if x in ("half", "d/2") else int(x) for x in text.split(",") if x]


def parse_tree(text: str, d: int):
    """``canonical`` or ``perm:1,5,2,6,...`` (1-based leaf order)."""
    if text == "canonical":
        return canonical_tree(d)
    if text.startswith("perm:"):
        order = [int(x) - 1 for x in text[5:].split(",") if x]
        return canonical_tree(d, order)
    raise InvalidPermutation(f"unknown tree {text!r}; use 'canonical' or 'perm:<list>'")


def _emit(text: str, out):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _add_common(p, *, d_list=False, eps_list=False, tol_list=False, samples=True):
    p.add_argument("--d", type=_ints if d_list else int, default=None, help="number of automata" + (" (comma list)" if d_list else ""))
    p.add_argument("--block-size", type=_blocks if d_list else str, default=None, help="block size b (integer or 'half')")
    p.add_argument("--tol", type=_floats if tol_list else float, default=[1e-4] if tol_list else 1e-4)
    p.add_argument("--eps", type=_floats if eps_list else float, default=[1e-8] if eps_list else 1e-8)
    if samples:
        p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sanmarginal", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="low-rank marginal distribution of one model")
    p.add_argument("--model", help="model file (.json or MHN .csv); otherwise sampled from --d/--block-size/--seed")
    _add_common(p, samples=False)
    p.add_argument("--tree", default="canonical")
    p.add_argument("--max-iter", type=int, default=5000)

    p = sub.add_parser("validate", help="check a model file")
    p.add_argument("--model", required=True)

    p = sub.add_parser("sv-study", help="mean singular values of the dense solution per tree vertex")
    _add_common(p)
    p.add_argument("--tree", default="canonical")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("rank-study", help="final ranks of the low-rank solution")
    _add_common(p, d_list=True)
    p.add_argument("--max-iter", type=int, default=5000)
    p.add_argument("--timing", action="store_true", help="fill wall_ms (output is then not reproducible)")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("trunc-study", help="ranks over a grid of tolerances and truncation errors")
    _add_common(p, eps_list=True, tol_list=True)
    p.add_argument("--max-iter", type=int, default=5000)
    p.add_argument("--patience", type=int, default=50)
    p.add_argument("--timing", action="store_true")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("conv-study", help="residual per iteration")
    _add_common(p, d_list=True)
    p.add_argument("--max-iter", type=int, default=5000)
    p.add_argument("--jobs", type=int, default=1)
    return parser


def _require(args, *names):
    missing = [n for n in names if getattr(args, n.replace("-", "_")) is None]
    if missing:
        raise InvalidConfig("missing required option(s): " + ", ".join("--" + n for n in missing))


def cmd_solve(args) -> int:
    if args.model:
        model = load_model(args.model)
        gamma = None
    else:
        _require(args, "d", "block-size")
        b = ex.resolve_block_size(args.d, args.block_size)
        params = ex.sample_block_parameters(ex.BlockSamplerConfig(args.d, b, args.seed, 1))[0]
        model = from_mhn(params)
        gamma = mhn_gamma(params)
    problems = validate_model(model)
    if problems:
        for line in problems:
            print(f"invalid model: {line}", file=sys.stderr)
        return EXIT_INVALID
    tree = parse_tree(args.tree, model.d)
    cfg = SolverConfig(gamma=gamma, tol=args.tol, eps_rel=args.eps, max_iter=args.max_iter)
    p, report = low_rank_uniformization(model, cfg, tree)
    summary = {
        "d": model.d,
        "gamma": report.gamma,
        "iterations": report.iterations,
        "residual": report.final_residual,
        "converged": report.converged,
        "r_max": max_rank(p),
        "r_eff": effective_rank(p),
        "mass": ht_sum(p),
    }
    for key, value in summary.items():
        print(f"{key}: {value}")
    if args.out:
        if args.format == "json":
            _emit(json.dumps(summary, indent=2) + "\n", args.out)
        else:
            buf, w = ex._writer("solve")
            w.writerow(list(summary))
            w.writerow([ex._fmt(v) for v in summary.values()])
            _emit(buf.getvalue(), args.out)
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def cmd_validate(args) -> int:
    try:
        model = load_model(args.model)
    except (InvalidModel, InvalidParams) as exc:
        print(f"invalid model: {exc}", file=sys.stderr)
        return EXIT_INVALID
    problems = validate_model(model)
    if problems:
        for line in problems:
            print(f"invalid model: {line}")
        return EXIT_INVALID
    print(f"ok: {model.d} automata, {model.num_states} states")
    return EXIT_OK


def cmd_sv_study(args) -> int:
    _require(args, "d", "block-size")
    tree = parse_tree(args.tree, args.d)
    result = ex.run_sv_study(args.d, args.block_size, tree, args.seed, args.samples, n_jobs=args.jobs)
    _emit(ex.to_json(result) if args.format == "json" else ex.sv_study_csv(result), args.out)
    return EXIT_OK


def cmd_rank_study(args) -> int:
    _require(args, "d", "block-size")
    result = ex.run_rank_study(
        args.d, args.block_size, args.tol, args.eps, args.seed, args.samples,
        max_iter=args.max_iter, timing=args.timing, n_jobs=args.jobs,
    )
    _emit(ex.to_json(result) if args.format == "json" else ex.rank_study_csv(result), args.out)
    return EXIT_OK


def cmd_trunc_study(args) -> int:
    _require(args, "d", "block-size")
    result = ex.run_truncation_study(
        args.d, args.block_size, args.tol, args.eps, args.seed, args.samples,
        max_iter=args.max_iter, patience=args.patience, timing=args.timing, n_jobs=args.jobs,
    )
    _emit(ex.to_json(result) if args.format == "json" else ex.trunc_study_csv(result), args.out)
    return EXIT_OK


def cmd_conv_study(args) -> int:
    _require(args, "d", "block-size")
    if len(args.block_size) != 1:
        raise InvalidConfig("conv-study takes a single block size")
    result = ex.run_convergence_study(
        args.d, args.block_size[0], args.tol, args.eps, args.seed, args.samples,
        max_iter=args.max_iter, n_jobs=args.jobs,
    )
    _emit(ex.to_json(result) if args.format == "json" else ex.conv_study_csv(result), args.out)
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "validate": cmd_validate,
    "sv-study": cmd_sv_study,
    "rank-study": cmd_rank_study,
    "trunc-study": cmd_trunc_study,
    "conv-study": cmd_conv_study,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (SanMarginalError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
