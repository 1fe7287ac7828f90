"""Command-line harness.

Exit codes: 0 success, 2 a solve did not converge, 1 error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .experiments import (
    DEFAULT_EPS_SWEEP,
    DEFAULT_LENGTH_SWEEP,
    ExperimentConfig,
    run_single,
    run_sweep_eps,
    run_sweep_length,
    run_two_material,
)

EXIT_OK, EXIT_ERROR, EXIT_NONCONVERGED = 0, 1, 2


def _common(p: argparse.ArgumentParser):
    d = ExperimentConfig()
    g = p.add_argument_group("problem")
    g.add_argument("--gx", type=int, default=d.gx)
    g.add_argument("--gy", type=int, default=d.gy)
    g.add_argument("--h", type=float, default=d.h)
    g.add_argument("--k", type=float, default=d.k, help="uniform conductivity")
    g.add_argument("--split", action="store_true", help="two materials, k1 left / k2 right")
    g.add_argument("--k1", type=float, default=d.k1)
    g.add_argument("--k2", type=float, default=d.k2)
    g.add_argument("--source-f", type=float, default=d.source_f)
    g = p.add_argument_group("box algorithm")
    g.add_argument("--eps-box", type=float, default=d.eps_box)
    g.add_argument("--box-length", type=float, default=d.box_length)
    g.add_argument("--max-box-iters", type=int, default=d.max_box_iters)
    g.add_argument("--no-cache", action="store_true")
    g.add_argument("--backend", choices=("exact", "sa"), default=d.backend)
    g.add_argument("--seed", type=int, default=d.seed)
    g.add_argument("--samples", type=int, default=d.samples)
    g.add_argument("--sweeps", type=int, default=d.sweeps)
    g = p.add_argument_group("solver / output")
    g.add_argument("--cg-tol", type=float, default=d.cg_tol)
    g.add_argument("--max-cg-iters", type=int, default=d.max_cg_iters)
    g.add_argument("--out", default="results")
    g.add_argument("--export-k", action="store_true")
    g.add_argument("--export-m", action="store_true")
    g.add_argument("-v", "--verbose", action="store_true")


def _config(args) -> ExperimentConfig:
    return ExperimentConfig(
        gx=args.gx, gy=args.gy, h=args.h, k=args.k, split=args.split, k1=args.k1, k2=args.k2,
        source_f=args.source_f, eps_box=args.eps_box, box_length=args.box_length,
        max_box_iters=args.max_box_iters, cg_tol=args.cg_tol, max_cg_iters=args.max_cg_iters,
        backend=args.backend, seed=args.seed, samples=args.samples, sweeps=args.sweeps,
        use_cache=not args.no_cache, out=args.out, export_k=args.export_k, export_m=args.export_m,
    )


def _line(r) -> str:
    pcg_txt = f"{r.pcg_iterations}" if r.pcg_converged else f"not converged ({r.pcg_iterations})"
    sp = f"{r.speedup:.2f}" if r.speedup is not None else "-"
    return (
        f"eps_box={r.config['eps_box']:g} L0={r.config['box_length']:g}  "
        f"CG={r.cg_iterations}  Q-PCG={pcg_txt}  speedup={sp}  "
        f"families={r.spai['unique_families']} box_iters={r.spai['per_family_iters']} "
        f"capped={r.spai['hit_cap_families']}"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qspai", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="single CG vs Q-PCG comparison")
    _common(p)

    p = sub.add_parser("sweep-eps", help="box tolerance sweep")
    _common(p)
    p.add_argument("--eps-list", type=float, nargs="+", default=list(DEFAULT_EPS_SWEEP))

    p = sub.add_parser("sweep-length", help="initial box length sweep")
    _common(p)
    p.add_argument("--length-list", type=float, nargs="+", default=list(DEFAULT_LENGTH_SWEEP))

    p = sub.add_parser("two-material", help="vertical two-material split")
    _common(p)
    p.set_defaults(k2=10.0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    try:
        cfg = _config(args)
        if args.command == "run":
            reports = [run_single(cfg)]
        elif args.command == "sweep-eps":
            reports = run_sweep_eps(cfg, args.eps_list)
        elif args.command == "sweep-length":
            reports = run_sweep_length(cfg, args.length_list)
        else:
            reports = [run_two_material(cfg, args.k1, args.k2)]
    except Exception as exc:  # noqa: BLE001 - surfaced as exit code 1
        logging.getLogger("qspai").error("%s: %s", type(exc).__name__, exc)
        return EXIT_ERROR
    for r in reports:
        print(_line(r))
    if args.verbose:
        print(json.dumps([r.to_dict() for r in reports], indent=2))
    # sweeps report non-convergence per run; only single runs signal it by exit code
    if len(reports) == 1 and not reports[0].converged:
        return EXIT_NONCONVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
