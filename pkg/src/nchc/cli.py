"""Command line front end.

    nchc <experiment> --m <int|list> --n <int|list> --sigma2 <real|list>
         --trials <int> --seed <u64> --tol <real> --out <dir>
         [--per-trial] [--workers <int>] [--figures]
    nchc compare --results <dir> --reference <fig3_numeric|...>
         [--rtol <real>] [--atol <real>] [--figures]
    nchc plot --results <dir> --out <dir> [--reference <source>]

Exit codes: 0 success, 1 usage error, 2 comparison failure, 3 runtime
failure. Lists are comma separated (e.g. --sigma2 0.01,1.0,10).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .experiments import EXPERIMENTS, HCIZ_ENSEMBLES, ExperimentConfig, run_experiment
from .reference import REFERENCE_SOURCES, compare_reference

USAGE_ERROR, COMPARE_FAILURE, RUNTIME_FAILURE = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(USAGE_ERROR)


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok]


def _float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok]


def build_parser() -> _Parser:
    parser = _Parser(prog="nchc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--m", type=_int_list, default=[1000], help="antennas M (int or list)")
        p.add_argument("--n", type=_int_list, default=[1000], help="training length N (int or list)")
        p.add_argument("--sigma2", type=_float_list, default=[1.0], help="noise power (real or list)")
        p.add_argument("--trials", type=int, default=100)
        p.add_argument("--seed", type=int, default=0, help="64-bit master seed")
        p.add_argument("--tol", type=float, default=1e-6, help="relative dual-gap tolerance")
        p.add_argument("--max-iter", type=int, default=None)
        p.add_argument("--out", type=str, required=True, help="output directory")
        p.add_argument("--per-trial", action="store_true", help="also dump per-trial rows")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--figures", action="store_true", help="render figures next to the CSV")
        if name == "hciz_verify":
            p.add_argument("--ensemble", choices=HCIZ_ENSEMBLES, default="mp_unit_ratio")
            p.add_argument("--ctheta", type=_float_list, default=[0.1], help="c*theta (real or list)")
            p.add_argument("--samples", type=int, default=20000, help="sphere draws per grid point")

    pc = sub.add_parser("compare", help="score results against a bundled reference table")
    pc.add_argument("--results", type=str, required=True, help="run directory or results.csv")
    pc.add_argument("--reference", choices=REFERENCE_SOURCES, required=True)
    pc.add_argument("--rtol", type=float, default=0.02)
    pc.add_argument("--atol", type=float, default=0.0)
    pc.add_argument("--figures", action="store_true", help="render an overlay figure")
    pc.add_argument("--out", type=str, default=None, help="figure directory (default: results dir)")

    pp = sub.add_parser("plot", help="render figures from a results CSV")
    pp.add_argument("--results", type=str, required=True)
    pp.add_argument("--out", type=str, default=None, help="figure directory (default: results dir)")
    pp.add_argument("--reference", choices=REFERENCE_SOURCES, default=None)

    return parser


def _cmd_experiment(args) -> int:
    config = ExperimentConfig(
        experiment=args.command,
        M=args.m,
        N=args.n,
        sigma2=args.sigma2,
        trials=args.trials,
        master_seed=args.seed,
        tol=args.tol,
        max_iter=args.max_iter,
        out_dir=args.out,
        per_trial=args.per_trial,
        workers=args.workers,
        ensemble=getattr(args, "ensemble", "mp_unit_ratio"),
        ctheta=getattr(args, "ctheta", [0.1]),
        samples=getattr(args, "samples", 20000),
    )
    manifest = run_experiment(config, verbose=True)
    print(f"results: {Path(config.out_dir) / 'results.csv'}")
    print(f"manifest: {manifest.path}")
    if args.figures:
        from .plots import render_results

        for fig in render_results(config.out_dir, config.out_dir):
            print(f"figure: {fig}")
    return 0


def _cmd_compare(args) -> int:
    report = compare_reference(args.results, args.reference, rtol=args.rtol, atol=args.atol)
    print(report.to_text())
    if args.figures:
        from .plots import render_results

        out = args.out or (args.results if Path(args.results).is_dir() else Path(args.results).parent)
        for fig in render_results(args.results, out, reference=args.reference):
            print(f"figure: {fig}")
    return 0 if report.passed else COMPARE_FAILURE


def _cmd_plot(args) -> int:
    from .plots import render_results

    out = args.out or (args.results if Path(args.results).is_dir() else Path(args.results).parent)
    for fig in render_results(args.results, out, reference=args.reference):
        print(f"figure: {fig}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "compare":
            return _cmd_compare(args)
        if args.command == "plot":
            return _cmd_plot(args)
        return _cmd_experiment(args)
    except (ValueError, OSError) as exc:
        print(f"nchc: {exc}", file=sys.stderr)
        return RUNTIME_FAILURE


if __name__ == "__main__":
    sys.exit(main())
