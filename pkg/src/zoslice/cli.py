"""Command-line benchmark harness.

Subcommands:

* ``zoslice run SPEC``   - execute an experiment (builtin tag, YAML spec
  file, or a previously emitted manifest.json for bit-identical re-runs).
* ``zoslice plot DIR``   - render SVG figures from a report directory.
* ``zoslice verify``     - run the fast property battery.

Exit codes: 0 success, 1 runtime/cell failure or missing reports,
2 invalid spec.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bench import SpecError, load_spec, enumerate_cells, run_experiment
from .engine import default_workers


def _int_list(text):
    return [int(tok) for tok in str(text).replace(",", " ").split()]


def build_parser():
    parser = argparse.ArgumentParser(
        prog="zoslice",
        description="Zeroth-order parallel MCMC benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment sweep")
    run_p.add_argument(
        "spec",
        help="builtin tag (logistic25 | logistic200 | stochvol203 | "
        "gaussian-verify | custom), YAML spec file, or emitted manifest.json",
    )
    run_p.add_argument("--out", help="output directory (default runs/<experiment>)")
    run_p.add_argument("--workers", type=int, default=None, help="round worker count")
    run_p.add_argument("--chunk-size", type=int, default=None, dest="chunk_size",
                       help="evaluations per dispatched task (0 = whole round)")
    run_p.add_argument("--seed", dest="seeds", type=_int_list, default=None,
                       help="comma-separated chain seeds")
    run_p.add_argument("--epsilon", type=float, default=None, help="finite-difference step")
    run_p.add_argument("--t", "--iterations", dest="iterations", type=int, default=None,
                       help="chain length per cell")
    run_p.add_argument("--kernels", type=lambda s: s.split(","), default=None,
                       help="comma-separated kernel list")
    run_p.add_argument("--m", dest="m", type=_int_list, default=None, help="direction grid")
    run_p.add_argument("--m0", dest="m0", type=_int_list, default=None,
                       help="processor-count grid for the efficiency sweep")
    run_p.add_argument("--leapfrog", type=_int_list, default=None,
                       help="rs-hmc leapfrog grid")
    run_p.add_argument("--law", choices=["canonical", "stiefel"], default=None)
    run_p.add_argument("--paper-scale", action="store_true", default=None,
                       help="use the full 5e4-iteration protocol")
    run_p.add_argument("--save-trajectories", action="store_true", default=None,
                       dest="save_trajectories")
    run_p.add_argument("--dry-run", action="store_true",
                       help="print the resolved plan and exit without running")

    plot_p = sub.add_parser("plot", help="render figures from a report directory")
    plot_p.add_argument("report_dir")
    plot_p.add_argument("--out", help="directory for SVG output (default: report dir)")

    verify_p = sub.add_parser("verify", help="run the fast property battery")
    verify_p.add_argument("--workers", type=int, default=None, help="unused; accepted for symmetry")
    return parser


def cmd_run(args) -> int:
    overrides = {
        "workers": args.workers,
        "seeds": args.seeds,
        "epsilon": args.epsilon,
        "iterations": args.iterations,
        "kernels": args.kernels,
        "m": args.m,
        "m0": args.m0,
        "leapfrog": args.leapfrog,
        "law": args.law,
        "paper_scale": args.paper_scale,
        "save_trajectories": args.save_trajectories,
        "out": args.out,
    }
    if args.chunk_size is not None:
        overrides["chunk_size"] = None if args.chunk_size == 0 else args.chunk_size
    try:
        spec = load_spec(args.spec, overrides)
    except SpecError as exc:
        print(f"invalid spec: {exc}", file=sys.stderr)
        return 2

    outdir = Path(spec.out) if spec.out else Path("runs") / spec.experiment
    if args.dry_run:
        print(f"experiment: {spec.experiment}")
        print(f"output:     {outdir}")
        print(f"iterations: {spec.iterations}  seeds: {spec.seeds}  law: {spec.law}")
        print(f"epsilon:    {spec.epsilon:g}  workers: {spec.workers or default_workers()}"
              f"  chunk: {spec.chunk_size}")
        if spec.experiment == "gaussian-verify":
            print("plan: stationarity + contraction + involution suites")
        else:
            cells = enumerate_cells(spec)
            for cell in cells:
                print(f"  cell kernel={cell['kernel']:<14} m={cell['m']:<4} "
                      f"L={cell['L']:<3} seed={cell['seed']}")
            print(f"plan: {len(cells)} cells")
        return 0

    code, manifest = run_experiment(spec, outdir, progress=lambda msg: print(msg, flush=True))
    if spec.experiment == "gaussian-verify":
        for name, result in manifest["suites"].items():
            print(f"{'PASS' if result['pass'] else 'FAIL'}  {name}")
    else:
        failed = [c for c in manifest["cells"] if c.get("status") != "ok"]
        print(f"wrote {outdir / 'reports.csv'} ({len(manifest['cells'])} cells, "
              f"{len(failed)} failed)")
        for cell in failed:
            print(f"FAILED cell {cell['kernel']} m={cell['m']} L={cell['L']} "
                  f"seed={cell['seed']}: {cell.get('error')}", file=sys.stderr)
    return code


def cmd_plot(args) -> int:
    from .plots import render_report_figures

    try:
        written = render_report_figures(args.report_dir, args.out)
    except (FileNotFoundError, ValueError) as exc:
        print(f"cannot plot: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_verify(args) -> int:
    from .verify import run_battery

    failures = run_battery()
    return 1 if failures else 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    if args.command == "plot":
        return cmd_plot(args)
    return cmd_verify(args)


if __name__ == "__main__":
    sys.exit(main())
