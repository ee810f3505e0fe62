"""plotkit command line: regret and runtime figures from benchmark CSVs."""

import argparse
import sys

from .figures import FigureSpec, plot_regret, plot_runtime


def build_parser():
    parser = argparse.ArgumentParser(
        prog="plotkit",
        description="Render regret/runtime figures from mnlbandit benchmark CSVs",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("regret", "mean cumulative regret with a +/- 1 std band"),
        ("runtime", "rolling-mean per-round runtime"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--csv", nargs="+", required=True, help="harness rows CSV(s)")
        p.add_argument("--out", required=True, help="output directory for PNGs")
        p.add_argument("--window", type=int, default=50, help="runtime smoothing window")
        p.add_argument("--no-band", action="store_true", help="disable the std band")
        p.add_argument(
            "--policy",
            action="append",
            default=None,
            help="restrict to a policy (repeatable)",
        )
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    spec = FigureSpec(
        csv_paths=tuple(args.csv),
        out_dir=args.out,
        window=args.window,
        band=not args.no_band,
        policies=tuple(args.policy) if args.policy else (),
    )
    render = plot_regret if args.command == "regret" else plot_runtime
    for path in render(spec):
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
