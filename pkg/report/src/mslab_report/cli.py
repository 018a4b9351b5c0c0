"""mslab-plot: scaling plots and cone heatmaps from mslab output files."""

from __future__ import annotations

import argparse
import sys


def main(argv=None):
    parser = argparse.ArgumentParser(prog="mslab-plot")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scaling", help="log-log sweep plot with refitted slopes")
    p.add_argument("--csv", required=True)
    p.add_argument("--out", required=True, help="SVG (default) or PNG path")
    p.add_argument("--group-by", default="experiment_id",
                   help="comma separated grouping columns")
    p.add_argument("--expected", type=float, default=None)

    p = sub.add_parser("cones", help="spectral heatmap with cone overlay")
    p.add_argument("--json", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mu", type=float, default=0.2)
    p.add_argument("--lam", type=float, default=None)
    p.add_argument("--axis", type=int, default=1)

    args = parser.parse_args(argv)
    from mslab_report import plots

    if args.command == "scaling":
        slopes = plots.render_scaling_plot(
            args.csv, args.out, group_by=tuple(args.group_by.split(",")),
            expected=args.expected,
        )
        for k, v in slopes.items():
            print(f"{k}: slope {v:.6f}")
    else:
        verts = plots.render_cone_heatmap(
            args.json, args.out, mu=args.mu, lam=args.lam, axis=args.axis
        )
        print("cone vertices:", verts.tolist())
    return 0


if __name__ == "__main__":
    sys.exit(main())
