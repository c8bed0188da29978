"""Locate the elliptic energy windows of the antitree limit transfers.

Usage:
    python scripts/elliptic_windows.py --sigma 0.5
    python scripts/elliptic_windows.py --uniform -0.3 0.3 --family hat
"""

import argparse

import numpy as np

from ocs.anderson import (
    DisorderSpec,
    hat_pattern_spec,
    interval_A,
    interval_S,
)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sigma", type=float, help="two-point disorder at +-sigma")
    ap.add_argument("--uniform", type=float, nargs=2, metavar=("LO", "HI"))
    ap.add_argument("--family", choices=("stretched", "hat"), default="stretched")
    ap.add_argument("--lo", type=float, default=-3.0)
    ap.add_argument("--hi", type=float, default=3.0)
    ap.add_argument("--points", type=int, default=601)
    args = ap.parse_args()

    if args.uniform:
        nu = DisorderSpec.uniform(*args.uniform)
    elif args.sigma is not None:
        nu = DisorderSpec.two_point(args.sigma)
    else:
        nu = DisorderSpec.point(0.0)

    grid = np.linspace(args.lo, args.hi, args.points)
    if args.family == "stretched":
        report = interval_S(nu, grid)
    else:
        report = interval_A(hat_pattern_spec(nu), grid)

    print(f"{args.family} family, disorder {nu.kind}: "
          f"{len(report.intervals)} elliptic interval(s)")
    for lo, hi in report.intervals:
        print(f"  ({lo:+.6f}, {hi:+.6f})")
    if report.excluded_points:
        pts = ", ".join(f"{p:+.6f}" for p in report.excluded_points)
        print(f"  excluded interior points: {pts}")


if __name__ == "__main__":
    main()
