"""Print the nested-circle table for a model description.

Usage:
    python scripts/weyl_probe.py                      # free Jacobi half line
    python scripts/weyl_probe.py --model model.json --z-im 0.5 --n-max 120
"""

import argparse
import json

from ocs.greens import limit_point_diagnostic, weyl_radius
from ocs.model import jacobi_operator, operator_from_description


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", help="JSON model description file")
    ap.add_argument("--z-re", type=float, default=0.0)
    ap.add_argument("--z-im", type=float, default=1.0)
    ap.add_argument("--n-max", type=int, default=200)
    args = ap.parse_args()

    if args.model:
        with open(args.model) as fh:
            op = operator_from_description(json.load(fh))
    else:
        op = jacobi_operator(v=0.0, a=-1.0)
    z = complex(args.z_re, args.z_im)

    n = 2
    while n <= args.n_max:
        circ = weyl_radius(op, z, n)
        print(f"n = {n:4d}  radius = {circ.radius:.6e}  "
              f"center = {circ.center:.6f}")
        n *= 2
    diag = limit_point_diagnostic(op, z, args.n_max)
    print(f"verdict: {diag.verdict} (final radius {diag.radii[-1]:.3e})")


if __name__ == "__main__":
    main()
