"""CONV(a) of h(x, y) = -cos x - cos y over [-a, a]^2, next to the 1-D reduction.

    python3 scripts/reproduce_hcos.py --amax 20 --steps 80 > hcos.csv
"""
import argparse
import csv
import math
import sys

import numpy as np

from convexity.field import builtin
from convexity.quadrature import Square, global_convexity_index


def reduction(a, n=200001):
    # separable field: CONV(a) = int_0^a cos+ / int_0^a |cos|, by trapezoid
    c = np.cos(np.linspace(0.0, a, n))

    def trap(y):
        return np.sum(y[1:] + y[:-1])

    return trap(np.maximum(c, 0.0)) / trap(np.abs(c))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--amax", type=float, default=20.0)
    ap.add_argument("--steps", type=int, default=40)
    ap.add_argument("--grid", type=int, default=201)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)

    f = builtin("h_cos")
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["a", "conv", "reduction", "abs_diff"])
    for k in range(1, args.steps + 1):
        a = args.amax * k / args.steps
        v = global_convexity_index(f, Square((0.0, 0.0), a).rect(), args.grid, workers=args.threads).value
        r = reduction(a)
        out.writerow([f"{a:.6g}", f"{v:.10f}", f"{r:.10f}", f"{abs(v - r):.2e}"])
    print(f"# pi/2 = {math.pi / 2:.6f}: CONV is 1 up to there, then oscillates towards 1/2",
          file=sys.stderr)


if __name__ == "__main__":
    main()
