"""Print Z(x, t) on spheres for a few times, with the three evaluation forms side by side."""
import argparse

import numpy as np

from padic_heat.errors import AccuracyError
from padic_heat.heat_kernel import KernelParams, z_series1, z_series2, z_tent


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=int, default=2)
    ap.add_argument("--n", type=int, default=1)
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--a", type=float, default=1.0)
    ap.add_argument("--times", type=float, nargs="+", default=[0.01, 0.1, 1.0, 10.0])
    ap.add_argument("--m-range", type=int, nargs=2, default=(-6, 6))
    args = ap.parse_args()
    pr = KernelParams(args.p, args.n, args.alpha, args.a)
    ms = np.arange(args.m_range[0], args.m_range[1] + 1)
    for t in args.times:
        print(f"t = {t:g}   Z(0, t) = {z_tent(None, t, pr):.12e}")
        print(f"{'m':>4} {'tent':>20} {'series1':>20} {'power series':>20}")
        tent = z_tent(ms, t, pr)
        s1 = z_series1(ms, t, pr)
        for m, a, b in zip(ms, tent, s1):
            try:
                c = f"{z_series2(int(m), t, pr):20.12e}"
            except AccuracyError:
                c = f"{'(not certified)':>20}"
            print(f"{m:4d} {a:20.12e} {b:20.12e} {c}")
        print()


if __name__ == "__main__":
    main()
