"""Window convolution Z_s * Z_t against Z_{s+t}, for growing windows."""
import argparse

from padic_heat.checks import semigroup_deviation
from padic_heat.heat_kernel import KernelParams


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=int, default=2)
    ap.add_argument("--n", type=int, default=1)
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--a", type=float, default=1.0)
    ap.add_argument("--pairs", type=float, nargs="+", default=[0.1, 0.1, 0.1, 1.0, 1.0, 1.0])
    ap.add_argument("--max-halfwidth", type=int, default=4)
    args = ap.parse_args()
    pr = KernelParams(args.p, args.n, args.alpha, args.a)
    pairs = list(zip(args.pairs[::2], args.pairs[1::2]))
    print(f"{'s':>6} {'t':>6} {'spheres':>10} {'max deviation':>15}")
    for s, t in pairs:
        for w in range(1, args.max_halfwidth + 1):
            dev = semigroup_deviation(pr, s, t, range(-w, w + 1))
            print(f"{s:6g} {t:6g} {f'{-w}..{w}':>10} {dev:15.3e}")


if __name__ == "__main__":
    main()
