"""Empirical increment radii of the simulator against the exact sphere masses."""
import argparse

import numpy as np

from padic_heat.diffusion import build_increment_law, empirical_vs_exact, sample_radii, two_step_check
from padic_heat.heat_kernel import KernelParams


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=int, default=2)
    ap.add_argument("--n", type=int, default=1)
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--a", type=float, default=1.0)
    ap.add_argument("--t", type=float, default=0.5)
    ap.add_argument("--draws", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--two-step", action="store_true", help="also compare X_2 - X_0 with the law at 2t")
    args = ap.parse_args()
    pr = KernelParams(args.p, args.n, args.alpha, args.a)
    law = build_increment_law(pr, args.t)
    r = sample_radii(law, args.draws, args.seed)
    counts = np.bincount(r - law.m_lo, minlength=len(law.pmf))
    print(f"radius window p^{law.m_lo}..p^{law.m_hi}, clipped mass {law.clipped_mass:.3e}")
    print(f"{'m':>4} {'exact':>12} {'empirical':>12}")
    for m, q, c in zip(law.support, law.pmf, counts):
        if q * args.draws >= 0.5 or c:
            print(f"{m:4d} {q:12.6f} {c / args.draws:12.6f}")
    cmp = empirical_vs_exact(r, law)
    print(f"chi-square {cmp.chi2:.2f} on {cmp.dof} dof, p = {cmp.p_value:.3f}, TV = {cmp.tv:.4f}")
    if args.two_step:
        two = two_step_check(pr, args.t, args.draws, args.seed + 1)
        print(f"two steps vs law at 2t: p = {two.p_value:.3f}, TV = {two.tv:.4f}")


if __name__ == "__main__":
    main()
