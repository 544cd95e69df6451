"""Error ladders for the product formula and Trotter sums.

    python3 scripts/convergence_study.py --t 1 --m 16 32 64 128 256 512 1024
"""
import argparse

import numpy as np

from loewnerkit import Domain, semigroup_map
from loewnerkit import builtins as B
from loewnerkit.flows import euler_family, linear_contraction_family, product_formula, trotter_sum


def ladder(name, ms, errors):
    print(f"\n{name}")
    print(f"{'m':>6} {'sup error':>12} {'ratio':>8}")
    prev = None
    for m, e in zip(ms, errors):
        ratio = f"{e / prev:8.4f}" if prev else " " * 8
        print(f"{m:>6} {e:12.4e} {ratio}")
        prev = e


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t", type=float, default=1.0)
    ap.add_argument("--m", type=int, nargs="+", default=[16, 32, 64, 128, 256, 512, 1024])
    args = ap.parse_args()
    disc = Domain.disc()
    grid = np.concatenate([[0j], 0.5 * np.exp(2j * np.pi * np.arange(6) / 6),
                           0.9 * np.exp(2j * np.pi * (np.arange(6) + 0.5) / 6)])
    t, ms = args.t, args.m

    ref = np.exp(-t) * grid
    errs = [np.max(np.abs(product_formula(disc, linear_contraction_family(), t, m, grid)[:, 0] - ref)) for m in ms]
    ladder("product formula, f_t(z) = (1 - t) z", ms, errs)

    ref = B.tanh_flow(t, grid)
    fam = euler_family(B.tanh_field())
    errs = [np.max(np.abs(product_formula(disc, fam, t, m, grid)[:, 0] - ref)) for m in ms]
    ladder("product formula, Euler steps of 1 - z^2", ms, errs)

    ref = np.exp((-1 + 1j) * t) * grid
    errs = [np.max(np.abs(trotter_sum(disc, B.contraction(), B.rotation(), t, m, grid)[:, 0] - ref)) for m in ms]
    ladder("Trotter, -z and iz (commuting)", ms, errs)

    total = B.cone_combine([B.contraction(), B.tanh_field()], [1.0, 1.0])
    ref = semigroup_map(disc, total, t, grid)
    errs = [np.max(np.abs(trotter_sum(disc, B.contraction(), B.tanh_field(), t, m, grid) - ref)) for m in ms]
    ladder("Trotter, -z and 1 - z^2", ms, errs)


if __name__ == "__main__":
    main()
