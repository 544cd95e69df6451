"""Closed-form disc distance against the polyline path-minimisation oracle.

Needs scipy (the test extra). Prints the gap per radius band and its
behaviour under segment doubling.

    python3 scripts/oracle_comparison.py --pairs 20
"""
import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
from oracles import polyline_distance  # noqa: E402

from loewnerkit import Domain, kobayashi_distance  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pairs", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    disc = Domain.disc()
    rng = np.random.default_rng(args.seed)
    print(f"{'radius band':<14} {'max |gap|':>11} {'mean gap':>11}")
    for lo, hi in [(0.0, 0.5), (0.5, 0.9), (0.9, 0.99)]:
        r = rng.uniform(lo, hi, (args.pairs, 2))
        th = rng.uniform(0, 2 * np.pi, (args.pairs, 2))
        pts = r * np.exp(1j * th)
        gaps = [polyline_distance(a, b) - float(kobayashi_distance(disc, a, b)) for a, b in pts]
        print(f"[{lo:.2f}, {hi:.2f})   {np.max(np.abs(gaps)):11.3e} {np.mean(gaps):11.3e}")
    a, b = -0.99, 0.99j
    exact = float(kobayashi_distance(disc, a, b))
    print(f"\nsegment doubling for {a} -> {b} (distance {exact:.6f})")
    prev = None
    for n in (32, 64, 128, 256, 512):
        gap = polyline_distance(a, b, n=n) - exact
        print(f"  n={n:<4} gap {gap:.3e}" + (f"  ratio {gap / prev:.3f}" if prev else ""))
        prev = gap


if __name__ == "__main__":
    main()
