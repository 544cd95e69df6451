"""Certify every built-in field on every model domain with both methods.

    python3 scripts/generator_survey.py --pairs 1000 --horizon 50
"""
import argparse
import time

from loewnerkit import Domain, certify_generator_dissipative, certify_generator_flow
from loewnerkit import builtins as B


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pairs", type=int, default=1000)
    ap.add_argument("--horizon", type=float, default=50.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    domains = [Domain.disc(), Domain.ball(2), Domain.polydisc(2)]
    print(f"{'domain':<12} {'field':<20} {'expected':<13} {'dissipative':<13} {'worst Dini':>11} "
          f"{'flow':<13} {'seconds':>8}")
    for domain in domains:
        for name, info in B.FIELDS.items():
            if domain.dim > 1 and info["dims"] == "1":
                continue
            H = B.build_field(name, domain.dim)
            start = time.perf_counter()
            d = certify_generator_dissipative(domain, H, args.pairs, args.seed)
            f = certify_generator_flow(domain, H, args.horizon)
            expected = "Generator" if domain.kind in info["domains"] else "NotGenerator"
            flag = "" if d.verdict == f.verdict == expected else "  <-- disagreement"
            print(f"{domain.kind + str(domain.dim):<12} {name:<20} {expected:<13} {d.verdict:<13} "
                  f"{d.worst_dini:11.3e} {f.verdict:<13} {time.perf_counter() - start:8.2f}{flag}")


if __name__ == "__main__":
    main()
