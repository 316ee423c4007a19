"""Gap between the two hyperbola branches of the upper eigenfunction versus eta (k even).

Usage: python scripts/gap_sweep.py [--k 4] [--etas 5e-4 1e-3 2e-3 4e-3]
Prints one row per eta and the log-log slope of gap against eta (expected near 1/2).
"""
import argparse

from nodalsplit.verify import analyzed, loglog_slope


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--etas", type=float, nargs="+", default=[5e-4, 1e-3, 2e-3, 4e-3])
    args = p.parse_args()
    gaps = []
    print(f"{'eta':>10} {'gap':>12} {'gap/sqrt(eta)':>14} {'domains':>8} {'patch h':>10}")
    for eta in args.etas:
        res = analyzed(args.k, eta, "upper")
        gaps.append(res.gap)
        print(f"{eta:10.3g} {res.gap:12.6g} {res.gap / eta ** 0.5:14.6g} {res.domain_count:8d} "
              f"{res.patch_h or float('nan'):10.3g}")
    print(f"slope d log(gap) / d log(eta) = {loglog_slope(args.etas, gaps):.5f}")


if __name__ == "__main__":
    main()
