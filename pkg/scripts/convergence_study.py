"""Grid convergence of the two branches at fixed eta.

Solves on balanced grids of increasing height and reports the computed eigenvalues,
the difference quotient (value - lambda_22) / eta, and the predicted branch slopes.
"""
import argparse

from nodalsplit.boundary import BoundaryFn
from nodalsplit.hadamard import hadamard_variation
from nodalsplit.rectangle import DomainSpec
from nodalsplit.solver import balanced_grid, solve_branches


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--eta", type=float, default=2e-3)
    p.add_argument("--rows", type=int, nargs="+", default=[64, 128, 256, 384])
    args = p.parse_args()
    phi = BoundaryFn.preset("bump", 1 / 6)
    spec = DomainSpec(args.k, args.eta)
    var = hadamard_variation(phi, args.k)
    lam = spec.lambda22
    print(f"lambda22 = {lam:.12g}; predicted slopes mu' = {var.mu_dot:.6g}, gamma' = {var.gamma_dot:.6g}")
    print(f"{'ny':>5} {'nx':>5} {'mu':>18} {'gamma':>18} {'(mu-l)/eta':>12} {'(gamma-l)/eta':>14} {'split/eta':>10}")
    for ny in args.rows:
        grid = balanced_grid(spec, ny)
        up, lo = solve_branches(spec, phi, grid)
        print(f"{ny:5d} {grid.nx:5d} {up.value:18.12f} {lo.value:18.12f} {(up.value - lam) / args.eta:12.5f} "
              f"{(lo.value - lam) / args.eta:14.5f} {(up.value - lo.value) / args.eta:10.5f}")


if __name__ == "__main__":
    main()
