#!/usr/bin/env python3
"""Empirical check that the exact site-restricted solve is already minimal.

For each stable kernel family, draws random interpolation problems,
augments the center set with extra sites, and runs grouped basis pursuit
over the enlarged set: the achieved norm must never drop below the exact
solve's norm.  A clustered Gaussian instance shows the contrast: there the
augmented problem finds a strictly cheaper representation.
"""

import argparse
import time

import numpy as np

import groupkernels as gk
from groupkernels.admissibility import sample_centers
from groupkernels.blocklinalg import BlockVector
from groupkernels.solvers import group_basis_pursuit, min_norm_interpolant

FAMILIES = [
    ("tfamily t=0", gk.tfamily(0.0)),
    ("tfamily t=0.5", gk.tfamily(0.5)),
    ("tfamily t=1", gk.tfamily(1.0)),
    ("wendland", gk.wendland()),
    ("exponential", gk.exponential((-2.0, 2.0))),
    ("combination", gk.combination(1.0, 1.0)),
]


def random_instance(spec, rng):
    n = int(rng.integers(1, 4))
    p = float(rng.choice([1.0, 2.0]))
    kernel = gk.OperatorKernel(spec, gk.TaskCoupling.identity(n), p=p)
    lo, hi = spec.domain
    m = int(rng.integers(1, 6))
    extra = int(rng.integers(0, 4))
    sites = sample_centers(lo, hi, m + extra, rng)
    cons = sites[np.sort(rng.choice(m + extra, size=m, replace=False))]
    y = BlockVector(rng.standard_normal((m, n)), p)
    return kernel, sites, cons, y


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--instances", type=int, default=200)
    parser.add_argument("--seed", type=int, default=100)
    args = parser.parse_args()

    print(f"{'kernel':16s} {'worst margin':>14s} {'max iters':>10s} {'time':>7s}")
    for name, spec in FAMILIES:
        rng = np.random.default_rng(args.seed)
        t0 = time.perf_counter()
        worst = np.inf
        max_iters = 0
        for _ in range(args.instances):
            kernel, sites, cons, y = random_instance(spec, rng)
            exact = min_norm_interpolant(kernel, cons, y)
            pursuit = group_basis_pursuit(kernel, sites, cons, y)
            worst = min(worst, pursuit.norm_lp1 - exact.norm_lp1)
            max_iters = max(max_iters, pursuit.meta["iterations"])
        elapsed = time.perf_counter() - t0
        print(f"{name:16s} {worst:14.3e} {max_iters:10d} {elapsed:6.1f}s")

    # unstable reference: two clustered sites plus their midpoint
    gauss = gk.custom(lambda x, y: np.exp(-((x - y) ** 2)), domain=(0.0, 1.0))
    kernel = gk.OperatorKernel(gauss, gk.TaskCoupling.identity(1), p=1)
    cons = np.array([0.45, 0.55])
    y = BlockVector([[1.0], [1.0]], 1)
    exact = min_norm_interpolant(kernel, cons, y)
    pursuit = group_basis_pursuit(kernel, np.array([0.45, 0.55, 0.5]), cons, y)
    print(f"\ngaussian reference: exact norm {exact.norm_lp1:.6f}, "
          f"augmented pursuit norm {pursuit.norm_lp1:.6f} "
          f"(improves by {exact.norm_lp1 - pursuit.norm_lp1:.2e})")


if __name__ == "__main__":
    main()
