"""Shared test utilities: dense block-matrix oracles and instance generators.

The dense Kronecker expansion lives here (and only here) as an oracle for
the factored solves; the library itself never materializes it.
"""

import numpy as np

import groupkernels as gk
from groupkernels.admissibility import sample_centers
from groupkernels.blocklinalg import BlockVector, block_norms


def random_spd(n, rng, eig_range=(0.5, 2.0)):
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    eigs = rng.uniform(*eig_range, size=n)
    return q @ np.diag(eigs) @ q.T


def random_coupling(n, rng):
    return gk.TaskCoupling.from_matrix(random_spd(n, rng))


def dense_operator_gram(system):
    """Dense (mn, mn) expansion of the factored Gram, oracle only."""
    return np.kron(system.G, system.coupling.A)


def dense_solve_blocks(system, y_blocks):
    big = dense_operator_gram(system)
    sol = np.linalg.solve(big, y_blocks.reshape(-1))
    return sol.reshape(y_blocks.shape)


def column_norm_sampled(blocks, p, rng, trials=200):
    """Sampled sup over unit c of sum_i ||blocks[i] @ c||_p for an
    (m, n, n) stack of column blocks."""
    n = blocks.shape[2]
    cs = rng.standard_normal((trials, n))
    cs = np.vstack([cs, np.eye(n), np.ones((1, n)), np.sign(rng.standard_normal((8, n)))])
    norms = block_norms(cs, p)
    cs = cs[norms > 0] / norms[norms > 0, None]
    best = 0.0
    for c in cs:
        applied = blocks @ c
        best = max(best, float(block_norms(applied, p).sum()))
    return best


ADMISSIBLE_SPECS = [
    ("tfamily t=0", gk.tfamily(0.0)),
    ("tfamily t=0.5", gk.tfamily(0.5)),
    ("tfamily t=1", gk.tfamily(1.0)),
    ("wendland", gk.wendland()),
    ("exponential", gk.exponential((-2.0, 2.0))),
    ("combination", gk.combination(1.0, 1.0)),
]


def random_kernel(spec, rng, n_max=3, p_choices=(1.0, 2.0)):
    n = int(rng.integers(1, n_max + 1))
    if rng.random() < 0.5 or n == 1:
        coupling = gk.TaskCoupling.identity(n)
    else:
        coupling = random_coupling(n, rng)
    p = float(rng.choice(p_choices))
    return gk.OperatorKernel(scalar=spec, coupling=coupling, p=p)


def random_sites(kernel, m, rng):
    lo, hi = kernel.scalar.domain
    return sample_centers(lo, hi, m, rng)


def random_block_vector(m, n, p, rng, scale=1.0):
    return BlockVector(scale * rng.standard_normal((m, n)), p)
