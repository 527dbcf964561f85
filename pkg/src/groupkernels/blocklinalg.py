"""Block-vector norms, Kronecker-factored Gram systems, operator-column
norms for product kernels, and the 2x2 block inversion identity.

The operator Gram of a product kernel is never materialized densely:
``K[x] = G (x) A`` (Kronecker) is the canonical representation, and all
solves split into an m-by-m scalar solve followed by a per-block
application of ``A^{-1}``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from itertools import product

import numpy as np
import scipy.linalg

from .errors import ShapeError, SingularError
from .kernels import OperatorKernel, TaskCoupling, scalar_values, validate_centers

# relative pivot threshold below which a factorization counts as singular
PIVOT_RTOL = 1e-12


def _lu_factor_quiet(A):
    # LAPACK flags exact zero pivots with a warning; the caller's pivot
    # threshold decides singularity, so silence it here
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        return scipy.linalg.lu_factor(A)


@dataclass(frozen=True)
class BlockVector:
    """m coefficient blocks of dimension n with a group exponent p.

    Stored as an (m, n) array, row i holding block c_i.
    """

    blocks: np.ndarray
    p: float

    def __post_init__(self):
        arr = np.array(self.blocks, dtype=float)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2:
            raise ShapeError(f"blocks must be a 2-d array, got ndim {arr.ndim}")
        arr.setflags(write=False)
        object.__setattr__(self, "blocks", arr)
        p = float(self.p)
        if not p >= 1.0:
            raise ValueError(f"group exponent p must satisfy p >= 1, got {p}")
        object.__setattr__(self, "p", p)

    @property
    def m(self) -> int:
        return self.blocks.shape[0]

    @property
    def n(self) -> int:
        return self.blocks.shape[1]

    @classmethod
    def from_blocks(cls, blocks, p: float) -> "BlockVector":
        rows = [np.atleast_1d(np.asarray(b, dtype=float)) for b in blocks]
        if not rows:
            return cls(np.zeros((0, 0)), p)
        return cls(np.vstack(rows), p)

    @classmethod
    def zeros(cls, m: int, n: int, p: float) -> "BlockVector":
        return cls(np.zeros((m, n)), p)


def block_norms(blocks: np.ndarray, p: float) -> np.ndarray:
    """Per-block l^p norms of an (m, n) array (p = inf is max-abs).

    Blocks are rescaled by their max-abs entry before powering so that
    tiny or huge entries neither underflow nor overflow.
    """
    if blocks.size == 0:
        return np.zeros(blocks.shape[0])
    if math.isinf(p):
        return np.abs(blocks).max(axis=1)
    if p == 1.0:
        return np.abs(blocks).sum(axis=1)
    amax = np.abs(blocks).max(axis=1)
    out = np.zeros_like(amax)
    nz = amax > 0
    if np.any(nz):
        scaled = blocks[nz] / amax[nz, None]
        out[nz] = amax[nz] * np.linalg.norm(scaled, ord=p, axis=1)
    return out


def lp1_norm(c: BlockVector) -> float:
    """Sum over blocks of the l^p block norm; 0.0 for an empty vector."""
    return float(block_norms(c.blocks, c.p).sum())


def matrix_opnorm(A: np.ndarray, p: float) -> float:
    """Induced p -> p operator norm, for p in {1, 2, inf}."""
    A = np.asarray(A, dtype=float)
    if p == 1:
        return float(np.abs(A).sum(axis=0).max())
    if p == 2:
        return float(np.linalg.norm(A, 2))
    if math.isinf(p):
        return float(np.abs(A).sum(axis=1).max())
    raise ValueError(f"induced operator norm implemented for p in {{1, 2, inf}}, got {p}")


def coupling_opnorm(A: np.ndarray, p: float) -> float:
    """Induced p -> q operator norm for conjugate q.

    Exact for p in {1, 2, inf} (p = inf enumerates sign vectors, so it is
    limited to small task counts).  Other exponents get the interpolation
    upper bound between the neighboring exact endpoints, which is all the
    boundedness certificate needs.
    """
    A = np.asarray(A, dtype=float)
    if p == 1:
        return float(np.abs(A).max())
    if p == 2:
        return float(np.linalg.norm(A, 2))
    if math.isinf(p):
        n = A.shape[1]
        if n > 20:
            raise ValueError("p=inf coupling norm limited to n <= 20 tasks")
        best = 0.0
        for signs in product((-1.0, 1.0), repeat=n):
            best = max(best, float(np.abs(A @ np.array(signs)).sum()))
        return best
    n22 = float(np.linalg.norm(A, 2))
    if p < 2.0:
        theta = 2.0 * (1.0 - 1.0 / p)  # 0 at p=1, 1 at p=2
        return float(np.abs(A).max()) ** (1.0 - theta) * n22 ** theta
    theta = 1.0 - 2.0 / p  # 0 at p=2, 1 at p=inf
    # the sum of all |a_ij| bounds the inf->1 endpoint over complex vectors,
    # keeping the interpolated product a genuine upper bound
    return n22 ** (1.0 - theta) * float(np.abs(A).sum()) ** theta


def operator_lp1_norm_product(b) -> float:
    """Column-operator norm sum |b_i| for product kernels.

    The column (b_i * I)_i maps c to blocks b_i * c, so its operator norm
    in the grouped sum-of-block-norms sense is sum |b_i| for every p, and
    the task coupling cancels out entirely.
    """
    return float(np.abs(np.asarray(b, dtype=float)).sum())


def operator_lp1_norm_sampled(blocks: np.ndarray, p: float, trials: int = 1000,
                              seed: int = 0) -> float:
    """Sampled lower bound of the column-operator norm for general blocks.

    blocks is an (m, n, n) stack; the value is the max over random unit
    vectors c of sum_i ||blocks[i] @ c||_p.  No closed form is implemented
    for non-product columns; this bound is the fallback.
    """
    blocks = np.asarray(blocks, dtype=float)
    m, n, _ = blocks.shape
    rng = np.random.default_rng(np.random.SeedSequence((seed, m, n)))
    c = rng.standard_normal((trials, n))
    # include sign-aligned probes, extremal for scalar-multiple blocks
    c = np.vstack([c, np.eye(n), np.ones((1, n))])
    norms = block_norms(c, p)
    c = c[norms > 0] / norms[norms > 0, None]
    applied = np.einsum("ijk,ck->cij", blocks, c)
    if math.isinf(p):
        per_block = np.abs(applied).max(axis=2)
    else:
        per_block = np.linalg.norm(applied, ord=p, axis=2)
    return float(per_block.sum(axis=1).max())


@dataclass(frozen=True)
class GramSystem:
    """Scalar Gram G[i, j] = G(x_i, x_j) with an eager factorization.

    Represents the operator Gram K[x] = G (x) A.  The factorization is a
    Cholesky factor when G is numerically SPD, otherwise a pivoted LU.
    """

    G: np.ndarray
    coupling: TaskCoupling
    kind: str = field(default="cholesky")
    factor: tuple = field(default=(), compare=False, repr=False)

    @property
    def m(self) -> int:
        return self.G.shape[0]


def _factorize(G: np.ndarray):
    """Cholesky first, pivoted LU as fallback; SingularError on tiny pivots."""
    scale = np.abs(G).max() if G.size else 0.0
    if scale == 0.0:
        raise SingularError("Gram matrix is identically zero")
    try:
        c, low = scipy.linalg.cho_factor(G, lower=True)
        return "cholesky", (c, low)
    except scipy.linalg.LinAlgError:
        pass
    lu, piv = _lu_factor_quiet(G)
    if np.abs(np.diag(lu)).min() < PIVOT_RTOL * scale:
        raise SingularError("Gram matrix is numerically singular")
    return "lu", (lu, piv)


def solve_factored(system: GramSystem, rhs: np.ndarray) -> np.ndarray:
    """Solve G @ Z = rhs using the cached factorization."""
    if system.kind == "cholesky":
        return scipy.linalg.cho_solve(system.factor, rhs)
    return scipy.linalg.lu_solve(system.factor, rhs)


def gram_assemble(kernel: OperatorKernel, centers) -> GramSystem:
    """Assemble and factorize the scalar Gram for pairwise-distinct centers."""
    arr = validate_centers(kernel.scalar, centers)
    if arr.size == 0:
        raise ShapeError("at least one center is required")
    G = scalar_values(kernel.scalar, arr[:, None], arr[None, :])
    G.setflags(write=False)
    kind, factor = _factorize(G)
    return GramSystem(G=G, coupling=kernel.coupling, kind=kind, factor=factor)


def _check_blocks(system: GramSystem, y: BlockVector) -> None:
    if y.m != system.m:
        raise ShapeError(f"expected {system.m} blocks, got {y.m}")
    if y.n != system.coupling.n:
        raise ShapeError(f"expected block dimension {system.coupling.n}, got {y.n}")


def gram_solve(system: GramSystem, y: BlockVector) -> BlockVector:
    """Solve (G (x) A) C = Y via the Kronecker split.

    The scalar solve handles all task columns at once and A^{-1} is then
    applied per block; no (mn)-by-(mn) matrix is ever formed.
    """
    _check_blocks(system, y)
    z = solve_factored(system, y.blocks)
    return BlockVector(z @ system.coupling.A_inv, y.p)


def gram_apply(system: GramSystem, c: BlockVector) -> BlockVector:
    """Apply the operator Gram: block i of the result is sum_j G_ij A c_j."""
    _check_blocks(system, c)
    return BlockVector((system.G @ c.blocks) @ system.coupling.A, c.p)


def _solve_block(A: np.ndarray, rhs: np.ndarray, scale: float | None = None) -> np.ndarray:
    # `scale` lets the caller pass the magnitude of the quantities a block
    # was computed from, so catastrophic cancellation counts as singular
    if scale is None:
        scale = float(np.abs(A).max())
    lu, piv = _lu_factor_quiet(A)
    if scale == 0.0 or np.abs(np.diag(lu)).min() < PIVOT_RTOL * scale:
        raise SingularError("block is numerically singular")
    return scipy.linalg.lu_solve((lu, piv), rhs)


def block_inverse_2x2(A, B, C, D):
    """Invert [[A, B], [C, D]] blockwise via the Schur complement of A.

    Returns the four blocks (TL, TR, BL, BR) with
    TL = A^-1 + A^-1 B M C A^-1, TR = -A^-1 B M, BL = -M C A^-1, BR = M,
    where M = (D - C A^-1 B)^-1.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    D = np.atleast_2d(np.asarray(D, dtype=float))
    k, l = A.shape[0], D.shape[0]
    if A.shape != (k, k) or D.shape != (l, l) or B.shape != (k, l) or C.shape != (l, k):
        raise ShapeError(
            f"incompatible block shapes {A.shape}, {B.shape}, {C.shape}, {D.shape}"
        )
    eye_k = np.eye(k)
    A_inv = _solve_block(A, eye_k)
    A_inv_B = A_inv @ B
    C_A_inv = C @ A_inv
    CAB = C @ A_inv_B
    schur_scale = max(float(np.abs(D).max()), float(np.abs(CAB).max()))
    M = _solve_block(D - CAB, np.eye(l), scale=schur_scale)
    tl = A_inv + A_inv_B @ M @ C_A_inv
    tr = -A_inv_B @ M
    bl = -M @ C_A_inv
    return tl, tr, bl, M
