"""Minimal-norm interpolation, equality-constrained group basis pursuit,
and regularized multi-task fitting with grouped coefficient penalties.

Interpolation over the sampling sites themselves is an exact linear
solve: within the span of the site columns the constraints determine the
coefficients uniquely, so optimization only enters when the center set is
augmented beyond the constraint sites (basis pursuit) or the data is
noisy (regularized fitting).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .blocklinalg import (
    BlockVector,
    block_norms,
    gram_apply,
    gram_assemble,
    gram_solve,
    lp1_norm,
)
from .errors import (
    DataFormatError,
    DomainError,
    NonconvergenceError,
    RankError,
    ShapeError,
)
from .gridsearch import refine_max, vdc_points
from .kernels import (
    OperatorKernel,
    kernel_from_dict,
    kernel_to_dict,
    scalar_values,
    validate_centers,
)

PURSUIT_TOL = 1e-9  # primal/dual residual stop for basis pursuit
_RHO_MIN, _RHO_MAX = 1e-8, 1e8
# balancing every iteration can drive a period-2 limit cycle on piecewise
# linear problems; adapt on a cadence and then freeze (fixed-rho ADMM
# converges unconditionally)
_BALANCE_PERIOD = 50
_BALANCE_FREEZE = 1000


@dataclass(frozen=True)
class LearnConfig:
    """Regularized learning parameters (penalty weight applied to the
    grouped coefficient norm; loss is squared or absolute)."""

    lam: float
    loss: str = "squared"
    max_iters: int = 100_000
    tol: float = 1e-10
    restart: bool = True

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if self.loss not in ("squared", "absolute"):
            raise ValueError(f"loss must be 'squared' or 'absolute', got {self.loss!r}")
        if self.max_iters < 1 or not self.tol > 0:
            raise ValueError("max_iters must be >= 1 and tol positive")


@dataclass
class FitModel:
    """Centers, coefficient blocks and provenance of a fitted expansion.

    The stored norm always equals the grouped norm of the stored blocks.
    """

    kernel: OperatorKernel
    centers: np.ndarray
    coeffs: BlockVector
    norm_lp1: float
    meta: dict = field(default_factory=dict)


def _make_model(kernel, centers, blocks, meta) -> FitModel:
    coeffs = BlockVector(blocks, kernel.p)
    return FitModel(
        kernel=kernel,
        centers=np.asarray(centers, dtype=float),
        coeffs=coeffs,
        norm_lp1=lp1_norm(coeffs),
        meta=meta,
    )


def min_norm_interpolant(kernel: OperatorKernel, x, y: BlockVector) -> FitModel:
    """Interpolant over the sites x by the exact Kronecker-factored solve.

    When the kernel passes the stability certification this expansion is
    the minimal grouped-norm interpolant among all expansions anywhere.
    """
    system = gram_assemble(kernel, x)
    coeffs = gram_solve(system, BlockVector(y.blocks, kernel.p))
    resid = gram_apply(system, coeffs).blocks - y.blocks
    meta = {
        "solver": "exact-gram",
        "iterations": 0,
        "residual": float(np.abs(resid).max()) if resid.size else 0.0,
    }
    return _make_model(kernel, x, coeffs.blocks, meta)


def predict_many(model: FitModel, queries) -> np.ndarray:
    """Expansion values sum_j G(x_j, q) A c_j at many queries, as (k, n)."""
    spec = model.kernel.scalar
    q = np.atleast_1d(np.asarray(queries, dtype=float))
    lo, hi = spec.domain
    if np.any(q <= lo) or np.any(q >= hi):
        raise DomainError(f"query outside open domain ({lo}, {hi})")
    e = scalar_values(spec, q[:, None], model.centers[None, :])
    return (e @ model.coeffs.blocks) @ model.kernel.coupling.A


def predict(model: FitModel, query: float) -> np.ndarray:
    """Expansion value at one query, as an n-vector."""
    return predict_many(model, [float(query)])[0]


def block_soft_threshold(z: BlockVector, tau: float, p: float | None = None) -> BlockVector:
    """Proximal map of tau times the grouped norm.

    p=2 shrinks each block radially by tau (blocks shorter than tau
    vanish); p=1 soft-thresholds elementwise.
    """
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    p = z.p if p is None else float(p)
    if p not in (1.0, 2.0):
        raise ValueError(f"proximal map implemented for p in {{1, 2}}, got {p}")
    return BlockVector(_shrink(z.blocks, tau, p), z.p)


def _shrink(blocks: np.ndarray, tau: float, p: float) -> np.ndarray:
    if tau == 0.0:
        return blocks.copy()
    if p == 1.0:
        return np.sign(blocks) * np.maximum(np.abs(blocks) - tau, 0.0)
    norms = block_norms(blocks, 2.0)
    scale = np.zeros_like(norms)
    nz = norms > 0
    scale[nz] = np.maximum(1.0 - tau / norms[nz], 0.0)
    return blocks * scale[:, None]


def _balance_rho(rho, r, s, u):
    """Residual balancing: keep primal and dual residuals within 10x of
    each other by doubling/halving rho (rescaling the scaled dual)."""
    if r > 10.0 * s and rho < _RHO_MAX:
        return rho * 2.0, u / 2.0
    if s > 10.0 * r and rho > _RHO_MIN:
        return rho / 2.0, u * 2.0
    return rho, u


def group_basis_pursuit(kernel: OperatorKernel, centers, constraints_x,
                        y: BlockVector, p: float | None = None,
                        rho: float = 1.0, max_iters: int = 200_000) -> FitModel:
    """Minimize the grouped coefficient norm over expansions supported on
    `centers` subject to interpolating y at `constraints_x`.

    Solved by ADMM: projection onto the affine constraint set alternating
    with the grouped shrinkage, scaled dual ascent, and residual
    balancing.  Stops when both residuals fall below 1e-9.
    """
    p = kernel.p if p is None else float(p)
    if p not in (1.0, 2.0):
        raise ValueError(f"basis pursuit implemented for p in {{1, 2}}, got {p}")
    spec = kernel.scalar
    cen = validate_centers(spec, centers)
    cons = validate_centers(spec, constraints_x)
    if not np.all(np.isin(cons, cen)):
        raise ShapeError("constraints_x must be a subset of centers")
    m, big_m, n = cons.size, cen.size, kernel.coupling.n
    if y.m != m or y.n != n:
        raise ShapeError(f"expected {m} blocks of dimension {n}, got {y.m} of {y.n}")

    g_c = scalar_values(spec, cons[:, None], cen[None, :])  # (m, M)
    y_t = y.blocks @ kernel.coupling.A_inv
    s_mat = g_c @ g_c.T
    try:
        factor = scipy.linalg.cho_factor(s_mat, lower=True)
    except scipy.linalg.LinAlgError:
        raise RankError("constraint rows are rank deficient") from None
    if np.abs(np.diag(factor[0])).min() ** 2 < 1e-12 * np.abs(s_mat).max():
        raise RankError("constraint rows are rank deficient")

    def project(v):
        return v - g_c.T @ scipy.linalg.cho_solve(factor, g_c @ v - y_t)

    z = np.zeros((big_m, n))
    u = np.zeros_like(z)
    c = z
    converged = False
    r = s = math.inf
    for it in range(1, max_iters + 1):
        c = project(z - u)
        z_new = _shrink(c + u, 1.0 / rho, p)
        r = float(np.linalg.norm(c - z_new))
        s = float(rho * np.linalg.norm(z_new - z))
        u = u + c - z_new
        z = z_new
        if r <= PURSUIT_TOL and s <= PURSUIT_TOL:
            converged = True
            break
        if it % _BALANCE_PERIOD == 0 and it <= _BALANCE_FREEZE:
            rho, u = _balance_rho(rho, r, s, u)
    if not converged:
        raise NonconvergenceError(
            f"basis pursuit residuals {r:.3e}/{s:.3e} after {max_iters} iterations",
            iterations=max_iters,
            residuals=(r, s),
        )
    meta = {
        "solver": "admm-basis-pursuit",
        "iterations": it,
        "primal_residual": r,
        "dual_residual": s,
        "rho": rho,
        "p": p,
    }
    coeffs = BlockVector(c, p)
    return FitModel(kernel=kernel, centers=cen, coeffs=coeffs,
                    norm_lp1=lp1_norm(coeffs), meta=meta)


def _loss_value(w: np.ndarray, y: np.ndarray, loss: str) -> float:
    if loss == "squared":
        return 0.5 * float(((w - y) ** 2).sum())
    return float(np.abs(w - y).sum())


def _objective(g, a, c, y, lam, p, loss) -> float:
    return _loss_value(g @ c @ a, y, loss) + lam * float(block_norms(c, p).sum())


def _power_lipschitz(g: np.ndarray, a: np.ndarray, iters: int = 100) -> float:
    """Largest eigenvalue of the squared design operator C -> G^2 C A^2,
    by power iteration from a deterministic generic start."""
    m, n = g.shape[0], a.shape[0]
    v = np.ones((m, n)) + 1e-3 * np.arange(m * n, dtype=float).reshape(m, n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = g @ (g @ v @ a) @ a
        lam = float(np.sum(v * w))
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0
        v = w / nw
    return lam


def _fista(g, a, y, lam, p, max_iters, tol, restart):
    """Accelerated proximal gradient for the squared loss, with adaptive
    restart: whenever the objective would rise, momentum resets and the
    step is redone plainly, so the recorded objective never increases."""
    big_l = _power_lipschitz(g, a)
    if big_l == 0.0:
        return np.zeros_like(y), [0.0], 0, 0.0
    step = 1.0 / big_l
    c = np.zeros_like(y)
    v = c.copy()
    theta = 1.0
    f_prev = _objective(g, a, c, y, lam, p, "squared")
    trace = [f_prev]
    change = math.inf
    for it in range(1, max_iters + 1):
        grad = g @ (g @ v @ a - y) @ a
        c_new = _shrink(v - step * grad, lam * step, p)
        f_new = _objective(g, a, c_new, y, lam, p, "squared")
        if restart and f_new > f_prev:
            theta = 1.0
            grad = g @ (g @ c @ a - y) @ a
            c_new = _shrink(c - step * grad, lam * step, p)
            f_new = _objective(g, a, c_new, y, lam, p, "squared")
        theta_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * theta * theta))
        v = c_new + ((theta - 1.0) / theta_new) * (c_new - c)
        theta = theta_new
        c = c_new
        trace.append(f_new)
        change = abs(f_prev - f_new) / max(1.0, abs(f_prev))
        if change <= tol:
            return c, trace, it, change
        f_prev = f_new
    raise NonconvergenceError(
        f"fista objective change {change:.3e} above tol after {max_iters} iterations",
        iterations=max_iters,
        residuals=(change,),
    )


def _prox_loss(w, y, rho, loss):
    if loss == "squared":
        return (y + rho * w) / (1.0 + rho)
    return y + np.sign(w - y) * np.maximum(np.abs(w - y) - 1.0 / rho, 0.0)


def fit_admm(kernel: OperatorKernel, x, y: BlockVector, cfg: LearnConfig,
             rho: float = 1.0) -> FitModel:
    """Regularized fit by ADMM on the split (coefficients, fitted values)
    coupled through the design constraint.

    The projection onto the constraint set diagonalizes in the joint
    eigenbases of the Gram and the coupling, so each iteration is a pair
    of separable proximal maps plus two basis changes.  Handles both
    losses; it is the solver of record for the absolute loss and the
    cross-check oracle for the squared loss.
    """
    if kernel.p not in (1.0, 2.0):
        raise ValueError(f"regularized fitting implemented for p in {{1, 2}}, got {kernel.p}")
    system = gram_assemble(kernel, x)
    g, a = system.G, kernel.coupling.A
    if y.m != g.shape[0] or y.n != a.shape[0]:
        raise ShapeError(f"expected {g.shape[0]} blocks of dimension {a.shape[0]}")
    y_b = y.blocks
    d_g, q_g = np.linalg.eigh(g)
    e_a, q_a = np.linalg.eigh(a)
    denom = 1.0 + np.outer(d_g ** 2, e_a ** 2)

    def project(v_c, v_w):
        r = v_c + g @ v_w @ a
        c = q_g @ ((q_g.T @ r @ q_a) / denom) @ q_a.T
        return c, g @ c @ a

    z_c = np.zeros_like(y_b)
    z_w = np.zeros_like(y_b)
    u_c = np.zeros_like(y_b)
    u_w = np.zeros_like(y_b)
    c_c = z_c
    converged = False
    r = s = math.inf
    for it in range(1, cfg.max_iters + 1):
        c_c, c_w = project(z_c - u_c, z_w - u_w)
        z_c_new = _shrink(c_c + u_c, cfg.lam / rho, kernel.p)
        z_w_new = _prox_loss(c_w + u_w, y_b, rho, cfg.loss)
        r = math.hypot(float(np.linalg.norm(c_c - z_c_new)),
                       float(np.linalg.norm(c_w - z_w_new)))
        s = rho * math.hypot(float(np.linalg.norm(z_c_new - z_c)),
                             float(np.linalg.norm(z_w_new - z_w)))
        u_c = u_c + c_c - z_c_new
        u_w = u_w + c_w - z_w_new
        z_c, z_w = z_c_new, z_w_new
        if r <= cfg.tol and s <= cfg.tol:
            converged = True
            break
        if it % _BALANCE_PERIOD == 0 and it <= _BALANCE_FREEZE:
            if r > 10.0 * s and rho < _RHO_MAX:
                rho *= 2.0
                u_c /= 2.0
                u_w /= 2.0
            elif s > 10.0 * r and rho > _RHO_MIN:
                rho /= 2.0
                u_c *= 2.0
                u_w *= 2.0
    if not converged:
        raise NonconvergenceError(
            f"admm residuals {r:.3e}/{s:.3e} after {cfg.max_iters} iterations",
            iterations=cfg.max_iters,
            residuals=(r, s),
        )
    meta = {
        "solver": "admm-regularized",
        "loss": cfg.loss,
        "lam": cfg.lam,
        "iterations": it,
        "objective": _objective(g, a, c_c, y_b, cfg.lam, kernel.p, cfg.loss),
        "primal_residual": r,
        "dual_residual": s,
        "rho": rho,
    }
    return _make_model(kernel, x, c_c, meta)


def fit_regularized(kernel: OperatorKernel, x, y: BlockVector,
                    cfg: LearnConfig) -> FitModel:
    """Regularized multi-task fit over expansions at the sampling sites.

    Squared loss runs accelerated proximal gradient with adaptive restart
    (step 1/L from 100 power iterations); absolute loss reuses the ADMM
    machinery with the loss proximal map.
    """
    if cfg.loss == "absolute":
        return fit_admm(kernel, x, y, cfg)
    if kernel.p not in (1.0, 2.0):
        raise ValueError(f"regularized fitting implemented for p in {{1, 2}}, got {kernel.p}")
    system = gram_assemble(kernel, x)
    g, a = system.G, kernel.coupling.A
    if y.m != g.shape[0] or y.n != a.shape[0]:
        raise ShapeError(f"expected {g.shape[0]} blocks of dimension {a.shape[0]}")
    c, trace, iters, change = _fista(g, a, y.blocks, cfg.lam, kernel.p,
                                     cfg.max_iters, cfg.tol, cfg.restart)
    meta = {
        "solver": "fista",
        "loss": cfg.loss,
        "lam": cfg.lam,
        "iterations": iters,
        "objective": trace[-1],
        "residual": change,
        "_objective_trace": trace,
    }
    return _make_model(kernel, x, c, meta)


def expansion_sup_norm(model: FitModel, grid_size: int) -> float:
    """Max over a nested probe grid (refined around the maximizer) of the
    conjugate-exponent norm of the expansion values.

    On an unbounded domain the probes cover the center hull: the builtin
    unbounded family decays monotonically beyond it.
    """
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    kernel = model.kernel
    lo, hi = kernel.scalar.domain
    if not (math.isfinite(lo) and math.isfinite(hi)):
        lo, hi = float(model.centers.min()), float(model.centers.max())
    ca = model.coeffs.blocks @ kernel.coupling.A
    q = kernel.q

    def norms_at(queries):
        e = scalar_values(kernel.scalar, queries[:, None], model.centers[None, :])
        vals = e @ ca
        if math.isinf(q):
            return np.abs(vals).max(axis=1) if vals.size else np.zeros(queries.size)
        return np.linalg.norm(vals, ord=q, axis=1)

    if hi <= lo:
        return float(norms_at(np.array([lo]))[0])
    probes = np.concatenate([vdc_points(lo, hi, grid_size), model.centers])
    vals = norms_at(probes)
    _, best = refine_max(lambda t: float(norms_at(np.array([t]))[0]),
                         probes, vals, lo, hi)
    return float(max(vals.max(), best))


# ---------------------------------------------------------------------------
# persistence and data files
# ---------------------------------------------------------------------------

def model_to_dict(model: FitModel) -> dict:
    meta = {k: v for k, v in model.meta.items() if not k.startswith("_")}
    return {
        "kernel": kernel_to_dict(model.kernel),
        "centers": [float(v) for v in model.centers],
        "coeffs": model.coeffs.blocks.tolist(),
        "p": "inf" if math.isinf(model.coeffs.p) else model.coeffs.p,
        "norm_lp1": model.norm_lp1,
        "meta": meta,
    }


def model_from_dict(data: dict) -> FitModel:
    kernel = kernel_from_dict(data["kernel"])
    p = data.get("p", kernel.p)
    p = math.inf if p == "inf" else float(p)
    coeffs = BlockVector(np.array(data["coeffs"], dtype=float), p)
    norm = lp1_norm(coeffs)
    stored = float(data.get("norm_lp1", norm))
    if abs(stored - norm) > 1e-12 * max(1.0, norm):
        raise DataFormatError("stored norm_lp1 disagrees with stored coefficients")
    return FitModel(
        kernel=kernel,
        centers=np.asarray(data["centers"], dtype=float),
        coeffs=coeffs,
        norm_lp1=norm,
        meta=dict(data.get("meta", {})),
    )


def read_training_csv(path):
    """Training data with header x,y1,...,yn; returns (x, Y) arrays.

    Malformed content fails before any solver runs, naming row and column.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataFormatError(f"{path}: empty file")
        header = [h.strip() for h in header]
        expected = ["x"] + [f"y{i}" for i in range(1, len(header))]
        if len(header) < 2 or header != expected:
            raise DataFormatError(f"{path}: header must be x,y1,...,yn, got {','.join(header)}")
        xs, ys = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataFormatError(
                    f"{path}: row {lineno}: expected {len(header)} columns, got {len(row)}"
                )
            vals = []
            for col, cell in zip(header, row):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise DataFormatError(
                        f"{path}: row {lineno}, column {col}: non-numeric value {cell!r}"
                    ) from None
            xs.append(vals[0])
            ys.append(vals[1:])
    if not xs:
        raise DataFormatError(f"{path}: no data rows")
    return np.asarray(xs), np.asarray(ys)


def read_points_csv(path) -> np.ndarray:
    """Query points from a CSV whose first column is x (extra columns are
    ignored, so a training file works as-is)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or not header or header[0].strip() != "x":
            raise DataFormatError(f"{path}: first column must be named x")
        pts = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                pts.append(float(row[0]))
            except ValueError:
                raise DataFormatError(
                    f"{path}: row {lineno}, column x: non-numeric value {row[0]!r}"
                ) from None
    if not pts:
        raise DataFormatError(f"{path}: no data rows")
    return np.asarray(pts)
