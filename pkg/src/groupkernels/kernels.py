"""Scalar kernel families on intervals of the real line and their
multi-task operator lifts ``G(x, y) * A``.

Five closed-form families are built in (all symmetric and uniformly
bounded on their domains); a ``custom`` family wraps an arbitrary
symmetric callable for diagnostics.  Kernel objects are immutable and
evaluation is pure, so they are safe to share across threads.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DataFormatError, DomainError, DuplicateCenterError

BUILTIN_FAMILIES = ("brownianbridge", "tfamily", "wendland", "exponential", "combination")

# families defined on the unit interval only
_UNIT_FAMILIES = ("brownianbridge", "tfamily", "wendland", "combination")


@dataclass(frozen=True)
class ScalarKernelSpec:
    """Parametric description of a scalar kernel on an open interval.

    family   one of BUILTIN_FAMILIES, or "custom"
    t        mixing parameter of the min{x,y} - t*x*y family, in [-1, 1];
             also used for the first term of a combination (default 1.0)
    weights  (C1, C2) nonnegative weights of a combination, C1 + C2 > 0
    domain   open interval (lo, hi); evaluating at an endpoint is an error
    func     vectorized symmetric callable, required for family="custom"
    """

    family: str
    t: float | None = None
    weights: tuple[float, float] | None = None
    domain: tuple[float, float] = (0.0, 1.0)
    func: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = field(
        default=None, compare=False
    )

    def __post_init__(self):
        if self.family not in BUILTIN_FAMILIES + ("custom",):
            raise ValueError(f"unknown kernel family {self.family!r}")
        lo, hi = float(self.domain[0]), float(self.domain[1])
        if not lo < hi:
            raise ValueError(f"domain must satisfy lo < hi, got ({lo}, {hi})")
        object.__setattr__(self, "domain", (lo, hi))
        if self.family in _UNIT_FAMILIES and not (0.0 <= lo < hi <= 1.0):
            raise ValueError(f"{self.family} is defined on (0, 1); got ({lo}, {hi})")
        if self.family == "tfamily":
            if self.t is None:
                raise ValueError("tfamily requires the parameter t")
            t = float(self.t)
            if not -1.0 <= t <= 1.0:
                raise ValueError(f"t must lie in [-1, 1], got {t}")
            object.__setattr__(self, "t", t)
        elif self.family == "combination":
            if self.weights is None:
                raise ValueError("combination requires weights (C1, C2)")
            c1, c2 = float(self.weights[0]), float(self.weights[1])
            if c1 < 0 or c2 < 0 or c1 + c2 <= 0:
                raise ValueError(f"weights must be nonnegative with C1 + C2 > 0, got ({c1}, {c2})")
            object.__setattr__(self, "weights", (c1, c2))
            t = 1.0 if self.t is None else float(self.t)
            if not -1.0 <= t <= 1.0:
                raise ValueError(f"t must lie in [-1, 1], got {t}")
            object.__setattr__(self, "t", t)
        elif self.t is not None:
            raise ValueError(f"{self.family} takes no parameter t")
        if self.family != "combination" and self.weights is not None:
            raise ValueError(f"{self.family} takes no weights")
        if self.family == "custom" and self.func is None:
            raise ValueError("custom kernels require func")


def brownian_bridge() -> ScalarKernelSpec:
    """min{x,y} - x*y on (0, 1)."""
    return ScalarKernelSpec("brownianbridge")


def tfamily(t: float) -> ScalarKernelSpec:
    """min{x,y} - t*x*y on (0, 1), t in [-1, 1]."""
    return ScalarKernelSpec("tfamily", t=float(t))


def wendland() -> ScalarKernelSpec:
    """max{1 - |x-y|, 0} on (0, 1)."""
    return ScalarKernelSpec("wendland")


def exponential(domain: tuple[float, float] = (-math.inf, math.inf)) -> ScalarKernelSpec:
    """exp(-|x-y|); defined on all of R, certifiable on bounded subintervals."""
    return ScalarKernelSpec("exponential", domain=domain)


def combination(c1: float, c2: float, t: float = 1.0) -> ScalarKernelSpec:
    """C1*(min{x,y} - t*x*y) + C2*max{1 - |x-y|, 0} on (0, 1)."""
    return ScalarKernelSpec("combination", t=float(t), weights=(float(c1), float(c2)))


def custom(func, domain: tuple[float, float]) -> ScalarKernelSpec:
    """Wrap a vectorized symmetric callable; not serializable, diagnostics only."""
    return ScalarKernelSpec("custom", domain=domain, func=func)


def scalar_values(spec: ScalarKernelSpec, x, y) -> np.ndarray:
    """Vectorized kernel evaluation with numpy broadcasting; no domain checks."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    # x*y is grouped first so evaluation is bitwise symmetric in (x, y)
    if spec.family == "brownianbridge":
        return np.minimum(x, y) - x * y
    if spec.family == "tfamily":
        return np.minimum(x, y) - spec.t * (x * y)
    if spec.family == "wendland":
        return np.maximum(1.0 - np.abs(x - y), 0.0)
    if spec.family == "exponential":
        return np.exp(-np.abs(x - y))
    if spec.family == "combination":
        c1, c2 = spec.weights
        return c1 * (np.minimum(x, y) - spec.t * (x * y)) + c2 * np.maximum(
            1.0 - np.abs(x - y), 0.0
        )
    return np.asarray(spec.func(x, y), dtype=float)


def scalar_uniform_bound(spec: ScalarKernelSpec) -> float | None:
    """Closed-form upper bound for sup |G| over the domain; None for custom.

    The builtin families are positive definite, so the supremum of |G| is
    attained along the diagonal and its closed form is elementary.
    """
    if spec.family == "exponential" or spec.family == "wendland":
        return 1.0
    if spec.family in ("brownianbridge", "tfamily", "combination"):
        t = 1.0 if spec.family == "brownianbridge" else spec.t
        # max over (0,1) of x - t*x^2
        diag = 1.0 / (4.0 * t) if t >= 0.5 else 1.0 - t
        if spec.family == "combination":
            c1, c2 = spec.weights
            return c1 * diag + c2
        return diag
    return None


def require_in_domain(spec: ScalarKernelSpec, points, what: str = "point") -> np.ndarray:
    """Return points as a float array, raising DomainError if any lies
    outside the open interval."""
    pts = np.asarray(points, dtype=float)
    lo, hi = spec.domain
    inside = (pts > lo) & (pts < hi)
    if not np.all(inside):
        bad = np.atleast_1d(pts)[~np.atleast_1d(inside)][:1]
        raise DomainError(f"{what} {bad[0]!r} outside open domain ({lo}, {hi})")
    return pts


def validate_centers(spec: ScalarKernelSpec, centers) -> np.ndarray:
    """Check centers are in-domain and pairwise distinct; returns an array."""
    arr = require_in_domain(spec, centers, what="center")
    arr = np.atleast_1d(arr)
    if np.unique(arr).size != arr.size:
        raise DuplicateCenterError("centers must be pairwise distinct")
    return arr


@dataclass(frozen=True)
class TaskCoupling:
    """Symmetric positive-definite matrix coupling the task outputs.

    The inverse is cached at construction (with one Newton refinement
    step) because every Kronecker-factored solve applies it per block.
    """

    n: int
    A: np.ndarray
    A_inv: np.ndarray

    @classmethod
    def from_matrix(cls, A) -> "TaskCoupling":
        A = np.array(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"coupling must be square, got shape {A.shape}")
        n = A.shape[0]
        scale = np.abs(A).max() if n else 0.0
        if scale == 0.0 or np.abs(A - A.T).max() > 1e-12 * scale:
            raise ValueError("coupling must be symmetric positive definite")
        A = 0.5 * (A + A.T)
        try:
            np.linalg.cholesky(A)
        except np.linalg.LinAlgError:
            raise ValueError("coupling must be symmetric positive definite") from None
        A_inv = np.linalg.inv(A)
        # one Newton step: kills the O(eps*cond) residual of the raw inverse
        A_inv = A_inv @ (2.0 * np.eye(n) - A @ A_inv)
        A_inv = 0.5 * (A_inv + A_inv.T)
        if np.abs(A @ A_inv - np.eye(n)).max() > 1e-12:
            raise ValueError("coupling too ill-conditioned to invert reliably")
        A.setflags(write=False)
        A_inv.setflags(write=False)
        return cls(n=n, A=A, A_inv=A_inv)

    @classmethod
    def identity(cls, n: int) -> "TaskCoupling":
        if n < 1:
            raise ValueError("coupling dimension must be >= 1")
        eye = np.eye(n)
        eye.setflags(write=False)
        return cls(n=n, A=eye, A_inv=eye)

    @classmethod
    def from_csv(cls, path) -> "TaskCoupling":
        rows = []
        with open(path, newline="") as fh:
            for i, row in enumerate(csv.reader(fh)):
                if not row:
                    continue
                try:
                    rows.append([float(v) for v in row])
                except ValueError:
                    raise DataFormatError(f"{path}: row {i + 1}: non-numeric entry") from None
        if not rows or any(len(r) != len(rows) for r in rows):
            raise DataFormatError(f"{path}: coupling CSV must be n rows of n values")
        return cls.from_matrix(rows)


@dataclass(frozen=True)
class OperatorKernel:
    """Operator-valued kernel K(x, y) = G(x, y) * A with a group exponent p.

    p rides on the kernel so that norms, solvers, and certification all
    agree on a single exponent per model.  Norm evaluation accepts any
    p >= 1 (including inf); the proximal solvers accept only p in {1, 2}.
    """

    scalar: ScalarKernelSpec
    coupling: TaskCoupling
    p: float = 2.0

    def __post_init__(self):
        p = float(self.p)
        if not (p >= 1.0):
            raise ValueError(f"group exponent p must satisfy p >= 1, got {p}")
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return self.coupling.n

    @property
    def q(self) -> float:
        """Conjugate exponent, 1/p + 1/q = 1."""
        if self.p == 1.0:
            return math.inf
        if math.isinf(self.p):
            return 1.0
        return self.p / (self.p - 1.0)


def eval_scalar(spec: ScalarKernelSpec, x: float, y: float) -> float:
    """Closed-form scalar kernel value G(x, y); symmetric in (x, y)."""
    require_in_domain(spec, x)
    require_in_domain(spec, y)
    return float(scalar_values(spec, x, y))


def eval_operator(kernel: OperatorKernel, x: float, y: float) -> np.ndarray:
    """Operator kernel value G(x, y) * A as an n-by-n matrix."""
    return eval_scalar(kernel.scalar, x, y) * kernel.coupling.A


def kernel_vector(kernel: OperatorKernel, centers, x: float):
    """Scalar vector (G(x, x_i))_i plus the coupling.

    The operator-valued column at x is recovered as each entry times A.
    """
    arr = validate_centers(kernel.scalar, centers)
    require_in_domain(kernel.scalar, x, what="query")
    return scalar_values(kernel.scalar, float(x), arr), kernel.coupling


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _domain_to_json(domain):
    return [None if math.isinf(v) else v for v in domain]


def _domain_from_json(value):
    lo = -math.inf if value[0] is None else float(value[0])
    hi = math.inf if value[1] is None else float(value[1])
    return (lo, hi)


def kernel_to_dict(kernel: OperatorKernel) -> dict:
    """JSON-ready description of an operator kernel."""
    spec = kernel.scalar
    out = {"family": spec.family}
    if spec.family in ("tfamily", "combination"):
        out["t"] = spec.t
    if spec.family == "combination":
        out["weights"] = list(spec.weights)
    out["domain"] = _domain_to_json(spec.domain)
    out["p"] = "inf" if math.isinf(kernel.p) else kernel.p
    out["coupling"] = {"n": kernel.coupling.n, "A": kernel.coupling.A.tolist()}
    return out


def kernel_from_dict(data: dict) -> OperatorKernel:
    family = data.get("family")
    if family == "custom":
        raise ValueError("custom kernels cannot be deserialized")
    if family not in BUILTIN_FAMILIES:
        raise DataFormatError(f"unknown kernel family {family!r}")
    domain = _domain_from_json(data.get("domain", [0.0, 1.0]))
    kwargs = {}
    if family == "tfamily":
        kwargs["t"] = float(data["t"])
    if family == "combination":
        kwargs["t"] = float(data.get("t", 1.0))
        kwargs["weights"] = tuple(float(v) for v in data["weights"])
    spec = ScalarKernelSpec(family, domain=domain, **kwargs)
    cdata = data["coupling"]
    coupling = TaskCoupling.from_matrix(cdata["A"])
    if coupling.n != int(cdata.get("n", coupling.n)):
        raise DataFormatError("coupling n does not match matrix shape")
    p = data.get("p", 2)
    p = math.inf if p == "inf" else float(p)
    return OperatorKernel(scalar=spec, coupling=coupling, p=p)


def save_kernel(kernel: OperatorKernel, path) -> None:
    with open(path, "w") as fh:
        json.dump(kernel_to_dict(kernel), fh, indent=2)
        fh.write("\n")


def load_kernel(path) -> OperatorKernel:
    with open(path) as fh:
        return kernel_from_dict(json.load(fh))
