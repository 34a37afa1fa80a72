"""
Points, tangents, exponential/logarithm maps and approximate distances on
O(n), St(n,k) and Gr(n,k).

Stiefel geometry uses the canonical metric induced by the bi-invariant
metric on O(n). Grassmann points are represented by orthonormal n x k
frames; every Grassmann operation is invariant under Y -> Y R, R in O(k).
"""

import logging
from dataclasses import dataclass
from typing import Union

import numpy as np
import numpy.typing as npt

from manifold_ar.core.matcore import (
    ORTHO_TOL,
    Matrix,
    OrthoMatrix,
    antisym_project,
    check_orthogonal,
    complete_frame,
    expm,
    horizontal_project,
    logm_so,
    sym_part,
)
from manifold_ar.errors import (
    DimensionError,
    InvalidInputError,
    InvalidTangentError,
    OutOfChartError,
)

logger = logging.getLogger(__name__)

CHART_COND_LIMIT = 1e8
GRASSMANN_OVERLAP_TOL = 1e-6
TANGENT_TOL = 1e-10


def _check_frame(y: npt.ArrayLike) -> Matrix:
    arr = np.asarray(y, dtype=np.float64)
    if arr.ndim != 2 or not 1 <= arr.shape[1] <= arr.shape[0]:
        raise DimensionError(f"frame must be n x k with 1 <= k <= n, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("frame has non-finite entries")
    defect = np.linalg.norm(arr.T @ arr - np.eye(arr.shape[1]))
    if defect > ORTHO_TOL:
        raise InvalidInputError(f"columns are not orthonormal (defect {defect:.3e})")
    return arr


@dataclass(frozen=True, eq=False)
class StiefelPoint:
    """n x k matrix with orthonormal columns."""

    y: Matrix

    def __post_init__(self):
        object.__setattr__(self, "y", _check_frame(self.y))

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def k(self) -> int:
        return self.y.shape[1]


@dataclass(frozen=True, eq=False)
class GrassmannPoint:
    """Orthonormal representative of the subspace spanned by its columns."""

    y: Matrix

    def __post_init__(self):
        object.__setattr__(self, "y", _check_frame(self.y))

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def k(self) -> int:
        return self.y.shape[1]


FramePoint = Union[StiefelPoint, GrassmannPoint]
ManifoldPoint = Union[StiefelPoint, GrassmannPoint, OrthoMatrix]


@dataclass(frozen=True, eq=False)
class StiefelTangent:
    """Tangent vector D at `base`; base.y^T D must be antisymmetric."""

    base: FramePoint
    d: Matrix

    def __post_init__(self):
        d = np.asarray(self.d, dtype=np.float64)
        if d.shape != self.base.y.shape:
            raise DimensionError(f"tangent shape {d.shape} != base shape {self.base.y.shape}")
        if not np.all(np.isfinite(d)):
            raise InvalidInputError("tangent has non-finite entries")
        defect = np.linalg.norm(sym_part(self.base.y.T @ d))
        if defect > TANGENT_TOL * max(1.0, float(np.linalg.norm(d))):
            raise InvalidTangentError(f"X^T D is not antisymmetric (defect {defect:.3e})")
        object.__setattr__(self, "d", d)


def _frame_generator(z: Matrix) -> Matrix:
    """Lift [A; B] (frame coordinates of a tangent) to [[A, -B^T], [B, 0]]."""
    n, k = z.shape
    w = np.zeros((n, n))
    w[:, :k] = z
    w[:k, k:] = -z[k:].T
    w[:k, :k] = 0.5 * (z[:k] - z[:k].T)
    return w


def stiefel_exp_identity(w: npt.ArrayLike, k: int) -> Matrix:
    """
    Riemannian exponential at I_{n,k} for a generator W in o(n).

    The vertical block of W does not move I_{n,k} along a geodesic and is
    discarded by the horizontal projection.
    """
    w = antisym_project(w)
    n = w.shape[0]
    if k == n:
        return expm(w)
    return expm(horizontal_project(w, k))[:, :k]


def _check_base(x: FramePoint, d: StiefelTangent) -> None:
    if d.base is not x and not np.array_equal(d.base.y, x.y):
        raise InvalidTangentError("tangent is attached to a different base point")


def stiefel_exp(x: StiefelPoint, d: StiefelTangent) -> StiefelPoint:
    """Canonical-metric geodesic exp_X(D), evaluated in the frame [X, X_perp]."""
    _check_base(x, d)
    q = complete_frame(x.y)
    w = _frame_generator(q.T @ d.d)
    return StiefelPoint(q @ stiefel_exp_identity(w, x.k))


def stiefel_tangent_project(x: npt.ArrayLike, v: npt.ArrayLike) -> Matrix:
    """Orthogonal projection of V onto T_X St: V - X sym(X^T V)."""
    x = np.asarray(x, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    return v - x @ sym_part(x.T @ v)


def _pade_log(x: Matrix, y: Matrix) -> Matrix:
    """2 (Y - X)(I_k + X^T Y)^{-1}."""
    m = np.eye(x.shape[1]) + x.T @ y
    cond = np.linalg.cond(m)
    if not np.isfinite(cond) or cond > CHART_COND_LIMIT:
        logger.debug("Pade log chart failure, cond(I + X^T Y) = %s", cond)
        raise OutOfChartError(f"I_k + X^T Y is near-singular (cond {cond:.3e})")
    return 2.0 * np.linalg.solve(m.T, (y - x).T).T


def stiefel_log_approx(x: StiefelPoint, y: StiefelPoint) -> StiefelTangent:
    """
    Pade approximation of log_X(Y), projected onto the tangent space.

    The raw expression 2(Y - X)(I_k + X^T Y)^{-1} differs from the true
    logarithm at second order only in the normal direction, so the
    projected tangent is accurate to third order in the distance.
    """
    if x.y.shape != y.y.shape:
        raise DimensionError(f"shape mismatch: {x.y.shape} vs {y.y.shape}")
    return StiefelTangent(x, stiefel_tangent_project(x.y, _pade_log(x.y, y.y)))


def _canonical_sq(x: Matrix, v: Matrix) -> float:
    # 1/2 tr(V^T (I_n - 1/2 X X^T) V)
    xtv = x.T @ v
    return 0.5 * (float(np.sum(v * v)) - 0.5 * float(np.sum(xtv * xtv)))


def canonical_norm(x: StiefelPoint, d: StiefelTangent) -> float:
    """Length of D in the canonical metric at X."""
    return float(np.sqrt(max(0.0, _canonical_sq(x.y, d.d))))


def stiefel_dist_approx(x: StiefelPoint, y: StiefelPoint) -> float:
    """sqrt(1/2 tr(L^T (I_n - 1/2 X X^T) L)) with L the raw Pade logarithm."""
    if x.y.shape != y.y.shape:
        raise DimensionError(f"shape mismatch: {x.y.shape} vs {y.y.shape}")
    return float(np.sqrt(max(0.0, _canonical_sq(x.y, _pade_log(x.y, y.y)))))


def procrustes_rotation(xty: Matrix) -> Matrix:
    """
    R in O(k) with X^T Y R symmetric positive semidefinite.

    Raises:
        OutOfChartError: some principal angle is within 1e-6 of pi/2.
    """
    u, s, vt = np.linalg.svd(xty)
    if s.min() < GRASSMANN_OVERLAP_TOL:
        raise OutOfChartError(f"degenerate subspace overlap (min cosine {s.min():.3e})")
    return vt.T @ u.T


def grassmann_align(x: GrassmannPoint, y: GrassmannPoint) -> Matrix:
    """Representative of [Y] closest to X."""
    return y.y @ procrustes_rotation(x.y.T @ y.y)


def grassmann_tangent_project(x: npt.ArrayLike, v: npt.ArrayLike) -> Matrix:
    """Horizontal Grassmann tangent (I - X X^T) V."""
    x = np.asarray(x, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    return v - x @ (x.T @ v)


def grassmann_log_approx(x: GrassmannPoint, y: GrassmannPoint) -> StiefelTangent:
    if x.y.shape != y.y.shape:
        raise DimensionError(f"shape mismatch: {x.y.shape} vs {y.y.shape}")
    log = _pade_log(x.y, grassmann_align(x, y))
    return StiefelTangent(x, grassmann_tangent_project(x.y, log))


def grassmann_exp(x: GrassmannPoint, d: StiefelTangent) -> GrassmannPoint:
    """Geodesic from [X] along the horizontal part of D."""
    _check_base(x, d)
    q = complete_frame(x.y)
    w = _frame_generator(q.T @ grassmann_tangent_project(x.y, d.d))
    return GrassmannPoint(q @ stiefel_exp_identity(w, x.k))


def grassmann_dist_approx(x: GrassmannPoint, y: GrassmannPoint) -> float:
    """sqrt(tr(L^T (I_n - X X^T) L)) with L the Pade logarithm to the aligned Y."""
    if x.y.shape != y.y.shape:
        raise DimensionError(f"shape mismatch: {x.y.shape} vs {y.y.shape}")
    log = _pade_log(x.y, grassmann_align(x, y))
    xtl = x.y.T @ log
    return float(np.sqrt(max(0.0, float(np.sum(log * log)) - float(np.sum(xtl * xtl)))))


def ortho_dist(p: npt.ArrayLike, q: npt.ArrayLike) -> float:
    """Bi-invariant distance ||log(P^T Q)||_F."""
    p = check_orthogonal(p)
    q = check_orthogonal(q)
    if p.shape != q.shape:
        raise DimensionError(f"shape mismatch: {p.shape} vs {q.shape}")
    return float(np.linalg.norm(logm_so(p.T @ q)))


def apply_group(phi: npt.ArrayLike, p: ManifoldPoint) -> ManifoldPoint:
    """Left action of phi in O(n) on a point of O(n), St(n,k) or Gr(n,k)."""
    phi = np.asarray(phi, dtype=np.float64)
    if isinstance(p, (StiefelPoint, GrassmannPoint)):
        if phi.shape != (p.n, p.n):
            raise DimensionError(f"cannot act with {phi.shape} on a point in R^{p.n}")
        return type(p)(phi @ p.y)
    p = np.asarray(p, dtype=np.float64)
    if phi.shape != p.shape:
        raise DimensionError(f"shape mismatch: {phi.shape} vs {p.shape}")
    return phi @ p


def distance(p: ManifoldPoint, q: ManifoldPoint) -> float:
    """The (approximate) distance matching the type of the points."""
    if isinstance(p, GrassmannPoint) and isinstance(q, GrassmannPoint):
        return grassmann_dist_approx(p, q)
    if isinstance(p, StiefelPoint) and isinstance(q, StiefelPoint):
        return stiefel_dist_approx(p, q)
    frames = (StiefelPoint, GrassmannPoint)
    if isinstance(p, frames) or isinstance(q, frames):
        raise InvalidInputError(f"cannot compare {type(p).__name__} with {type(q).__name__}")
    return ortho_dist(p, q)
