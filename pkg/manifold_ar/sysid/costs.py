"""
Pade-approximated squared-distance costs on St(n,k) and Gr(n,k) and their
gradients with respect to the system parameter Phi in O(n).

With M_j = Y_{j+1}^T Phi Y_j, C_j = (I_k + M_j)^{-1} and A_j = C_j^T:

    Stiefel   f(Phi) = sum_j tr(A_j B_j C_j),   B_j = 3I - M_j - M_j^T - M_j^T M_j
    Grassmann F(Phi) = sum_j 4 tr(A_j D_j C_j), D_j = I - M_j^T M_j

On Gr(n,k) each Y_j is first replaced by its Procrustes-aligned
representative, which makes M_j symmetric positive semidefinite.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence, Tuple

import numpy as np

from manifold_ar.config import ManifoldKind
from manifold_ar.core.manifolds import CHART_COND_LIMIT, GRASSMANN_OVERLAP_TOL
from manifold_ar.core.matcore import AntisymMatrix, Matrix, OrthoMatrix, frobenius, so_basis
from manifold_ar.errors import InvalidInputError, OutOfChartError
from manifold_ar.models import Trajectory

logger = logging.getLogger(__name__)


@lru_cache(maxsize=None)
def _cached_basis(n: int) -> Tuple[AntisymMatrix, ...]:
    return tuple(so_basis(n))


def _t(x: np.ndarray) -> np.ndarray:
    return np.swapaxes(x, -1, -2)


@dataclass
class PhiTerms:
    """Per-step matrices for one value of Phi, stacked along axis 0."""

    phi: OrthoMatrix
    prev: np.ndarray  # Y_j (aligned on Gr), shape (N, n, k)
    m: np.ndarray  # Y_{j+1}^T Phi Y_j
    c: np.ndarray  # (I + M)^{-1}
    a: np.ndarray  # C^T
    inner: np.ndarray  # B on St, D on Gr


class CostContext:
    """
    Observation data of a trajectory plus a cache of the Phi-dependent
    products for the most recently evaluated Phi.
    """

    def __init__(self, trajectory: Trajectory):
        if trajectory.manifold == ManifoldKind.ORTHOGONAL:
            raise InvalidInputError("orthogonal trajectories use the barycentre estimator")
        self.trajectory = trajectory
        self.manifold = trajectory.manifold
        frames = trajectory.frames()
        self.prev = frames[:-1]
        self.next = frames[1:]
        self._terms: Optional[PhiTerms] = None

    @property
    def n(self) -> int:
        return self.trajectory.n

    @property
    def k(self) -> int:
        return self.trajectory.k

    def terms(self, phi: OrthoMatrix) -> PhiTerms:
        phi = np.asarray(phi, dtype=np.float64)
        if self._terms is not None and np.array_equal(self._terms.phi, phi):
            return self._terms

        prev = self.prev
        m = _t(self.next) @ (phi @ prev)
        if self.manifold == ManifoldKind.GRASSMANN:
            u, s, vt = np.linalg.svd(m)
            smallest = s.min(axis=1)
            if smallest.min() < GRASSMANN_OVERLAP_TOL:
                step = int(np.argmin(smallest))
                raise OutOfChartError("degenerate subspace overlap", step=step)
            rotation = _t(vt) @ _t(u)
            prev = prev @ rotation
            m = m @ rotation

        eye = np.eye(self.k)
        shifted = eye + m
        cond = np.linalg.cond(shifted)
        bad = ~np.isfinite(cond) | (cond > CHART_COND_LIMIT)
        if bad.any():
            step = int(np.flatnonzero(bad)[0])
            logger.debug("Cost chart failure at step %d, cond %s", step, cond[step])
            raise OutOfChartError("I_k + Y_{j+1}^T Phi Y_j is near-singular", step=step)
        c = np.linalg.inv(shifted)
        mtm = _t(m) @ m
        if self.manifold == ManifoldKind.STIEFEL:
            inner = 3.0 * eye - m - _t(m) - mtm
        else:
            inner = eye - mtm

        self._terms = PhiTerms(phi=phi.copy(), prev=prev, m=m, c=c, a=_t(c), inner=inner)
        return self._terms


def _require(ctx: CostContext, kind: ManifoldKind) -> None:
    if ctx.manifold != kind:
        raise InvalidInputError(
            f"context holds a {ctx.manifold.value} trajectory, not {kind.value}"
        )


def _trace_cost(terms: PhiTerms) -> float:
    return float(np.trace(terms.a @ terms.inner @ terms.c, axis1=1, axis2=2).sum())


def stiefel_cost(phi: OrthoMatrix, ctx: CostContext) -> float:
    _require(ctx, ManifoldKind.STIEFEL)
    return _trace_cost(ctx.terms(phi))


def grassmann_cost(phi: OrthoMatrix, ctx: CostContext) -> float:
    _require(ctx, ManifoldKind.GRASSMANN)
    return 4.0 * _trace_cost(ctx.terms(phi))


def cost(phi: OrthoMatrix, ctx: CostContext) -> float:
    if ctx.manifold == ManifoldKind.STIEFEL:
        return stiefel_cost(phi, ctx)
    return grassmann_cost(phi, ctx)


def directional_derivative(phi: OrthoMatrix, delta: Matrix, ctx: CostContext) -> float:
    """
    The linear map Delta -> d/dt cost(Phi + t Delta) at t = 0, written out
    term by term with E_j = Y_{j+1}^T Delta Y_j.
    """
    terms = ctx.terms(phi)
    a, c, m, inner = terms.a, terms.c, terms.m, terms.inner
    e = _t(ctx.next) @ (np.asarray(delta, dtype=np.float64) @ terms.prev)
    et = _t(e)
    first = a @ et @ a @ inner @ c
    last = a @ inner @ c @ e @ c
    if ctx.manifold == ManifoldKind.STIEFEL:
        middle = a @ (e + et + et @ m + _t(m) @ e) @ c
        scale = -1.0
    else:
        middle = a @ (et @ m + _t(m) @ e) @ c
        scale = -4.0
    return scale * float(np.trace(first + middle + last, axis1=1, axis2=2).sum())


def euclidean_gradient(phi: OrthoMatrix, ctx: CostContext) -> Matrix:
    """n x n matrix G with directional_derivative(phi, Delta) = <G, Delta>_F."""
    terms = ctx.terms(phi)
    a, c, m = terms.a, terms.c, terms.m
    if ctx.manifold == ManifoldKind.STIEFEL:
        g = c @ a @ (terms.inner @ c + np.eye(ctx.k) + _t(m))
        scale = -2.0
    else:
        g = c @ a @ (terms.inner @ c + _t(m))
        scale = -8.0
    return scale * np.sum(ctx.next @ _t(g) @ _t(terms.prev), axis=0)


def _riemannian_gradient(
    phi: OrthoMatrix, ctx: CostContext, basis: Optional[Sequence[AntisymMatrix]]
) -> AntisymMatrix:
    phi = np.asarray(phi, dtype=np.float64)
    basis = _cached_basis(ctx.n) if basis is None else basis
    egrad = euclidean_gradient(phi, ctx)
    grad = np.zeros_like(phi)
    for e in basis:
        grad += frobenius(egrad, phi @ e) * e
    return grad


def stiefel_gradient(
    phi: OrthoMatrix, ctx: CostContext, basis: Optional[Sequence[AntisymMatrix]] = None
) -> AntisymMatrix:
    """Sum over an orthonormal basis e_j of o(n) of grad f_Phi(Phi e_j) e_j."""
    _require(ctx, ManifoldKind.STIEFEL)
    return _riemannian_gradient(phi, ctx, basis)


def grassmann_gradient(
    phi: OrthoMatrix, ctx: CostContext, basis: Optional[Sequence[AntisymMatrix]] = None
) -> AntisymMatrix:
    _require(ctx, ManifoldKind.GRASSMANN)
    return _riemannian_gradient(phi, ctx, basis)


def riemannian_gradient(
    phi: OrthoMatrix, ctx: CostContext, basis: Optional[Sequence[AntisymMatrix]] = None
) -> AntisymMatrix:
    if ctx.manifold == ManifoldKind.STIEFEL:
        return stiefel_gradient(phi, ctx, basis)
    return grassmann_gradient(phi, ctx, basis)
