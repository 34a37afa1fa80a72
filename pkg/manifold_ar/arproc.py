"""AR(1) processes on O(n), St(n,k) and Gr(n,k) and their Karcher means."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from manifold_ar.config import ManifoldKind
from manifold_ar.core.manifolds import (
    GrassmannPoint,
    ManifoldPoint,
    StiefelPoint,
    StiefelTangent,
    apply_group,
    canonical_norm,
    distance,
    grassmann_exp,
    grassmann_log_approx,
    stiefel_exp,
    stiefel_log_approx,
)
from manifold_ar.core.matcore import (
    OrthoMatrix,
    expm,
    logm_so,
    reorthonormalize,
    sample_antisym,
    stiefel_identity,
)
from manifold_ar.errors import DimensionError, InvalidInputError, NonConvergenceError
from manifold_ar.models import ProcessSpec, Trajectory

logger = logging.getLogger(__name__)

REPAIR_PERIOD = 1000
KARCHER_TOL = 1e-10
KARCHER_MAX_ITER = 200


def sample_system_parameter(n: int, scale: float, rng: np.random.Generator) -> OrthoMatrix:
    """
    Draw Phi = expm(s X / ||X||_F) with X uniform in direction on o(n) and
    s = |N(0, scale^2)|, so that dist(Phi, I_n) = s.
    """
    if scale <= 0:
        raise InvalidInputError(f"scale must be positive, got {scale}")
    if n < 2:
        raise DimensionError(f"o(n) is trivial for n={n}")
    direction = sample_antisym(n, 1.0, rng)
    magnitude = abs(rng.normal(0.0, scale))
    return expm(magnitude * direction / np.linalg.norm(direction))


def initial_point(kind: ManifoldKind, n: int, k: int) -> np.ndarray:
    """Canonical start point: I_n on O(n), I_{n,k} otherwise."""
    if kind == ManifoldKind.ORTHOGONAL:
        return np.eye(n)
    return stiefel_identity(n, k)


def random_stiefel_point(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    return reorthonormalize(rng.standard_normal((n, k)))


def _wrap(kind: ManifoldKind, y: np.ndarray) -> ManifoldPoint:
    if kind == ManifoldKind.STIEFEL:
        return StiefelPoint(y)
    if kind == ManifoldKind.GRASSMANN:
        return GrassmannPoint(y)
    return y


def _unwrap(p: ManifoldPoint) -> np.ndarray:
    return p.y if isinstance(p, (StiefelPoint, GrassmannPoint)) else p


def simulate_ar1(spec: ProcessSpec) -> Trajectory:
    """Generate Z_0 = p, Z_j = expm(eps_j) Phi Z_{j-1} with fresh noise per step."""
    rng = np.random.default_rng(spec.seed)
    n = spec.n
    z = _wrap(spec.manifold, spec.initial_point)
    points = [spec.initial_point.copy()]
    for j in range(1, spec.steps + 1):
        eps = sample_antisym(n, spec.sigma, rng)
        z = apply_group(expm(eps) @ spec.phi, z)
        if j % REPAIR_PERIOD == 0:
            z = _wrap(spec.manifold, reorthonormalize(_unwrap(z)))
        points.append(_unwrap(z))
    logger.debug(
        "Simulated %s trajectory n=%d k=%d N=%d sigma=%g",
        spec.manifold.value,
        n,
        spec.k,
        spec.steps,
        spec.sigma,
    )
    return Trajectory(
        manifold=spec.manifold,
        n=n,
        k=spec.k,
        sigma=spec.sigma,
        seed=spec.seed,
        phi_true=spec.phi,
        points=points,
    )


@dataclass
class KarcherResult:
    """Last iterate of a Karcher iteration and its stationarity residual."""

    point: ManifoldPoint
    iterations: int
    residual: float
    converged: bool


def _tangent_norm(m: ManifoldPoint, v: np.ndarray) -> float:
    if isinstance(m, StiefelPoint):
        return canonical_norm(m, StiefelTangent(m, v))
    return float(np.linalg.norm(v))


def karcher_mean_points(
    points: Sequence[ManifoldPoint],
    tol: float = KARCHER_TOL,
    max_iter: int = KARCHER_MAX_ITER,
) -> KarcherResult:
    """
    Fixed-point iteration m <- exp_m(mean_i log_m(p_i)), started at points[0].

    On O(n) the chart is left translation composed with expm/logm_so; on
    St(n,k) and Gr(n,k) it is the exponential with the Pade logarithm.
    The residual is the length of the mean tangent, in the canonical metric
    on St(n,k) and the Frobenius norm elsewhere. Non-convergence is
    reported through `converged`, not raised.
    """
    if not points:
        raise InvalidInputError("Karcher mean of an empty set")
    first = points[0]
    if isinstance(first, GrassmannPoint):
        log_map, exp_map = grassmann_log_approx, grassmann_exp
    elif isinstance(first, StiefelPoint):
        log_map, exp_map = stiefel_log_approx, stiefel_exp
    else:
        log_map = exp_map = None

    m = first
    residual = float("inf")
    for iteration in range(1, max_iter + 1):
        if log_map is None:
            mean = sum(logm_so(m.T @ p) for p in points) / len(points)
        else:
            mean = sum(log_map(m, p).d for p in points) / len(points)
        residual = _tangent_norm(m, mean)
        if residual < tol:
            logger.debug("Karcher mean converged in %d iterations", iteration)
            return KarcherResult(m, iteration, residual, True)
        if log_map is None:
            m = m @ expm(mean)
        else:
            m = exp_map(m, StiefelTangent(m, mean))

    logger.debug("Karcher mean stopped after %d iterations, residual %.3e", max_iter, residual)
    return KarcherResult(m, max_iter, residual, False)


def empirical_mean_check(
    phi: OrthoMatrix,
    z0: ManifoldPoint,
    sigma: float,
    samples: int,
    rng: np.random.Generator,
    tol: float = KARCHER_TOL,
    max_iter: int = KARCHER_MAX_ITER,
) -> float:
    """
    Distance between the Karcher mean of one-step samples expm(eps) Phi z0
    and Phi z0.

    Raises:
        NonConvergenceError: the Karcher iteration did not reach tol.
    """
    if samples < 2:
        raise InvalidInputError(f"need at least two samples, got {samples}")
    phi = np.asarray(phi, dtype=np.float64)
    n = phi.shape[0]
    draws = [
        apply_group(expm(sample_antisym(n, sigma, rng)) @ phi, z0) for _ in range(samples)
    ]
    result = karcher_mean_points(draws, tol=tol, max_iter=max_iter)
    if not result.converged:
        raise NonConvergenceError(
            f"Karcher mean did not converge (residual {result.residual:.3e})"
        )
    return distance(result.point, apply_group(phi, z0))


def save_trajectory(traj: Trajectory, path: Union[str, Path]) -> None:
    Path(path).write_text(traj.model_dump_json())


def load_trajectory(path: Union[str, Path]) -> Trajectory:
    return Trajectory.model_validate_json(Path(path).read_text())
