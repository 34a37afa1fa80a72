"""Barycentre estimation of Phi from an O(n) trajectory."""

import logging
from typing import List

import numpy as np

from manifold_ar.arproc import KARCHER_MAX_ITER, KARCHER_TOL, karcher_mean_points
from manifold_ar.config import ManifoldKind
from manifold_ar.core.manifolds import ortho_dist
from manifold_ar.core.matcore import OrthoMatrix, logm_so
from manifold_ar.errors import InvalidInputError, ManifoldARError
from manifold_ar.models import EstimateReport, Trajectory
from manifold_ar.utils import Stopwatch

logger = logging.getLogger(__name__)


def stepwise_estimates(trajectory: Trajectory) -> List[OrthoMatrix]:
    """Phi_l = Y_{l+1} Y_l^T for every transition of the trajectory."""
    if trajectory.manifold != ManifoldKind.ORTHOGONAL:
        raise InvalidInputError(
            "step-wise inversion needs an orthogonal trajectory, "
            f"got {trajectory.manifold.value}"
        )
    return [nxt @ prev.T for prev, nxt in zip(trajectory.points[:-1], trajectory.points[1:])]


def estimate_orthogonal(
    trajectory: Trajectory, tol: float = KARCHER_TOL, max_iter: int = KARCHER_MAX_ITER
) -> EstimateReport:
    """
    Karcher mean of the step-wise estimates.

    Args:
        trajectory (Trajectory): Observations on O(n).
        tol (float): Stop once the mean tangent has norm below tol.
        max_iter (int): Karcher iteration budget.

    Returns:
        EstimateReport: final_cost is the Frechet objective sum_l dist(Phi_hat, Phi_l)^2;
        `converged` is False when the budget ran out.

    Raises:
        InvalidInputError: the trajectory is not on O(n).
        BranchAmbiguityError: a step-wise estimate is a rotation by pi relative
            to the current mean.
    """
    watch = Stopwatch()
    with watch.running():
        estimates = stepwise_estimates(trajectory)
        result = karcher_mean_points(estimates, tol=tol, max_iter=max_iter)
        phi_hat = result.point
        final_cost = float(
            sum(np.sum(logm_so(phi_hat.T @ p) ** 2) for p in estimates)
        )

    if not result.converged:
        logger.warning(
            "Barycentre did not converge in %d iterations (residual %.3e)",
            result.iterations,
            result.residual,
        )

    error = None
    if trajectory.phi_true is not None:
        try:
            error = ortho_dist(trajectory.phi_true, phi_hat)
        except ManifoldARError as e:
            logger.warning("Cannot measure estimation error: %s", e)

    logger.info(
        "Barycentre on O(%d), N=%d: %d iterations, residual %.3e",
        trajectory.n,
        trajectory.steps,
        result.iterations,
        result.residual,
    )
    return EstimateReport(
        phi_hat=phi_hat,
        error=error,
        final_cost=final_cost,
        outer_iterations=result.iterations,
        inner_steps=len(estimates),
        converged=result.converged,
        tolerance_used=tol,
        wall_time=watch.elapsed,
    )
