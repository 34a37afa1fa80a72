import logging
from typing import Optional

from manifold_ar.arproc import KARCHER_MAX_ITER, KARCHER_TOL
from manifold_ar.config import EstimatorKind
from manifold_ar.core.matcore import OrthoMatrix
from manifold_ar.models import CGSettings, EstimateReport, Trajectory
from manifold_ar.sysid.cg import estimate_cg
from manifold_ar.sysid.orthogonal import estimate_orthogonal

logger = logging.getLogger(__name__)


def estimate(
    trajectory: Trajectory,
    phi0: Optional[OrthoMatrix] = None,
    cg: Optional[CGSettings] = None,
    karcher_tol: float = KARCHER_TOL,
    karcher_max_iter: int = KARCHER_MAX_ITER,
) -> EstimateReport:
    """Run the estimator that fits the trajectory's manifold."""
    kind = EstimatorKind.for_manifold(trajectory.manifold)
    logger.debug(
        "Estimating Phi with %s on a %s trajectory", kind.value, trajectory.manifold.value
    )
    if kind == EstimatorKind.BARYCENTRE:
        if phi0 is not None:
            logger.debug("phi0 is ignored by the barycentre estimator")
        return estimate_orthogonal(trajectory, tol=karcher_tol, max_iter=karcher_max_iter)
    return estimate_cg(trajectory, phi0=phi0, settings=cg)
