"""Conjugate-gradient estimation of Phi on St(n,k) and Gr(n,k)."""

import logging
import math
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from manifold_ar.core.manifolds import ortho_dist
from manifold_ar.core.matcore import (
    AntisymMatrix,
    OrthoMatrix,
    check_orthogonal,
    expm,
    frobenius,
    gram_schmidt,
)
from manifold_ar.errors import (
    DegenerateDirectionError,
    LineSearchError,
    ManifoldARError,
    OutOfChartError,
)
from manifold_ar.models import CGSettings, EstimateReport, Trajectory
from manifold_ar.sysid.costs import CostContext, cost, riemannian_gradient
from manifold_ar.utils import Stopwatch

logger = logging.getLogger(__name__)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
GRADIENT_FLOOR = 1e-14
# decreases below COST_NOISE per observed column are rounding, not progress
COST_NOISE = 1e-14
# step-length bracket of the line search
MAX_RADIUS = math.pi
BRACKET_EDGE = 0.999
WIDEN = 10.0
NARROW = 100.0
RADIUS_FACTOR = 4.0


def line_search(
    g: Callable[[float], float], grid_size: int = 51, width: float = 1e-10
) -> Tuple[float, float]:
    """
    Minimise g on [-1, 1]: uniform grid (tau = 0 always a node), then
    golden-section refinement on the bracket around the best node.

    Points where g raises OutOfChartError are treated as infeasible. The
    returned value never exceeds g(0).

    Raises:
        LineSearchError: g returned a non-finite value.
    """

    def evaluate(tau: float) -> float:
        try:
            value = g(tau)
        except OutOfChartError:
            logger.debug("Line search point tau=%.6f is out of chart", tau)
            return math.inf
        if not math.isfinite(value):
            raise LineSearchError(tau, value)
        return value

    taus = np.linspace(-1.0, 1.0, grid_size)
    taus[grid_size // 2] = 0.0
    values = np.array([evaluate(float(t)) for t in taus])
    best_value = float(values.min())
    ties = np.flatnonzero(values == best_value)
    best = int(ties[np.argmin(np.abs(taus[ties]))])
    best_tau = float(taus[best])

    lo = float(taus[max(best - 1, 0)])
    hi = float(taus[min(best + 1, grid_size - 1)])
    c = hi - GOLDEN * (hi - lo)
    d = lo + GOLDEN * (hi - lo)
    fc, fd = evaluate(c), evaluate(d)
    while hi - lo > width:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - GOLDEN * (hi - lo)
            fc = evaluate(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + GOLDEN * (hi - lo)
            fd = evaluate(d)

    refined = 0.5 * (lo + hi)
    refined_value = evaluate(refined)
    if refined_value < best_value:
        return refined, refined_value
    return best_tau, best_value


def _rotate(phi: OrthoMatrix, length: float, unit: AntisymMatrix) -> OrthoMatrix:
    return phi @ expm(-length * unit)


def _search_direction(
    phi: OrthoMatrix,
    direction: AntisymMatrix,
    ctx: CostContext,
    current: float,
    target: float,
    radius: float,
    settings: CGSettings,
) -> Tuple[OrthoMatrix, float, float, float]:
    """
    Line search for Phi expm(-tau Delta) with the grid on [-1, 1] mapped to
    step lengths in [-radius, radius]. The bracket widens while the best
    point sits on its edge, or narrows while nothing gets below `target`;
    it never does both.

    Returns (new Phi, tau, value, radius of the last search).
    """
    norm = float(np.linalg.norm(direction))
    unit = direction / norm
    best_step, best_value = 0.0, current
    widened = narrowed = False
    while True:
        scale = radius
        t, value = line_search(
            lambda s: cost(_rotate(phi, s * scale, unit), ctx), settings.grid_size
        )
        if value < best_value:
            best_step, best_value = t * scale, value
        if abs(t) >= BRACKET_EDGE and radius < MAX_RADIUS and not narrowed:
            radius = min(radius * WIDEN, MAX_RADIUS)
            widened = True
        elif best_value >= target and radius > settings.tol and not widened:
            radius /= NARROW
            narrowed = True
        else:
            break
    return _rotate(phi, best_step, unit), best_step / norm, best_value, radius


def estimate_cg(
    trajectory: Trajectory,
    phi0: Optional[OrthoMatrix] = None,
    settings: Optional[CGSettings] = None,
    basis: Optional[Sequence[AntisymMatrix]] = None,
) -> EstimateReport:
    """
    Minimise the approximate cost over O(n) by sweeps of conjugate steps
    Phi <- Phi expm(-tau Delta).

    Each new gradient is Gram-Schmidt orthogonalised against the directions
    of the current sweep in the curvature pairing, with H Delta_j estimated
    from the change of gradient across step j. A sweep restarts from the
    plain gradient after `restart_period` directions, on a degenerate or
    non-descent direction, on lost curvature, or as soon as a step has
    ||Delta|| |tau| < tol. The run has converged when the first step of a
    sweep meets the tolerance or the gradient vanishes.
    """
    settings = settings or CGSettings()
    ctx = CostContext(trajectory)
    n = trajectory.n
    phi = np.eye(n) if phi0 is None else check_orthogonal(phi0).copy()
    period = settings.period_for(n)

    watch = Stopwatch()
    converged = False
    sweeps = 0
    inner_steps = 0
    radius = 1.0
    min_decrease = COST_NOISE * ctx.prev.shape[0] * ctx.k
    with watch.running():
        current = cost(phi, ctx)
        history = [current]
        while sweeps < settings.max_outer and not converged:
            sweeps += 1
            directions: List[AntisymMatrix] = []
            curvatures: List[AntisymMatrix] = []
            last = None
            for inner in range(period):
                grad = riemannian_gradient(phi, ctx, basis)
                if np.linalg.norm(grad) <= GRADIENT_FLOOR:
                    converged = True
                    break
                if last is not None:
                    last_direction, last_grad, last_tau = last
                    curvature = (last_grad - grad) / last_tau
                    if frobenius(curvature, last_direction) <= 0.0:
                        logger.debug(
                            "Non-positive curvature at sweep %d step %d, restarting",
                            sweeps,
                            inner,
                        )
                        break
                    directions.append(last_direction)
                    curvatures.append(curvature)
                try:
                    direction = gram_schmidt(grad, directions, curvatures)
                except DegenerateDirectionError:
                    logger.debug(
                        "Degenerate direction at sweep %d step %d, restarting",
                        sweeps,
                        inner,
                    )
                    break
                if frobenius(direction, grad) <= 0.0:
                    logger.debug(
                        "Ascent direction at sweep %d step %d, restarting",
                        sweeps,
                        inner,
                    )
                    break

                candidate, tau, value, radius = _search_direction(
                    phi,
                    direction,
                    ctx,
                    current,
                    current - min_decrease,
                    radius,
                    settings,
                )
                inner_steps += 1
                if value < current - min_decrease:
                    phi = candidate
                    current = value
                    last = (direction, grad, tau)
                else:
                    tau = 0.0
                history.append(current)

                step = float(np.linalg.norm(direction)) * abs(tau)
                if step < settings.tol:
                    converged = inner == 0
                    break
                radius = min(MAX_RADIUS, max(RADIUS_FACTOR * step, settings.tol))
            logger.debug(
                "Sweep %d: cost %.6e after %d steps", sweeps, current, inner_steps
            )

    error = None
    if trajectory.phi_true is not None:
        try:
            error = ortho_dist(trajectory.phi_true, phi)
        except ManifoldARError as e:
            logger.warning("Cannot measure estimation error: %s", e)

    logger.info(
        "CG on %s(n=%d, k=%d, N=%d): cost %.3e, %d sweeps, converged=%s",
        trajectory.manifold.value,
        n,
        trajectory.k,
        trajectory.steps,
        current,
        sweeps,
        converged,
    )
    return EstimateReport(
        phi_hat=phi,
        error=error,
        final_cost=current,
        outer_iterations=sweeps,
        inner_steps=inner_steps,
        converged=converged,
        tolerance_used=settings.tol,
        wall_time=watch.elapsed,
        cost_history=history,
    )
