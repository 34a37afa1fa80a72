"""Finite-difference audit of the analytic cost derivatives."""

import logging
from typing import List

import numpy as np
from pydantic import BaseModel

from manifold_ar.arproc import random_stiefel_point, sample_system_parameter, simulate_ar1
from manifold_ar.config import ManifoldKind
from manifold_ar.core.matcore import derive_rng, expm, frobenius, sample_antisym
from manifold_ar.errors import InvalidInputError
from manifold_ar.models import ProcessSpec
from manifold_ar.sysid.costs import (
    CostContext,
    cost,
    directional_derivative,
    riemannian_gradient,
)

logger = logging.getLogger(__name__)

DEFAULT_STEP = 1e-5
DEFAULT_RTOL = 1e-5


class GradientCheck(BaseModel):
    """One random configuration of the audit."""

    manifold: ManifoldKind
    config: int
    finite_difference: float
    analytic: float
    gradient_pairing: float
    relative_error: float
    passed: bool


def _relative(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-8)


def check_gradients(
    kind: ManifoldKind,
    n: int = 6,
    k: int = 2,
    steps: int = 5,
    configs: int = 20,
    h: float = DEFAULT_STEP,
    seed: int = 0,
    rtol: float = DEFAULT_RTOL,
) -> List[GradientCheck]:
    """
    Compare the analytic derivative of the cost along Phi expm(t E) with a
    central difference of step h, for random trajectories, Phi and E.

    Both the directional derivative and the pairing <grad, E> of the
    Riemannian gradient with the unit direction E are checked.
    """
    if kind == ManifoldKind.ORTHOGONAL:
        raise InvalidInputError("the gradient audit applies to stiefel and grassmann costs")
    results = []
    for config in range(configs):
        rng = derive_rng(seed, config)
        phi_true = sample_system_parameter(n, 0.5, rng)
        spec = ProcessSpec(
            manifold=kind,
            phi=phi_true,
            sigma=0.1,
            steps=steps,
            initial_point=random_stiefel_point(n, k, rng),
            seed=int(rng.integers(2**63)),
        )
        ctx = CostContext(simulate_ar1(spec))
        phi = phi_true @ expm(sample_antisym(n, 0.1, rng))
        e = sample_antisym(n, 1.0, rng)
        e /= np.linalg.norm(e)

        forward = cost(phi @ expm(h * e), ctx)
        backward = cost(phi @ expm(-h * e), ctx)
        fd = (forward - backward) / (2.0 * h)
        analytic = directional_derivative(phi, phi @ e, ctx)
        pairing = frobenius(riemannian_gradient(phi, ctx), e)
        error = max(_relative(fd, analytic), _relative(analytic, pairing))
        results.append(
            GradientCheck(
                manifold=kind,
                config=config,
                finite_difference=fd,
                analytic=analytic,
                gradient_pairing=pairing,
                relative_error=error,
                passed=error <= rtol,
            )
        )
        logger.debug("Gradient check %s #%d: relative error %.3e", kind.value, config, error)
    return results
