import numpy as np
import pytest

from manifold_ar.config import ManifoldKind
from manifold_ar.core.matcore import expm, sample_antisym
from manifold_ar.errors import InvalidInputError
from manifold_ar.sysid.orthogonal import estimate_orthogonal, stepwise_estimates


def test_stepwise_estimates_without_noise(rng, trajectory_factory, rotation_factory):
    phi = rotation_factory(4, 0.5, rng)
    traj = trajectory_factory(ManifoldKind.ORTHOGONAL, 4, 4, 7, 0.0, phi)
    estimates = stepwise_estimates(traj)
    assert len(estimates) == 7
    for p in estimates:
        np.testing.assert_allclose(p, phi, atol=1e-12)


def test_noise_free_estimate_is_exact(rng, trajectory_factory, rotation_factory):
    phi = rotation_factory(5, 0.5, rng)
    start = expm(sample_antisym(5, 1.0, rng))
    traj = trajectory_factory(ManifoldKind.ORTHOGONAL, 5, 5, 25, 0.0, phi, start=start)
    report = estimate_orthogonal(traj)
    assert report.converged
    assert report.error <= 1e-10
    assert report.final_cost <= 1e-18
    assert report.inner_steps == 25


def test_single_step_error_is_noise_norm(rng, trajectory_factory, rotation_factory):
    phi = rotation_factory(4, 0.2, rng)
    traj = trajectory_factory(ManifoldKind.ORTHOGONAL, 4, 4, 1, 0.05, phi, seed=17)
    eps = sample_antisym(4, 0.05, np.random.default_rng(17))
    report = estimate_orthogonal(traj)
    np.testing.assert_allclose(report.phi_hat, expm(eps) @ phi, atol=1e-12)
    assert report.error == pytest.approx(np.linalg.norm(eps), rel=1e-9)


def test_estimate_does_not_depend_on_start_point(rng, trajectory_factory, rotation_factory):
    phi = rotation_factory(4, 0.2, rng)
    start = expm(sample_antisym(4, 1.0, rng))
    a = trajectory_factory(ManifoldKind.ORTHOGONAL, 4, 4, 40, 0.1, phi, seed=4)
    b = trajectory_factory(ManifoldKind.ORTHOGONAL, 4, 4, 40, 0.1, phi, seed=4, start=start)
    np.testing.assert_allclose(
        estimate_orthogonal(a).phi_hat, estimate_orthogonal(b).phi_hat, atol=1e-10
    )


def test_error_shrinks_with_length(trajectory_factory):
    rng = np.random.default_rng(2)
    phi = expm(sample_antisym(5, 0.05, rng))
    errors = {}
    for steps in (50, 800):
        errors[steps] = np.mean(
            [
                estimate_orthogonal(
                    trajectory_factory(ManifoldKind.ORTHOGONAL, 5, 5, steps, 0.1, phi, seed=s)
                ).error
                for s in range(10)
            ]
        )
    assert errors[800] < 0.5 * errors[50]


def test_budget_exhaustion_is_reported(rng, trajectory_factory, rotation_factory):
    phi = rotation_factory(4, 0.2, rng)
    traj = trajectory_factory(ManifoldKind.ORTHOGONAL, 4, 4, 30, 0.2, phi, seed=6)
    report = estimate_orthogonal(traj, tol=1e-14, max_iter=1)
    assert not report.converged
    assert report.outer_iterations == 1


def test_rejects_frame_trajectory(trajectory_factory):
    traj = trajectory_factory(ManifoldKind.STIEFEL, 4, 2, 5, 0.1, np.eye(4))
    with pytest.raises(InvalidInputError):
        estimate_orthogonal(traj)
