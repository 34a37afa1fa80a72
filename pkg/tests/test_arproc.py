import math

import numpy as np
import pytest
from scipy import stats

from manifold_ar.arproc import (
    empirical_mean_check,
    initial_point,
    karcher_mean_points,
    load_trajectory,
    random_stiefel_point,
    sample_system_parameter,
    save_trajectory,
)
from manifold_ar.config import ManifoldKind
from manifold_ar.core.manifolds import (
    GrassmannPoint,
    StiefelPoint,
    StiefelTangent,
    canonical_norm,
    distance,
    ortho_dist,
    stiefel_log_approx,
)
from manifold_ar.core.matcore import expm, logm_so, sample_antisym, stiefel_identity
from manifold_ar.errors import DimensionError, InvalidInputError, NonConvergenceError
from manifold_ar.models import ProcessSpec


def test_sample_system_parameter_is_rotation(rng):
    for _ in range(20):
        phi = sample_system_parameter(5, 0.01, rng)
        assert np.linalg.det(phi) == pytest.approx(1.0)
        np.testing.assert_allclose(phi @ phi.T, np.eye(5), atol=1e-12)


def test_sample_system_parameter_small_scale(rng):
    phi = sample_system_parameter(4, 1e-12, rng)
    np.testing.assert_allclose(phi, np.eye(4), atol=1e-10)


def test_sample_system_parameter_half_normal_spread():
    rng = np.random.default_rng(11)
    dists = [ortho_dist(sample_system_parameter(3, 0.01, rng), np.eye(3)) for _ in range(10_000)]
    assert np.std(dists) == pytest.approx(0.01 * math.sqrt(1.0 - 2.0 / math.pi), rel=0.05)


def test_sample_system_parameter_validation(rng):
    with pytest.raises(InvalidInputError):
        sample_system_parameter(3, 0.0, rng)
    with pytest.raises(DimensionError):
        sample_system_parameter(1, 0.1, rng)


def test_noise_free_orthogonal_recursion(rng, trajectory_factory, rotation_factory):
    phi = rotation_factory(4, 0.3, rng)
    p = expm(sample_antisym(4, 1.0, rng))
    traj = trajectory_factory(ManifoldKind.ORTHOGONAL, 4, 4, 100, 0.0, phi, start=p)
    np.testing.assert_allclose(traj.points[2], phi @ phi @ p, atol=1e-12)
    for j in (10, 50, 100):
        np.testing.assert_allclose(traj.points[j], np.linalg.matrix_power(phi, j) @ p, atol=1e-10)


def test_noise_free_stiefel_recursion(rng, trajectory_factory, rotation_factory):
    phi = rotation_factory(6, 0.2, rng)
    traj = trajectory_factory(ManifoldKind.STIEFEL, 6, 2, 30, 0.0, phi)
    np.testing.assert_allclose(
        traj.points[30], np.linalg.matrix_power(phi, 30) @ stiefel_identity(6, 2), atol=1e-10
    )


def test_identity_noise_free_trajectory_is_constant(trajectory_factory):
    traj = trajectory_factory(ManifoldKind.GRASSMANN, 5, 2, 10, 0.0, np.eye(5))
    for point in traj.points:
        np.testing.assert_array_equal(point, stiefel_identity(5, 2))


def test_simulation_is_deterministic(rng, trajectory_factory, rotation_factory):
    phi = rotation_factory(5, 0.1, rng)
    a = trajectory_factory(ManifoldKind.STIEFEL, 5, 2, 20, 0.05, phi, seed=9)
    b = trajectory_factory(ManifoldKind.STIEFEL, 5, 2, 20, 0.05, phi, seed=9)
    for p, q in zip(a.points, b.points):
        np.testing.assert_array_equal(p, q)
    assert a.seed == 9 and a.sigma == 0.05
    np.testing.assert_array_equal(a.phi_true, phi)


def test_long_simulation_stays_orthonormal(trajectory_factory):
    traj = trajectory_factory(ManifoldKind.STIEFEL, 4, 2, 2500, 0.1, np.eye(4), seed=1)
    last = traj.points[-1]
    np.testing.assert_allclose(last.T @ last, np.eye(2), atol=1e-12)


def test_process_spec_validation():
    with pytest.raises(ValueError):
        ProcessSpec(
            manifold=ManifoldKind.STIEFEL,
            phi=2.0 * np.eye(3),
            sigma=0.1,
            steps=3,
            initial_point=stiefel_identity(3, 1),
            seed=0,
        )
    with pytest.raises(ValueError):
        ProcessSpec(
            manifold=ManifoldKind.STIEFEL,
            phi=np.eye(3),
            sigma=-0.1,
            steps=3,
            initial_point=stiefel_identity(3, 1),
            seed=0,
        )


def test_karcher_of_equal_points(rng):
    p = expm(sample_antisym(4, 1.0, rng))
    result = karcher_mean_points([p, p, p])
    assert result.converged and result.iterations == 1
    np.testing.assert_allclose(result.point, p)


def test_karcher_symmetric_pair(rng):
    p = expm(sample_antisym(5, 1.0, rng))
    x = sample_antisym(5, 1.0, rng)
    x *= 0.2 / np.linalg.norm(x)
    result = karcher_mean_points([expm(x) @ p, expm(-x) @ p])
    assert result.converged
    assert ortho_dist(result.point, p) <= 1e-9


def test_karcher_many_noisy_rotations():
    rng = np.random.default_rng(5)
    p = expm(sample_antisym(10, 1.0, rng))
    points = [expm(sample_antisym(10, 0.1, rng)) @ p for _ in range(2000)]
    result = karcher_mean_points(points)
    assert result.converged
    assert ortho_dist(result.point, p) < 0.02


def test_karcher_residual_is_stationary(rng):
    p = expm(sample_antisym(4, 1.0, rng))
    points = [expm(sample_antisym(4, 0.1, rng)) @ p for _ in range(30)]
    result = karcher_mean_points(points, tol=1e-10)
    mean = sum(logm_so(result.point.T @ q) for q in points) / len(points)
    assert np.linalg.norm(mean) < 1e-10


def test_karcher_left_equivariance(rng):
    p = expm(sample_antisym(5, 1.0, rng))
    points = [expm(sample_antisym(5, 0.2, rng)) @ p for _ in range(25)]
    phi = expm(sample_antisym(5, 1.0, rng))
    mean = karcher_mean_points(points).point
    moved = karcher_mean_points([phi @ q for q in points]).point
    np.testing.assert_allclose(moved, phi @ mean, atol=1e-8)


def test_karcher_non_convergence_is_reported(rng):
    p = expm(sample_antisym(4, 1.0, rng))
    points = [expm(sample_antisym(4, 0.3, rng)) @ p for _ in range(10)]
    result = karcher_mean_points(points, tol=1e-14, max_iter=1)
    assert not result.converged
    assert result.iterations == 1
    assert result.residual > 1e-14


def test_karcher_on_stiefel_and_grassmann(rng):
    base = random_stiefel_point(6, 2, rng)
    for point_type in (StiefelPoint, GrassmannPoint):
        points = [
            point_type(expm(sample_antisym(6, 0.02, rng)) @ base) for _ in range(20)
        ]
        result = karcher_mean_points(points)
        assert result.converged
        assert isinstance(result.point, point_type)
        assert distance(result.point, point_type(base)) < 0.05


def test_karcher_residual_on_stiefel_uses_canonical_metric(rng):
    base = StiefelPoint(random_stiefel_point(6, 2, rng))
    points = [
        StiefelPoint(expm(sample_antisym(6, 0.02, rng)) @ base.y) for _ in range(15)
    ]
    result = karcher_mean_points(points, tol=1e-10)
    assert result.converged
    m = result.point
    mean = sum(stiefel_log_approx(m, p).d for p in points) / len(points)
    assert result.residual == canonical_norm(m, StiefelTangent(m, mean))
    assert result.residual < 1e-10


def test_karcher_empty():
    with pytest.raises(InvalidInputError):
        karcher_mean_points([])


def test_empirical_mean_check_noise_free(rng):
    phi = expm(sample_antisym(5, 0.3, rng))
    assert empirical_mean_check(phi, np.eye(5), 0.0, 10, rng) <= 1e-10
    z0 = StiefelPoint(stiefel_identity(5, 2))
    assert empirical_mean_check(phi, z0, 0.0, 10, rng) <= 1e-10


def test_empirical_mean_check_reports_non_convergence(rng):
    phi = expm(sample_antisym(4, 0.3, rng))
    with pytest.raises(NonConvergenceError) as info:
        empirical_mean_check(phi, np.eye(4), 0.1, 20, rng, max_iter=1)
    assert "did not converge" in str(info.value)
    z0 = GrassmannPoint(stiefel_identity(4, 2))
    with pytest.raises(NonConvergenceError):
        empirical_mean_check(phi, z0, 0.1, 20, rng, tol=1e-12, max_iter=1)


def test_empirical_mean_check_needs_two_samples(rng):
    with pytest.raises(InvalidInputError):
        empirical_mean_check(np.eye(3), np.eye(3), 0.1, 1, rng)


def test_empirical_mean_check_shrinks_with_samples():
    rng = np.random.default_rng(21)
    phi = expm(sample_antisym(8, 0.3, rng))
    small = [empirical_mean_check(phi, np.eye(8), 0.1, 100, rng) for _ in range(20)]
    large = [empirical_mean_check(phi, np.eye(8), 0.1, 200, rng) for _ in range(20)]
    assert np.mean(large) / np.mean(small) == pytest.approx(1.0 / math.sqrt(2.0), rel=0.2)


def test_empirical_mean_check_independent_of_start_point(rng):
    phi = expm(sample_antisym(4, 0.3, rng))
    z_a = np.eye(4)
    z_b = expm(sample_antisym(4, 1.0, rng))
    rng_a = np.random.default_rng(31)
    rng_b = np.random.default_rng(31)
    a = [empirical_mean_check(phi, z_a, 0.1, 50, rng_a) for _ in range(60)]
    b = [empirical_mean_check(phi, z_b, 0.1, 50, rng_b) for _ in range(60)]
    np.testing.assert_allclose(a, b, rtol=1e-6)
    assert stats.ks_2samp(a, b).pvalue > 0.05


def test_initial_point():
    np.testing.assert_array_equal(initial_point(ManifoldKind.ORTHOGONAL, 3, 3), np.eye(3))
    np.testing.assert_array_equal(initial_point(ManifoldKind.STIEFEL, 4, 2), np.eye(4, 2))


def test_trajectory_json_round_trip(tmp_path, rng, trajectory_factory, rotation_factory):
    phi = rotation_factory(4, 0.1, rng)
    traj = trajectory_factory(ManifoldKind.GRASSMANN, 4, 2, 5, 0.1, phi, seed=42)
    path = tmp_path / "traj.json"
    save_trajectory(traj, path)
    loaded = load_trajectory(path)
    assert loaded.manifold == ManifoldKind.GRASSMANN
    assert (loaded.n, loaded.k, loaded.seed, loaded.sigma) == (4, 2, 42, 0.1)
    np.testing.assert_array_equal(loaded.phi_true, traj.phi_true)
    for p, q in zip(loaded.points, traj.points):
        np.testing.assert_array_equal(p, q)
