import json
from pathlib import Path

import numpy as np
import pytest

from manifold_ar.config import ManifoldKind
from manifold_ar.errors import (
    ConfigError,
    InsufficientDataError,
    InvalidInputError,
    OutOfChartError,
)
from manifold_ar.harness import sweep
from manifold_ar.harness.export import export_to_csv
from manifold_ar.harness.sweep import (
    fit_slope,
    load_sweep_config,
    mean_by,
    run_sweep,
    run_trial,
    trend,
)
from manifold_ar.models import ResultRow, SweepConfig

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def orthogonal_config(**kwargs):
    params = dict(
        manifold=ManifoldKind.ORTHOGONAL,
        n=[3],
        steps=[5, 10],
        sigma=[0.0],
        trials=3,
        master_seed=7,
        record_runtime=False,
    )
    params.update(kwargs)
    return SweepConfig(**params)


def stiefel_config(**kwargs):
    params = dict(
        manifold=ManifoldKind.STIEFEL,
        n=[4],
        k=[2],
        steps=[10],
        sigma=[0.01],
        trials=2,
        master_seed=3,
        record_runtime=False,
    )
    params.update(kwargs)
    return SweepConfig(**params)


def synthetic_rows(xs, errors, field="N"):
    rows = []
    for trial, (x, error) in enumerate(zip(xs, errors)):
        values = dict(n=5, k=2, N=100, sigma=0.1)
        values[field] = x
        rows.append(
            ResultRow(
                manifold=ManifoldKind.STIEFEL, trial=trial, seed=trial, error=error, **values
            )
        )
    return rows


def test_noise_free_orthogonal_sweep():
    rows = run_sweep(orthogonal_config(), progress=False)
    assert len(rows) == 6
    assert [(r.N, r.trial) for r in rows] == [(5, 0), (5, 1), (5, 2), (10, 0), (10, 1), (10, 2)]
    for row in rows:
        assert row.error <= 1e-8
        assert row.converged
        assert row.runtime_ms == 0.0
        assert row.manifold == ManifoldKind.ORTHOGONAL
        assert row.k == 3


def test_sweep_is_reproducible():
    cfg = stiefel_config()
    first = export_to_csv(run_sweep(cfg, progress=False))
    second = export_to_csv(run_sweep(cfg, progress=False))
    assert first == second


def test_workers_do_not_change_results():
    serial = run_sweep(stiefel_config(sigma=[0.01, 0.02]), progress=False)
    threaded = run_sweep(stiefel_config(sigma=[0.01, 0.02], workers=2), progress=False)
    assert serial == threaded


def test_trial_depends_only_on_its_own_values():
    cfg = stiefel_config()
    cell = cfg.cells()[0]
    alone = run_trial(cfg, cell, 1)
    wider = stiefel_config(sigma=[0.005, 0.01])
    rows = run_sweep(wider, progress=False)
    matching = [r for r in rows if r.sigma == 0.01 and r.trial == 1]
    assert matching == [alone]


def test_trial_seeds_are_distinct():
    cfg = orthogonal_config(steps=[5, 10, 20], trials=4)
    seeds = {sweep.trial_seed(cfg, cell, t) for cell in cfg.cells() for t in range(cfg.trials)}
    assert len(seeds) == 12


def test_failed_trial_is_recorded(monkeypatch):
    def broken(*args, **kwargs):
        raise OutOfChartError("boom", step=3)

    monkeypatch.setattr(sweep, "estimate", broken)
    rows = run_sweep(orthogonal_config(steps=[5], trials=2), progress=False)
    assert len(rows) == 2
    for row in rows:
        assert row.error is None
        assert row.final_cost is None
        assert not row.converged


def test_mean_by_skips_failed_trials():
    rows = synthetic_rows([10, 10, 20], [0.2, None, 0.1])
    assert mean_by(rows, "N") == {10: 0.2, 20: 0.1}
    with pytest.raises(InvalidInputError):
        mean_by(rows, "trial")


def test_fit_slope_recovers_power_law():
    xs = [25, 50, 100, 200, 400]
    slope, stderr = fit_slope(synthetic_rows(xs, [2.0 * x**-0.5 for x in xs]), "N")
    assert slope == pytest.approx(-0.5, abs=1e-10)
    assert stderr == pytest.approx(0.0, abs=1e-8)

    sigmas = [0.001, 0.01, 0.1]
    slope, _ = fit_slope(synthetic_rows(sigmas, [3.0 * s for s in sigmas], "sigma"), "sigma")
    assert slope == pytest.approx(1.0, abs=1e-10)


def test_fit_slope_needs_three_values():
    with pytest.raises(InsufficientDataError):
        fit_slope(synthetic_rows([10, 20], [0.1, 0.05]), "N")


def test_fit_slope_needs_positive_errors():
    with pytest.raises(InvalidInputError):
        fit_slope(synthetic_rows([10, 20, 40], [0.1, 0.0, 0.05]), "N")


def test_trend():
    rows = synthetic_rows([5, 10, 15, 20], [0.1, 0.2, 0.25, 0.4], "n")
    assert trend(rows, "n") == pytest.approx(1.0)
    rows = synthetic_rows([5, 10, 15], [0.3, 0.2, 0.1], "n")
    assert trend(rows, "n") == pytest.approx(-1.0)
    with pytest.raises(InsufficientDataError):
        trend(synthetic_rows([5], [0.1], "n"), "n")


def test_load_sweep_config_with_overrides_and_defaults(tmp_path):
    path = tmp_path / "sweep.json"
    path.write_text(
        json.dumps({"manifold": "stiefel", "n": [6], "k": [2], "steps": [10], "sigma": [0.1]})
    )
    cfg = load_sweep_config(path, {"trials": 4, "sigma": [0.2, 0.3], "n": None})
    assert cfg.trials == 4
    assert cfg.sigma == [0.2, 0.3]
    assert cfg.n == [6]

    cfg = load_sweep_config(path, defaults={"workers": 3})
    assert cfg.workers == 3

    path.write_text(
        json.dumps(
            {"manifold": "stiefel", "n": [6], "k": [2], "steps": [10], "sigma": [0.1], "workers": 2}
        )
    )
    cfg = load_sweep_config(path, {"workers": None}, defaults={"workers": 3})
    assert cfg.workers == 2


@pytest.mark.parametrize(
    "text",
    [
        "{not json",
        "[1, 2]",
        json.dumps({"manifold": "stiefel", "n": [4], "k": [4], "steps": [10], "sigma": [0.1]}),
        json.dumps({"manifold": "sphere", "n": [4], "steps": [10], "sigma": [0.1]}),
        json.dumps({"manifold": "grassmann", "n": [4], "steps": [10], "sigma": [0.1]}),
    ],
)
def test_load_sweep_config_errors(tmp_path, text):
    path = tmp_path / "sweep.json"
    path.write_text(text)
    with pytest.raises(ConfigError):
        load_sweep_config(path)


def test_missing_sweep_config(tmp_path):
    with pytest.raises(OSError):
        load_sweep_config(tmp_path / "absent.json")


@pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_configs_load(path):
    cfg = load_sweep_config(path)
    assert cfg.trials == 10
    assert len(cfg.cells()) >= 3
    assert np.all(np.array(cfg.sigma) > 0)
