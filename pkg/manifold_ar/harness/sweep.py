"""
Seeded experiment sweeps over (manifold, n, k, N, sigma) and the scaling
statistics computed from their rows.
"""

import json
import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import ValidationError
from scipy import stats
from tqdm import tqdm

from manifold_ar.arproc import initial_point, sample_system_parameter, simulate_ar1
from manifold_ar.config import ManifoldKind
from manifold_ar.core.matcore import derive_rng, derive_seed
from manifold_ar.errors import (
    ConfigError,
    InsufficientDataError,
    InvalidInputError,
    ManifoldARError,
)
from manifold_ar.models import GridCell, ProcessSpec, ResultRow, SweepConfig
from manifold_ar.sysid.core import estimate
from manifold_ar.utils import Stopwatch

logger = logging.getLogger(__name__)

MANIFOLD_CODES = {
    ManifoldKind.ORTHOGONAL: 0,
    ManifoldKind.STIEFEL: 1,
    ManifoldKind.GRASSMANN: 2,
}
X_FIELDS = ("N", "sigma", "n", "k")


def load_sweep_config(
    path: Union[str, Path],
    overrides: Optional[Dict[str, Any]] = None,
    defaults: Optional[Dict[str, Any]] = None,
) -> SweepConfig:
    """
    Read a SweepConfig JSON document. `defaults` fill fields the document
    leaves out; non-None `overrides` replace fields.

    Raises:
        ConfigError: malformed JSON or invalid field values.
        OSError: the file cannot be read.
    """
    try:
        with open(path) as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"Failed to parse sweep config {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"Sweep config {path} must be a JSON object")
    data = {**(defaults or {}), **data}
    data.update({key: value for key, value in (overrides or {}).items() if value is not None})
    try:
        return SweepConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid sweep config {path}: {e}") from e


def trial_seed(cfg: SweepConfig, cell: GridCell, trial: int) -> int:
    """Seed derived from the cell's values, so grid edits leave other cells unchanged."""
    sigma_bits = int(np.float64(cell.sigma).view(np.uint64))
    return derive_seed(
        cfg.master_seed,
        MANIFOLD_CODES[cfg.manifold],
        cell.n,
        cell.k,
        cell.steps,
        sigma_bits,
        trial,
    )


def run_trial(cfg: SweepConfig, cell: GridCell, trial: int) -> ResultRow:
    """Sample Phi, simulate from the canonical start point, estimate, and score."""
    seed = trial_seed(cfg, cell, trial)
    row = dict(
        manifold=cfg.manifold,
        n=cell.n,
        k=cell.k,
        N=cell.steps,
        sigma=cell.sigma,
        trial=trial,
        seed=seed,
    )
    watch = Stopwatch()
    try:
        with watch.running():
            phi = sample_system_parameter(cell.n, cfg.phi_scale, derive_rng(seed, 0))
            spec = ProcessSpec(
                manifold=cfg.manifold,
                phi=phi,
                sigma=cell.sigma,
                steps=cell.steps,
                initial_point=initial_point(cfg.manifold, cell.n, cell.k),
                seed=derive_seed(seed, 1),
            )
            report = estimate(
                simulate_ar1(spec),
                cg=cfg.cg,
                karcher_tol=cfg.karcher_tol,
                karcher_max_iter=cfg.karcher_max_iter,
            )
        row.update(
            error=report.error,
            final_cost=report.final_cost,
            iterations=report.outer_iterations,
            converged=report.converged,
        )
    except (ManifoldARError, np.linalg.LinAlgError) as e:
        logger.warning(
            "Trial %d of cell n=%d k=%d N=%d sigma=%g failed: %s",
            trial,
            cell.n,
            cell.k,
            cell.steps,
            cell.sigma,
            e,
        )
        row.update(converged=False)
    row["runtime_ms"] = watch.elapsed * 1000.0 if cfg.record_runtime else 0.0
    return ResultRow(**row)


def _log_cell_summary(cell: GridCell, rows: Sequence[ResultRow]) -> None:
    errors = [r.error for r in rows if r.error is not None]
    mean_error = float(np.mean(errors)) if errors else float("nan")
    logger.info(
        "Cell %d (n=%d k=%d N=%d sigma=%g): mean error %.3e, %d/%d converged",
        cell.index,
        cell.n,
        cell.k,
        cell.steps,
        cell.sigma,
        mean_error,
        sum(r.converged for r in rows),
        len(rows),
    )


def run_sweep(cfg: SweepConfig, progress: bool = True) -> List[ResultRow]:
    """
    Run every (cell, trial) of the grid.

    Trial failures are recorded as rows with empty error and
    converged = False. Rows come back sorted by (cell index, trial) whatever
    the number of workers.
    """
    cells = cfg.cells()
    tasks = [(cell, trial) for cell in cells for trial in range(cfg.trials)]
    logger.info(
        "Sweep on %s: %d cells x %d trials, %d workers",
        cfg.manifold.value,
        len(cells),
        cfg.trials,
        cfg.workers,
    )

    results: Dict[Tuple[int, int], ResultRow] = {}
    with tqdm(total=len(tasks), desc="Trials", unit="trial", disable=not progress) as bar:
        if cfg.workers == 1:
            for cell, trial in tasks:
                results[(cell.index, trial)] = run_trial(cfg, cell, trial)
                bar.update(1)
        else:
            with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                futures = {
                    pool.submit(run_trial, cfg, cell, trial): (cell.index, trial)
                    for cell, trial in tasks
                }
                for future in as_completed(futures):
                    results[futures[future]] = future.result()
                    bar.update(1)

    for cell in cells:
        _log_cell_summary(cell, [results[(cell.index, t)] for t in range(cfg.trials)])
    return [results[key] for key in sorted(results)]


def mean_by(rows: Sequence[ResultRow], x_field: str) -> Dict[float, float]:
    """Mean error per distinct value of x_field, ignoring failed trials."""
    if x_field not in X_FIELDS:
        raise InvalidInputError(f"x_field must be one of {X_FIELDS}, got {x_field!r}")
    grouped: Dict[float, List[float]] = {}
    for row in rows:
        if row.error is not None:
            grouped.setdefault(getattr(row, x_field), []).append(row.error)
    return {x: float(np.mean(grouped[x])) for x in sorted(grouped)}


def fit_slope(rows: Sequence[ResultRow], x_field: str) -> Tuple[float, float]:
    """
    Least-squares slope of log(mean error) against log(x).

    Returns:
        Tuple[float, float]: slope and its standard error.

    Raises:
        InsufficientDataError: fewer than 3 distinct x values.
        InvalidInputError: a non-positive x or mean error.
    """
    means = mean_by(rows, x_field)
    if len(means) < 3:
        raise InsufficientDataError(
            f"need at least 3 distinct {x_field} values, got {len(means)}"
        )
    xs = np.array(list(means.keys()), dtype=np.float64)
    ys = np.array(list(means.values()), dtype=np.float64)
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise InvalidInputError("log-log fit needs positive x values and mean errors")
    fit = stats.linregress(np.log(xs), np.log(ys))
    return float(fit.slope), float(fit.stderr)


def trend(rows: Sequence[ResultRow], x_field: str) -> float:
    """Spearman rank correlation between x and the mean error per x."""
    means = mean_by(rows, x_field)
    if len(means) < 2:
        raise InsufficientDataError(
            f"need at least 2 distinct {x_field} values, got {len(means)}"
        )
    rho, _ = stats.spearmanr(list(means.keys()), list(means.values()))
    return float(rho)
