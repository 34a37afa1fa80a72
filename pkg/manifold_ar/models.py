"""Pydantic records shared by the simulator, the estimators and the harness."""

import itertools
from pathlib import Path
from typing import Annotated, Any, Dict, List, Optional

import numpy as np
from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    PlainSerializer,
    field_validator,
    model_validator,
)

from manifold_ar.config import ManifoldKind, OutputFormat
from manifold_ar.core.manifolds import GrassmannPoint, ManifoldPoint, StiefelPoint
from manifold_ar.core.matcore import ORTHO_TOL


def _to_array(value: Any) -> np.ndarray:
    arr = np.array(value, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    return arr


# Row-major nested lists on the wire, float64 arrays in memory.
Array = Annotated[
    np.ndarray,
    BeforeValidator(_to_array),
    PlainSerializer(lambda a: a.tolist(), return_type=list),
]


def _orthonormality_defect(y: np.ndarray) -> float:
    return float(np.linalg.norm(y.T @ y - np.eye(y.shape[1])))


class ProcessSpec(BaseModel):
    """Parameters of one AR(1) simulation."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    manifold: ManifoldKind
    phi: Array = Field(description="System parameter in O(n)")
    sigma: float = Field(ge=0.0, description="Noise scale")
    steps: int = Field(ge=1, description="Number of transitions N")
    initial_point: Array = Field(description="Z_0")
    seed: int = Field(ge=0, lt=2**64)

    @model_validator(mode="after")
    def _check_dimensions(self):
        n = self.phi.shape[0]
        if self.phi.shape != (n, n) or _orthonormality_defect(self.phi) > ORTHO_TOL:
            raise ValueError("phi must be an orthogonal n x n matrix")
        if self.initial_point.shape[0] != n:
            raise ValueError(
                f"initial point has {self.initial_point.shape[0]} rows, phi has {n}"
            )
        if self.manifold == ManifoldKind.ORTHOGONAL and self.initial_point.shape != (n, n):
            raise ValueError("orthogonal processes start from an n x n matrix")
        if _orthonormality_defect(self.initial_point) > ORTHO_TOL:
            raise ValueError("initial point does not have orthonormal columns")
        return self

    @property
    def n(self) -> int:
        return self.phi.shape[0]

    @property
    def k(self) -> int:
        return self.initial_point.shape[1]


class Trajectory(BaseModel):
    """Observations Z_0..Z_N on one manifold with generation metadata."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    manifold: ManifoldKind
    n: int = Field(ge=1)
    k: int = Field(ge=1)
    sigma: float = Field(ge=0.0)
    seed: int = Field(ge=0, lt=2**64)
    phi_true: Optional[Array] = None
    points: List[Array]

    @model_validator(mode="after")
    def _check_points(self):
        if len(self.points) < 2:
            raise ValueError("a trajectory needs at least two points")
        if self.manifold == ManifoldKind.ORTHOGONAL and self.k != self.n:
            raise ValueError("orthogonal trajectories have k == n")
        for j, p in enumerate(self.points):
            if p.shape != (self.n, self.k):
                raise ValueError(f"point {j} has shape {p.shape}, expected {(self.n, self.k)}")
            if _orthonormality_defect(p) > ORTHO_TOL:
                raise ValueError(f"point {j} does not have orthonormal columns")
        if self.phi_true is not None and self.phi_true.shape != (self.n, self.n):
            raise ValueError("phi_true must be n x n")
        return self

    @property
    def steps(self) -> int:
        return len(self.points) - 1

    def frames(self) -> np.ndarray:
        """Points stacked into an (N+1, n, k) array."""
        return np.stack(self.points)

    def manifold_points(self) -> List[ManifoldPoint]:
        if self.manifold == ManifoldKind.STIEFEL:
            return [StiefelPoint(p) for p in self.points]
        if self.manifold == ManifoldKind.GRASSMANN:
            return [GrassmannPoint(p) for p in self.points]
        return list(self.points)


class CGSettings(BaseModel):
    """Conjugate-gradient controls."""

    tol: float = Field(default=1e-8, gt=0.0, description="Stop when ||Delta|| |tau| < tol")
    max_outer: int = Field(default=100, ge=1, description="Maximum number of sweeps")
    grid_size: int = Field(default=51, ge=3, description="Line-search grid on [-1, 1]")
    restart_period: Optional[int] = Field(
        default=None, ge=1, description="Directions per sweep; defaults to dim o(n)"
    )

    @field_validator("grid_size")
    @classmethod
    def _odd_grid(cls, value: int) -> int:
        if value % 2 == 0:
            raise ValueError("grid_size must be odd so that tau = 0 is a node")
        return value

    def period_for(self, n: int) -> int:
        return self.restart_period or max(1, n * (n - 1) // 2)


class EstimateReport(BaseModel):
    """Result of one estimation run."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    phi_hat: Array
    error: Optional[float] = Field(default=None, ge=0.0)
    final_cost: float = Field(ge=-1e-8)
    outer_iterations: int = Field(ge=0)
    inner_steps: int = Field(ge=0)
    converged: bool
    tolerance_used: float = Field(gt=0.0)
    wall_time: float = Field(ge=0.0, description="Seconds")
    cost_history: List[float] = Field(default_factory=list, exclude=True)

    def to_json_dict(self) -> Dict[str, Any]:
        return {
            "phi_hat": self.phi_hat.tolist(),
            "error": self.error,
            "final_cost": self.final_cost,
            "outer_iterations": self.outer_iterations,
            "inner_steps": self.inner_steps,
            "converged": self.converged,
            "tol": self.tolerance_used,
            "wall_time_ms": self.wall_time * 1000.0,
        }


class GridCell(BaseModel):
    """One (n, k, N, sigma) combination of a sweep."""

    index: int
    n: int
    k: int
    steps: int
    sigma: float


class SweepConfig(BaseModel):
    """Experiment grid. For orthogonal sweeps `k` is ignored and k = n."""

    manifold: ManifoldKind
    n: List[int] = Field(min_length=1)
    k: List[int] = Field(default_factory=list)
    steps: List[int] = Field(min_length=1, description="Trajectory lengths N")
    sigma: List[float] = Field(min_length=1)
    trials: int = Field(default=10, ge=1)
    master_seed: int = Field(default=0, ge=0, lt=2**64)
    cg: CGSettings = Field(default_factory=CGSettings)
    karcher_tol: float = Field(default=1e-10, gt=0.0)
    karcher_max_iter: int = Field(default=200, ge=1)
    phi_scale: float = Field(default=0.01, gt=0.0)
    output: Optional[Path] = None
    format: OutputFormat = OutputFormat.CSV
    workers: int = Field(default=1, ge=1)
    record_runtime: bool = Field(
        default=True, description="Write wall times; off gives byte-identical reruns"
    )

    @model_validator(mode="after")
    def _check_grid(self):
        if any(n < 2 for n in self.n):
            raise ValueError("n must be at least 2")
        if any(s < 1 for s in self.steps):
            raise ValueError("steps must be positive")
        if any(s < 0 for s in self.sigma):
            raise ValueError("sigma must be non-negative")
        if self.manifold != ManifoldKind.ORTHOGONAL:
            if not self.k:
                raise ValueError("stiefel/grassmann sweeps need a non-empty k list")
            if any(k < 1 or k >= n for n in self.n for k in self.k):
                raise ValueError("every combination needs 1 <= k < n")
        return self

    def cells(self) -> List[GridCell]:
        ks = self.k if self.manifold != ManifoldKind.ORTHOGONAL else [None]
        cells = []
        for index, (n, k, steps, sigma) in enumerate(
            itertools.product(self.n, ks, self.steps, self.sigma)
        ):
            cells.append(
                GridCell(
                    index=index, n=n, k=n if k is None else k, steps=steps, sigma=sigma
                )
            )
        return cells


class ResultRow(BaseModel):
    """One trial of a sweep; error and final_cost are empty when the trial failed."""

    manifold: ManifoldKind
    n: int
    k: int
    N: int
    sigma: float
    trial: int
    seed: int
    error: Optional[float] = Field(default=None, ge=0.0)
    final_cost: Optional[float] = None
    iterations: int = 0
    converged: bool = False
    runtime_ms: float = 0.0

    model_config = ConfigDict(use_enum_values=True)
