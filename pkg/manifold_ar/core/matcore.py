"""Dense matrix kernels and Lie-algebra utilities for O(n).

Everything here is a pure function of its arguments. Matrices are plain
float64 numpy arrays; the aliases below only document which invariant a
value is expected to satisfy.
"""

import logging
import math
from typing import List, Optional, Sequence

import numpy as np
import numpy.typing as npt
import scipy.linalg

from manifold_ar.errors import (
    BranchAmbiguityError,
    DegenerateDirectionError,
    DimensionError,
    InvalidInputError,
    NotInSpecialOrthogonalError,
)

logger = logging.getLogger(__name__)

Matrix = npt.NDArray[np.float64]
SquareMatrix = Matrix
AntisymMatrix = Matrix
OrthoMatrix = Matrix

ANTISYM_RTOL = 1e-12
ORTHO_TOL = 1e-10
BRANCH_MARGIN = 1e-6
DEGENERATE_RTOL = 1e-12


def _as_finite(x: npt.ArrayLike, name: str = "matrix") -> Matrix:
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return arr


def _as_square(x: npt.ArrayLike, name: str = "matrix") -> SquareMatrix:
    arr = _as_finite(x, name)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise DimensionError(f"{name} must be square, got shape {arr.shape}")
    return arr


def is_antisym(x: npt.ArrayLike, rtol: float = ANTISYM_RTOL) -> bool:
    """True if x is antisymmetric up to rtol relative to its largest entry."""
    arr = np.asarray(x, dtype=np.float64)
    scale = float(np.max(np.abs(arr), initial=0.0))
    return bool(np.max(np.abs(arr + arr.T), initial=0.0) <= rtol * scale)


def check_antisym(x: npt.ArrayLike) -> AntisymMatrix:
    """Validate the AntisymMatrix invariant and return the array."""
    arr = _as_square(x, "antisymmetric matrix")
    if not is_antisym(arr):
        raise InvalidInputError("matrix is not antisymmetric")
    return arr


def check_orthogonal(q: npt.ArrayLike, tol: float = ORTHO_TOL) -> OrthoMatrix:
    """Validate ||Q^T Q - I||_F <= tol and return the array."""
    arr = _as_square(q, "orthogonal matrix")
    defect = np.linalg.norm(arr.T @ arr - np.eye(arr.shape[0]))
    if defect > tol:
        raise InvalidInputError(f"matrix is not orthogonal (defect {defect:.3e})")
    return arr


def expm(x: npt.ArrayLike) -> SquareMatrix:
    """Matrix exponential by scaling and squaring with a Pade kernel."""
    return scipy.linalg.expm(_as_square(x))


def logm_so(q: npt.ArrayLike) -> AntisymMatrix:
    """
    Principal logarithm of a rotation.

    The real Schur form of an orthogonal matrix is block diagonal with
    2x2 rotation blocks and +-1 entries; each block is inverted in closed
    form and the result is rotated back.

    Raises:
        NotInSpecialOrthogonalError: det(Q) < 0.
        BranchAmbiguityError: some rotation angle lies within 1e-6 of pi.
    """
    q = check_orthogonal(q)
    if np.linalg.det(q) < 0:
        raise NotInSpecialOrthogonalError("logm_so requires det(Q) > 0")

    t, z = scipy.linalg.schur(q, output="real")
    n = q.shape[0]
    log_t = np.zeros_like(t)
    i = 0
    while i < n:
        if i + 1 < n and t[i + 1, i] != 0.0:
            cos_part = 0.5 * (t[i, i] + t[i + 1, i + 1])
            sin_part = 0.5 * (t[i + 1, i] - t[i, i + 1])
            theta = math.atan2(sin_part, cos_part)
            if abs(theta) > math.pi - BRANCH_MARGIN:
                raise BranchAmbiguityError(
                    f"rotation angle {theta:.9f} is too close to pi"
                )
            log_t[i + 1, i] = theta
            log_t[i, i + 1] = -theta
            i += 2
        else:
            if t[i, i] < 0:
                raise BranchAmbiguityError("rotation by pi (eigenvalue -1)")
            i += 1
    return antisym_project(z @ log_t @ z.T)


def antisym_project(m: npt.ArrayLike) -> AntisymMatrix:
    """(M - M^T) / 2."""
    m = _as_square(m)
    return 0.5 * (m - m.T)


def sym_part(m: npt.ArrayLike) -> Matrix:
    m = _as_square(m)
    return 0.5 * (m + m.T)


def horizontal_project(x: npt.ArrayLike, k: int) -> AntisymMatrix:
    """Zero the lower-right (n-k)x(n-k) block of an antisymmetric matrix."""
    x = _as_square(x)
    n = x.shape[0]
    if not 1 <= k < n:
        raise DimensionError(f"horizontal projection needs 1 <= k < n, got k={k}, n={n}")
    out = x.copy()
    out[k:, k:] = 0.0
    return out


def frobenius(x: npt.ArrayLike, y: npt.ArrayLike) -> float:
    """Frobenius inner product tr(X^T Y)."""
    x = _as_finite(x)
    y = _as_finite(y)
    if x.shape != y.shape:
        raise DimensionError(f"shape mismatch: {x.shape} vs {y.shape}")
    return float(np.sum(x * y))


def so_basis(n: int) -> List[AntisymMatrix]:
    """Orthonormal basis (E_ij - E_ji)/sqrt(2), i < j, in lexicographic order."""
    if n < 2:
        raise DimensionError(f"so(n) basis needs n >= 2, got {n}")
    scale = 1.0 / math.sqrt(2.0)
    basis = []
    for i in range(n):
        for j in range(i + 1, n):
            e = np.zeros((n, n))
            e[i, j] = scale
            e[j, i] = -scale
            basis.append(e)
    return basis


def gram_schmidt(
    new: npt.ArrayLike,
    previous: Sequence[AntisymMatrix],
    duals: Optional[Sequence[AntisymMatrix]] = None,
) -> AntisymMatrix:
    """
    Remove from `new` its Frobenius projections onto `previous`.

    `previous` must be pairwise orthogonal and nonzero; it need not be
    normalised. With `duals`, each p_j is removed along the pairing with
    duals[j], i.e. new - <d_j, new> / <d_j, p_j> p_j. When d_j = H p_j for a
    symmetric positive operator H the result is H-conjugate to `previous`,
    which then has to be pairwise H-conjugate.

    Raises:
        InvalidInputError: `duals` and `previous` differ in length.
        DegenerateDirectionError: the remainder is below 1e-12 * ||new||.
    """
    new = _as_square(new)
    duals = previous if duals is None else duals
    if len(duals) != len(previous):
        raise InvalidInputError(f"{len(duals)} duals for {len(previous)} directions")
    out = new.copy()
    for p, d in zip(previous, duals):
        out = out - (frobenius(d, out) / frobenius(d, p)) * p
    new_norm = np.linalg.norm(new)
    out_norm = np.linalg.norm(out)
    if out_norm <= DEGENERATE_RTOL * new_norm or new_norm == 0.0:
        raise DegenerateDirectionError(
            "direction collapsed under Gram-Schmidt", residual_norm=float(out_norm)
        )
    return out


def sample_antisym(n: int, sigma: float, rng: np.random.Generator) -> AntisymMatrix:
    """Antisymmetric part of an n x n matrix of iid N(0, sigma^2) entries."""
    if sigma < 0:
        raise InvalidInputError(f"sigma must be non-negative, got {sigma}")
    g = rng.normal(0.0, sigma, size=(n, n))
    return 0.5 * (g - g.T)


def stiefel_identity(n: int, k: int) -> Matrix:
    """I_{n,k}: the first k columns of I_n."""
    if not 1 <= k <= n:
        raise DimensionError(f"need 1 <= k <= n, got k={k}, n={n}")
    return np.eye(n, k)


def complete_frame(x: npt.ArrayLike) -> OrthoMatrix:
    """Orthogonal Q whose first k columns are the orthonormal columns of X."""
    x = _as_finite(x)
    n, k = x.shape
    if k == n:
        return x.copy()
    return np.hstack([x, scipy.linalg.null_space(x.T)])


def reorthonormalize(y: npt.ArrayLike) -> Matrix:
    """Nearest-frame repair by QR with a positive R diagonal."""
    q, r = np.linalg.qr(_as_finite(y))
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def derive_seed(master_seed: int, *path: int) -> int:
    """64-bit seed for the substream identified by `path` under master_seed."""
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=tuple(path))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def derive_rng(master_seed: int, *path: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master_seed, *path))
