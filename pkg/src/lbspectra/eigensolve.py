"""Dense symmetric eigensolve and reconstruction of modes from coefficients."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .assembly import HamiltonianMatrix
from .geometry import BasisSpec, QuadratureGrid, basis_matrix
from .region import Region, contains

__all__ = [
    "EigenSolveError",
    "EigenSolution",
    "DEFAULT_K",
    "eigendecompose",
    "eigh_ascending",
    "sample_mode",
    "mode_mass",
    "mode_masses",
    "check_solution",
]

DEFAULT_K = 120


class EigenSolveError(RuntimeError):
    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


@dataclass(frozen=True)
class EigenSolution:
    eigenvalues: np.ndarray
    coefficients: np.ndarray = field(repr=False)
    spec: BasisSpec | None = field(repr=False)
    V0: float | None = None

    @property
    def K(self) -> int:
        return len(self.eigenvalues)


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    # first coefficient that is not numerically zero is made positive
    tol = 1e-10 * np.abs(vecs).max(axis=0)
    first = np.argmax(np.abs(vecs) > tol, axis=0)
    signs = np.sign(vecs[first, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def eigh_ascending(A: np.ndarray, K: int) -> tuple[np.ndarray, np.ndarray]:
    """Lowest ``K`` eigenpairs of a dense symmetric matrix, signs normalized."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if A.ndim != 2 or A.shape != (n, n):
        raise EigenSolveError(f"matrix must be square, got shape {A.shape}")
    if not 1 <= K <= n:
        raise EigenSolveError(f"K must satisfy 1 <= K <= {n}, got {K}")
    if not np.array_equal(A, A.T):
        raise EigenSolveError("matrix is not exactly symmetric")
    try:
        vals, vecs = sla.eigh(A, subset_by_index=[0, K - 1], driver="evr", check_finite=True)
    except np.linalg.LinAlgError as exc:
        # LAPACK reports the failing index as the info code in the message
        digits = "".join(c for c in str(exc) if c.isdigit())
        idx = int(digits) if digits else None
        raise EigenSolveError(f"eigensolver failed to converge: {exc}", idx) from exc
    except ValueError as exc:
        raise EigenSolveError(f"eigensolver rejected the matrix: {exc}") from exc
    return vals, _fix_signs(vecs)


def eigendecompose(H: HamiltonianMatrix | np.ndarray, K: int | None = None) -> EigenSolution:
    """First ``K`` eigenpairs of ``H`` (default ``min(N, 120)``) in ascending order."""
    if isinstance(H, HamiltonianMatrix):
        A, spec, V0 = H.entries, H.spec, H.V0
    else:
        A, spec, V0 = np.asarray(H, dtype=float), None, None
    if K is None:
        K = min(A.shape[0], DEFAULT_K)
    vals, vecs = eigh_ascending(A, K)
    vals.flags.writeable = False
    vecs.flags.writeable = False
    return EigenSolution(vals, vecs, spec, V0)


def check_solution(A: np.ndarray, sol: EigenSolution) -> tuple[float, float]:
    """Return (orthonormality defect, worst scaled residual)."""
    C = sol.coefficients
    ortho = float(np.abs(C.T @ C - np.eye(sol.K)).max())
    hmax = float(np.abs(A).max())
    res = np.linalg.norm(A @ C - C * sol.eigenvalues, axis=0)
    scaled = res / (np.abs(sol.eigenvalues) + hmax)
    return ortho, float(scaled.max())


def sample_mode(sol: EigenSolution, j: int, points) -> np.ndarray:
    """Evaluate mode ``j`` by expanding its coefficients back into the basis."""
    if sol.spec is None:
        raise EigenSolveError("solution carries no basis; cannot sample modes")
    if not 0 <= j < sol.K:
        raise IndexError(f"mode index {j} out of range for K={sol.K}")
    return _expand(sol, points, sol.coefficients[:, j])


def _expand(sol: EigenSolution, points, coeffs: np.ndarray, chunk: int = 4096) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.empty((len(pts),) + coeffs.shape[1:])
    for s in range(0, len(pts), chunk):
        out[s : s + chunk] = basis_matrix(sol.spec, pts[s : s + chunk]) @ coeffs
    return out


def mode_mass(sol: EigenSolution, j: int, grid: QuadratureGrid, region: Region) -> tuple[float, float]:
    """Quadrature of ``|psi_j|^2`` inside and outside the domain."""
    inside, outside = mode_masses(sol, grid, region, [j])
    return float(inside[0]), float(outside[0])


def mode_masses(sol: EigenSolution, grid: QuadratureGrid, region: Region, modes=None):
    """Vectorized :func:`mode_mass` over several modes (default: all)."""
    if sol.spec is None:
        raise EigenSolveError("solution carries no basis; cannot sample modes")
    modes = np.arange(sol.K) if modes is None else np.asarray(modes, dtype=int)
    vals = _expand(sol, grid.nodes, sol.coefficients[:, modes])
    dens = grid.weights[:, None] * vals * vals
    inside = contains(region, grid.nodes)
    return dens[inside].sum(axis=0), dens[~inside].sum(axis=0)
