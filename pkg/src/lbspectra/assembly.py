"""Galerkin matrix of ``-Laplace-Beltrami + V0 * indicator(S minus domain)``."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .geometry import BasisSpec, QuadratureGrid, Rectangle, UnitSphere, basis_matrix, normalized_legendre
from .region import Region, check_compatible, complement_indicator

__all__ = [
    "AssemblyError",
    "HamiltonianMatrix",
    "DEFAULT_V0",
    "penalty_matrix",
    "assemble",
    "fit_score",
]

DEFAULT_V0 = 2.1e5
CHUNK = 4096


class AssemblyError(ValueError):
    pass


@dataclass(frozen=True)
class HamiltonianMatrix:
    entries: np.ndarray = field(repr=False)
    spec: BasisSpec = field(repr=False)
    region: Region
    V0: float
    grid: dict

    @property
    def N(self) -> int:
        return self.entries.shape[0]

    def penalty(self) -> np.ndarray:
        """``(H - diag(lambda)) / V0``, the Gram matrix of the basis on the complement."""
        return (self.entries - np.diag(self.spec.eigenvalues)) / self.V0


def _check_inputs(spec: BasisSpec, region: Region, grid: QuadratureGrid) -> None:
    if spec.geometry != grid.geometry:
        raise AssemblyError(f"basis lives on {spec.geometry!r} but grid on {grid.geometry!r}")
    check_compatible(region, spec.geometry)


def _default_workers() -> int:
    return max(1, int(os.environ.get("LBSPECTRA_NUM_THREADS", "1")))


def penalty_matrix(
    spec: BasisSpec,
    region: Region,
    grid: QuadratureGrid,
    *,
    chunk: int = CHUNK,
    workers: int | None = None,
    method: str = "auto",
) -> np.ndarray:
    """Quadrature of ``phi_n * phi_m`` over the nodes that fall outside the domain.

    Chunks of nodes may be evaluated in parallel; partial sums are always added
    in chunk order, and only the upper triangle is kept and mirrored, so the
    result is bit-exactly symmetric and independent of ``workers``.
    """
    _check_inputs(spec, region, grid)
    outside = complement_indicator(region, grid.nodes).astype(bool)
    if method == "auto":
        method = "separable" if isinstance(spec.geometry, (Rectangle, UnitSphere)) else "direct"
    if method == "separable":
        return _mirror_upper(_separable_penalty(spec, grid, outside))
    if method != "direct":
        raise AssemblyError(f"unknown penalty method {method!r}")
    nodes = grid.nodes[outside]
    w = grid.weights[outside]
    N = spec.N
    if len(w) == 0:
        return np.zeros((N, N))

    starts = range(0, len(w), chunk)

    def part(s):
        phi = basis_matrix(spec, nodes[s : s + chunk], check=False)
        return phi.T @ (phi * w[s : s + chunk, None])

    workers = workers or _default_workers()
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(part, starts))
    else:
        parts = [part(s) for s in starts]

    P = np.zeros((N, N))
    for p in parts:
        P += p
    return _mirror_upper(P)


def _mirror_upper(P: np.ndarray) -> np.ndarray:
    upper = np.triu(P)
    return upper + np.triu(upper, 1).T


def _tensor_factors(spec: BasisSpec, grid: QuadratureGrid):
    """Split each basis function on the tensor grid as ``row(i) * col_g(j)``.

    Returns the row factors ``(r1, N)``, the column functions ``(r2, G)``, the
    group ``g`` of every basis function and the 1-D weights along both axes.
    """
    g = spec.geometry
    r1, r2 = grid.resolution
    idx = spec.index_array()
    if isinstance(g, Rectangle):
        x = grid.nodes[::r2, 0]
        y = grid.nodes[:r2, 1]
        rows = (2.0 / np.sqrt(g.area)) * np.sin(np.outer(x, idx[:, 0] * (np.pi / g.a1)))
        keys = np.unique(idx[:, 1])
        cols = np.sin(np.outer(y, keys * (np.pi / g.a2)))
        group = np.searchsorted(keys, idx[:, 1])
        wa = np.full(r1, g.a1 / r1)
        wb = np.full(r2, g.a2 / r2)
        return rows, cols, group, wa, wb
    theta = grid.nodes[::r2, 0]
    phi = grid.nodes[:r2, 1]
    p = normalized_legendre(int(idx[:, 0].max()), np.cos(theta))
    l, m = idx[:, 0], idx[:, 1]
    rows = p[l, np.abs(m)].T * np.where(m == 0, 1.0, np.sqrt(2.0))
    keys = np.unique(m)
    cols = np.where(keys > 0, np.cos(np.outer(phi, keys)), np.sin(np.outer(phi, -keys)))
    cols[:, keys == 0] = 1.0
    group = np.searchsorted(keys, m)
    wa = grid.weights[::r2] * r2 / (2 * np.pi)
    wb = np.full(r2, 2 * np.pi / r2)
    return rows, cols, group, wa, wb


def _separable_penalty(spec: BasisSpec, grid: QuadratureGrid, outside: np.ndarray) -> np.ndarray:
    rows, cols, group, wa, wb = _tensor_factors(spec, grid)
    r1, r2 = grid.resolution
    mask = outside.reshape(r1, r2)
    G = cols.shape[1]
    # T[i, g, h] = sum_j wb_j chi_ij col_g(y_j) col_h(y_j)
    T = np.zeros((r1, G, G))
    for i in np.flatnonzero(mask.any(axis=1)):
        c = cols[mask[i]]
        T[i] = c.T @ (c * wb[mask[i], None])
    members = [np.flatnonzero(group == k) for k in range(G)]
    P = np.zeros((spec.N, spec.N))
    for a in range(G):
        ia = members[a]
        Ra = rows[:, ia]
        for b in range(a, G):
            ib = members[b]
            t = wa * T[:, a, b]
            if not t.any():
                continue
            block = Ra.T @ (rows[:, ib] * t[:, None])
            P[np.ix_(ia, ib)] = block
            P[np.ix_(ib, ia)] = block.T
    return P


def assemble(
    spec: BasisSpec,
    region: Region,
    V0: float,
    grid: QuadratureGrid,
    *,
    penalty: np.ndarray | None = None,
    workers: int | None = None,
) -> HamiltonianMatrix:
    """``H_nm = lambda_n delta_nm + V0 * sum_q w_q chi(x_q) phi_n(x_q) phi_m(x_q)``.

    A precomputed ``penalty`` (from :func:`penalty_matrix` on the same basis,
    region and grid) can be passed to sweep ``V0`` cheaply.
    """
    if not V0 > 0:
        raise AssemblyError(f"V0 must be positive, got {V0}")
    if penalty is None:
        penalty = penalty_matrix(spec, region, grid, workers=workers)
    else:
        _check_inputs(spec, region, grid)
        if penalty.shape != (spec.N, spec.N):
            raise AssemblyError("precomputed penalty has the wrong shape")
    H = V0 * penalty
    H[np.diag_indices(spec.N)] += spec.eigenvalues
    H.flags.writeable = False
    return HamiltonianMatrix(H, spec, region, float(V0), grid.describe())


def fit_score(spec: BasisSpec, region: Region, grid: QuadratureGrid) -> float:
    """How badly the truncated basis represents the complement indicator.

    Projects the indicator of ``S minus domain`` onto the basis and returns the
    largest magnitude of that projection over grid nodes inside the domain
    (where the indicator itself is zero). Independent of ``V0``.
    """
    _check_inputs(spec, region, grid)
    chi = complement_indicator(region, grid.nodes).astype(float)
    inside = chi == 0
    if not inside.any():
        raise AssemblyError("domain contains no quadrature nodes")
    coeffs = np.zeros(spec.N)
    for s in range(0, len(chi), CHUNK):
        phi = basis_matrix(spec, grid.nodes[s : s + CHUNK], check=False)
        coeffs += phi.T @ (grid.weights[s : s + CHUNK] * chi[s : s + CHUNK])
    if not coeffs.any():
        return 0.0
    pin = grid.nodes[inside]
    best = 0.0
    for s in range(0, len(pin), CHUNK):
        proj = basis_matrix(spec, pin[s : s + CHUNK], check=False) @ coeffs
        best = max(best, float(np.abs(proj).max()))
    return best
