"""Closed-form and semi-analytic spectra, plus a finite-difference baseline."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq

from .eigensolve import eigh_ascending
from .geometry import FlatTorus, Rectangle
from .region import Region, complement_indicator

__all__ = [
    "triangle_spectrum",
    "expand_levels",
    "box_spectrum",
    "torus_spectrum",
    "hemisphere_spectrum",
    "interval_matching_residual",
    "interval_relaxed_eigenvalue",
    "FdOperator",
    "fd_assemble",
    "fd_eigenvalues",
]


def expand_levels(levels) -> np.ndarray:
    """Turn ``[(value, multiplicity), ...]`` into a flat ascending array."""
    return np.array([v for v, m in levels for _ in range(m)])


def _group(values: dict[int, int], scale: float, count: int) -> list[tuple[float, int]]:
    return [(scale * k, values[k]) for k in sorted(values)[:count]]


def triangle_spectrum(count: int, side: float = 1.0) -> list[tuple[float, int]]:
    """First ``count`` distinct Dirichlet levels of an equilateral triangle.

    Levels are ``(4 pi / 3)^2 (p^2 + q^2 - pq) / side^2`` over integers with
    ``1 <= q <= p/2``; a pair contributes multiplicity 1 when ``p == 2q`` and
    2 otherwise. Pairs sharing a value have their multiplicities added.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    # p^2 + q^2 - pq >= 3p^2/4 on the admissible range, so p <= sqrt(4M/3)
    M = 4 * count + 8
    while True:
        mult: dict[int, int] = {}
        for p in range(2, math.isqrt(4 * M // 3) + 2):
            for q in range(1, p // 2 + 1):
                n = p * p + q * q - p * q
                if n <= M:
                    mult[n] = mult.get(n, 0) + (1 if p == 2 * q else 2)
        if len(mult) >= count:
            return _group(mult, (4 * math.pi / 3) ** 2 / side**2, count)
        M *= 2


def box_spectrum(a1: float, a2: float, count: int) -> np.ndarray:
    """Ascending Dirichlet eigenvalues of the rectangle, repeated by multiplicity."""
    from .geometry import enumerate_basis

    return np.array(enumerate_basis(Rectangle(a1, a2), count).eigenvalues)


def torus_spectrum(B, count: int) -> list[tuple[float, int]]:
    """First ``count`` distinct levels ``4 pi^2 |w|^2`` over the dual lattice."""
    torus = B if isinstance(B, FlatTorus) else FlatTorus(tuple(map(tuple, np.asarray(B, float))))
    D = torus.dual_matrix()
    smin = np.linalg.svd(D, compute_uv=False).min()
    R = (count + 1) * np.linalg.norm(D, 2)
    while True:
        kmax = int(R / smin) + 1
        k = np.stack(np.meshgrid(np.arange(-kmax, kmax + 1), np.arange(-kmax, kmax + 1)), -1).reshape(-1, 2)
        w = k @ D
        n2 = np.einsum("ij,ij->i", w, w)
        vals = np.sort(4 * math.pi**2 * n2[n2 <= R * R])
        levels: list[list] = []
        for v in vals:
            if levels and abs(v - levels[-1][0]) <= 1e-9 * max(1.0, v):
                levels[-1][1] += 1
            else:
                levels.append([v, 1])
        # the last level may be cut by the disc boundary, so demand one extra
        if len(levels) > count:
            return [(float(v), int(m)) for v, m in levels[:count]]
        R *= 2


def hemisphere_spectrum(count: int) -> list[tuple[float, int]]:
    """Dirichlet levels of the hemisphere: ``l(l+1)`` with multiplicity ``l``.

    The surviving harmonics are those odd under reflection in the equator,
    i.e. ``l - |m|`` odd, which leaves ``l`` of the ``2l + 1`` orders.
    """
    return [(float(l * (l + 1)), l) for l in range(1, count + 1)]


def interval_matching_residual(lam: float, V0: float) -> float:
    """``sqrt(lam) cot sqrt(lam) + sqrt(V0-lam) coth sqrt(V0-lam)``.

    Zero exactly when ``lam`` is an eigenvalue of ``-d^2/dx^2 + V0 * 1_(1,2)``
    on ``(0, 2)`` with Dirichlet ends.
    """
    s = math.sqrt(lam)
    t = math.sqrt(V0 - lam)
    return s / math.tan(s) + t / math.tanh(t)


def interval_relaxed_eigenvalue(V0: float, k: int = 1) -> float:
    """The ``k``-th relaxed eigenvalue below ``pi^2 k^2`` for the interval analog."""
    if k < 1:
        raise ValueError("k must be >= 1")
    lo = ((k - 0.5) * math.pi) ** 2
    hi = (k * math.pi) ** 2
    if not V0 > hi:
        raise ValueError(f"V0={V0} must exceed pi^2 k^2 = {hi:.6g} to bracket the root")
    # shrink the open ends slightly; the residual is +inf-free inside
    a = lo * (1 + 1e-15)
    b = hi * (1 - 1e-15)
    fa = interval_matching_residual(a, V0)
    fb = interval_matching_residual(b, V0)
    if not (fa > 0 > fb):
        raise ValueError(f"cannot bracket root for V0={V0}, k={k}")
    return brentq(interval_matching_residual, a, b, args=(V0,), xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


@dataclass(frozen=True)
class FdOperator:
    """Five-point Dirichlet Laplacian plus a diagonal potential.

    Unknowns are interior nodes ``x_i = i h1``, ``y_j = j h2`` ordered with
    ``x`` fastest.
    """

    h: tuple[float, float]
    nodes: tuple[int, int]
    potential: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.nodes[0] * self.nodes[1]

    def matrix(self) -> sp.csr_matrix:
        n1, n2 = self.nodes
        h1, h2 = self.h

        def d2(n, h):
            return sp.diags([np.ones(n - 1), -2 * np.ones(n), np.ones(n - 1)], [-1, 0, 1]) / h**2

        lap = sp.kron(sp.identity(n2), d2(n1, h1)) + sp.kron(d2(n2, h2), sp.identity(n1))
        return (-lap + sp.diags(self.potential)).tocsr()


def fd_assemble(rect: Rectangle, region: Region, V0: float, nodes) -> FdOperator:
    if isinstance(nodes, int):
        nodes = (nodes, nodes)
    n1, n2 = (int(n) for n in nodes)
    if n1 < 3 or n2 < 3:
        raise ValueError(f"need at least 3 interior nodes per axis, got {nodes}")
    h1, h2 = rect.a1 / (n1 + 1), rect.a2 / (n2 + 1)
    X, Y = np.meshgrid(np.arange(1, n1 + 1) * h1, np.arange(1, n2 + 1) * h2, indexing="xy")
    pts = np.stack([X.ravel(), Y.ravel()], axis=1)
    v = V0 * complement_indicator(region, pts).astype(float)
    v.flags.writeable = False
    return FdOperator((h1, h2), (n1, n2), v)


def fd_eigenvalues(op: FdOperator, K: int) -> np.ndarray:
    A = op.matrix().toarray()
    # the sparse assembly can differ from its transpose in the last bit
    A = np.triu(A) + np.triu(A, 1).T
    vals, _ = eigh_ascending(A, K)
    return vals
