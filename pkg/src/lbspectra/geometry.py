"""Host spaces with known Laplace-Beltrami eigenbases.

Three hosts are supported: an axis-aligned rectangle ``(0, a1) x (0, a2)`` with
Dirichlet walls, the unit sphere in (colatitude, azimuth) coordinates, and a
flat torus ``R^2 / Z^2 B`` whose lattice vectors are the rows of ``B``.

Every basis is real and orthonormal in L2 with respect to the volume form of
its host. Quadrature grids carry that volume form in their weights.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Union

import numpy as np
from scipy.special import roots_legendre

__all__ = [
    "GeometryError",
    "Rectangle",
    "UnitSphere",
    "FlatTorus",
    "AmbientGeometry",
    "RectIndex",
    "SphereIndex",
    "TorusIndex",
    "BasisSpec",
    "QuadratureGrid",
    "enumerate_basis",
    "index_eigenvalue",
    "basis_eigenvalue",
    "basis_eval",
    "basis_matrix",
    "normalized_legendre",
    "quadrature",
    "default_resolution",
    "geometry_from_dict",
    "geometry_to_dict",
]

_CHART_TOL = 1e-12


class GeometryError(ValueError):
    """Invalid host geometry, basis request or chart point."""


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Rectangle:
    a1: float
    a2: float

    tag = "rectangle"

    def __post_init__(self):
        if not (self.a1 > 0 and self.a2 > 0):
            raise GeometryError(f"rectangle sides must be positive, got {self.a1}, {self.a2}")

    @property
    def area(self) -> float:
        return self.a1 * self.a2

    def in_chart(self, points: np.ndarray) -> np.ndarray:
        x, y = points[:, 0], points[:, 1]
        t1, t2 = _CHART_TOL * self.a1, _CHART_TOL * self.a2
        return (x >= -t1) & (x <= self.a1 + t1) & (y >= -t2) & (y <= self.a2 + t2)


@dataclass(frozen=True)
class UnitSphere:
    """Unit sphere; chart points are ``(theta, phi)`` with theta the colatitude."""

    tag = "sphere"

    @property
    def area(self) -> float:
        return 4.0 * math.pi

    def in_chart(self, points: np.ndarray) -> np.ndarray:
        th, ph = points[:, 0], points[:, 1]
        return (
            (th >= -_CHART_TOL)
            & (th <= math.pi + _CHART_TOL)
            & (ph >= -_CHART_TOL)
            & (ph <= 2 * math.pi + _CHART_TOL)
        )


@dataclass(frozen=True)
class FlatTorus:
    """Flat torus ``R^2 / Z^2 B``; the rows of ``B`` span the lattice."""

    B: tuple

    tag = "torus"

    def __post_init__(self):
        b = np.asarray(self.B, dtype=float)
        if b.shape != (2, 2):
            raise GeometryError(f"torus lattice matrix must be 2x2, got shape {b.shape}")
        if abs(np.linalg.det(b)) <= 1e-14 * max(1.0, np.abs(b).max() ** 2):
            raise GeometryError("torus lattice matrix must be invertible")
        object.__setattr__(self, "B", tuple(tuple(float(v) for v in row) for row in b))

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.B)

    @property
    def area(self) -> float:
        return abs(float(np.linalg.det(self.matrix)))

    def dual_matrix(self) -> np.ndarray:
        """``B^{-T}``; the dual lattice is ``Z^2 B^{-T}``."""
        return np.linalg.inv(self.matrix).T

    def cell_coordinates(self, points: np.ndarray) -> np.ndarray:
        return points @ np.linalg.inv(self.matrix)

    def wrap(self, points: np.ndarray) -> np.ndarray:
        """Reduce points modulo the lattice into the fundamental cell ``[0,1)^2 B``."""
        u = self.cell_coordinates(points)
        return (u - np.floor(u)) @ self.matrix

    def in_chart(self, points: np.ndarray) -> np.ndarray:
        u = self.cell_coordinates(points)
        return np.all((u >= -1e-10) & (u <= 1 + 1e-10), axis=1)


AmbientGeometry = Union[Rectangle, UnitSphere, FlatTorus]


class RectIndex(NamedTuple):
    n1: int
    n2: int


class SphereIndex(NamedTuple):
    l: int  # noqa: E741
    m: int


class TorusIndex(NamedTuple):
    k1: int
    k2: int
    parity: str  # "const", "cos" or "sin"


def index_eigenvalue(geometry: AmbientGeometry, index) -> float:
    """Analytic eigenvalue of ``-Laplace-Beltrami`` for one basis index."""
    if isinstance(geometry, Rectangle):
        n1, n2 = index
        return math.pi**2 * ((n1 / geometry.a1) ** 2 + (n2 / geometry.a2) ** 2)
    if isinstance(geometry, UnitSphere):
        return float(index[0] * (index[0] + 1))
    if isinstance(geometry, FlatTorus):
        w = np.array([index[0], index[1]], dtype=float) @ geometry.dual_matrix()
        return float(4 * math.pi**2 * (w @ w))
    raise GeometryError(f"unknown geometry {geometry!r}")


@dataclass(frozen=True)
class BasisSpec:
    """A truncated orthonormal eigenbasis, ordered by ascending eigenvalue."""

    geometry: AmbientGeometry
    indices: tuple
    eigenvalues: np.ndarray = field(repr=False)

    @property
    def N(self) -> int:
        return len(self.indices)

    def index_array(self) -> np.ndarray:
        return np.array([tuple(ix[:2]) for ix in self.indices], dtype=int)

    def max_degree(self) -> int:
        """Largest ``l`` for the sphere, largest ``|n|`` or ``|k|`` otherwise."""
        return int(np.abs(self.index_array()).max())


def _rect_candidates(g: Rectangle, N: int):
    # grow an ellipse in (n1/a1, n2/a2) until it holds N lattice points
    r = math.sqrt(N) / min(g.a1, g.a2) + 1.0
    while True:
        m1 = int(r * g.a1) + 1
        m2 = int(r * g.a2) + 1
        n1, n2 = np.meshgrid(np.arange(1, m1 + 1), np.arange(1, m2 + 1), indexing="ij")
        keep = (n1 / g.a1) ** 2 + (n2 / g.a2) ** 2 <= r * r
        if keep.sum() >= N:
            return [RectIndex(int(a), int(b)) for a, b in zip(n1[keep], n2[keep])]
        r *= 1.5


def _torus_candidates(g: FlatTorus, N: int):
    D = g.dual_matrix()
    # shortest dual vector bounds how many k's fit inside a disc of radius R
    smin = np.linalg.svd(D, compute_uv=False).min()
    R = math.sqrt(N) * np.linalg.norm(D, 2) + 1.0
    while True:
        kmax = int(R / smin) + 1
        k1, k2 = np.meshgrid(np.arange(-kmax, kmax + 1), np.arange(-kmax, kmax + 1), indexing="ij")
        k = np.stack([k1.ravel(), k2.ravel()], axis=1)
        w = k @ D
        keep = np.einsum("ij,ij->i", w, w) <= R * R
        out = []
        for a, b in k[keep]:
            a, b = int(a), int(b)
            if a == 0 and b == 0:
                out.append(TorusIndex(0, 0, "const"))
            elif a > 0 or (a == 0 and b > 0):
                out.append(TorusIndex(a, b, "cos"))
                out.append(TorusIndex(a, b, "sin"))
        if len(out) >= N:
            return out
        R *= 1.5


def enumerate_basis(geometry: AmbientGeometry, N: int, truncation: str = "eigenvalue") -> BasisSpec:
    """Return the ``N`` basis functions of smallest eigenvalue.

    Ties are broken lexicographically on the index tuple. With
    ``truncation="box"`` (rectangle only, ``N`` a perfect square) the basis is
    instead the full tensor set ``1 <= n1, n2 <= sqrt(N)``, still listed in
    ascending eigenvalue order.
    """
    if int(N) != N or N < 1:
        raise GeometryError(f"basis size must be a positive integer, got {N}")
    N = int(N)
    if truncation == "box":
        if not isinstance(geometry, Rectangle):
            raise GeometryError("box truncation is only defined for the rectangle")
        L = math.isqrt(N)
        if L * L != N:
            raise GeometryError(f"box truncation needs a perfect square N, got {N}")
        cands = [RectIndex(a, b) for a in range(1, L + 1) for b in range(1, L + 1)]
    elif truncation != "eigenvalue":
        raise GeometryError(f"unknown truncation {truncation!r}")
    elif isinstance(geometry, Rectangle):
        cands = _rect_candidates(geometry, N)
    elif isinstance(geometry, UnitSphere):
        L = math.isqrt(N - 1) if N > 1 else 0
        while (L + 1) ** 2 < N:
            L += 1
        cands = [SphereIndex(l, m) for l in range(L + 1) for m in range(-l, l + 1)]
    elif isinstance(geometry, FlatTorus):
        cands = _torus_candidates(geometry, N)
    else:
        raise GeometryError(f"unknown geometry {geometry!r}")

    keyed = sorted((index_eigenvalue(geometry, ix), tuple(ix), ix) for ix in cands)[:N]
    return BasisSpec(geometry, tuple(k[2] for k in keyed), _frozen([k[0] for k in keyed]))


def basis_eigenvalue(spec: BasisSpec, i: int) -> float:
    if not 0 <= i < spec.N:
        raise IndexError(f"basis index {i} out of range for N={spec.N}")
    return index_eigenvalue(spec.geometry, spec.indices[i])


def normalized_legendre(lmax: int, x: np.ndarray) -> np.ndarray:
    """Orthonormal associated Legendre functions without Condon-Shortley phase.

    Returns ``p[l, m, :]`` for ``0 <= m <= l <= lmax`` such that
    ``p[l, m](cos theta) * exp(i m phi)`` has unit norm on the sphere.
    """
    x = np.asarray(x, dtype=float)
    s = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    p = np.zeros((lmax + 1, lmax + 1) + x.shape)
    pmm = np.full(x.shape, math.sqrt(1.0 / (4 * math.pi)))
    for m in range(lmax + 1):
        if m > 0:
            pmm = pmm * s * math.sqrt((2 * m + 1) / (2 * m))
        p[m, m] = pmm
        if m + 1 <= lmax:
            p[m + 1, m] = x * math.sqrt(2 * m + 3) * pmm
        for l in range(m + 2, lmax + 1):
            a = math.sqrt((4 * l * l - 1) / (l * l - m * m))
            b = math.sqrt(((l - 1) ** 2 - m * m) / (4 * (l - 1) ** 2 - 1))
            p[l, m] = a * (x * p[l - 1, m] - b * p[l - 2, m])
    return p


def _check_points(geometry: AmbientGeometry, points) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise GeometryError(f"chart points must have shape (n, 2), got {pts.shape}")
    bad = ~geometry.in_chart(pts)
    if bad.any():
        raise GeometryError(f"point {pts[np.argmax(bad)].tolist()} lies outside the {geometry.tag} chart")
    return pts


def basis_matrix(spec: BasisSpec, points, check: bool = True) -> np.ndarray:
    """Evaluate every basis function at every point; shape ``(len(points), N)``."""
    g = spec.geometry
    pts = _check_points(g, points) if check else np.asarray(points, dtype=float)
    idx = spec.index_array()

    if isinstance(g, Rectangle):
        c = 2.0 / math.sqrt(g.area)
        fx = np.sin(np.outer(pts[:, 0], idx[:, 0] * (math.pi / g.a1)))
        fy = np.sin(np.outer(pts[:, 1], idx[:, 1] * (math.pi / g.a2)))
        return c * fx * fy

    if isinstance(g, UnitSphere):
        lmax = int(idx[:, 0].max())
        p = normalized_legendre(lmax, np.cos(pts[:, 0]))
        out = np.empty((len(pts), spec.N))
        for j, (l, m) in enumerate(idx):
            if m == 0:
                out[:, j] = p[l, 0]
            elif m > 0:
                out[:, j] = math.sqrt(2) * p[l, m] * np.cos(m * pts[:, 1])
            else:
                out[:, j] = math.sqrt(2) * p[l, -m] * np.sin(-m * pts[:, 1])
        return out

    if isinstance(g, FlatTorus):
        u = g.cell_coordinates(pts)
        arg = 2 * math.pi * (u @ idx.T.astype(float))
        scale = 1.0 / math.sqrt(g.area)
        out = np.empty((len(pts), spec.N))
        for j, ix in enumerate(spec.indices):
            if ix.parity == "const":
                out[:, j] = scale
            elif ix.parity == "cos":
                out[:, j] = math.sqrt(2) * scale * np.cos(arg[:, j])
            else:
                out[:, j] = math.sqrt(2) * scale * np.sin(arg[:, j])
        return out

    raise GeometryError(f"unknown geometry {g!r}")


def basis_eval(spec: BasisSpec, i: int, point) -> float:
    """Value of the ``i``-th orthonormal basis function at one chart point."""
    if not 0 <= i < spec.N:
        raise IndexError(f"basis index {i} out of range for N={spec.N}")
    sub = BasisSpec(spec.geometry, (spec.indices[i],), spec.eigenvalues[i : i + 1])
    return float(basis_matrix(sub, [point])[0, 0])


@dataclass(frozen=True)
class QuadratureGrid:
    geometry: AmbientGeometry
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    resolution: tuple

    def describe(self) -> dict:
        return {"geometry": self.geometry.tag, "resolution": list(self.resolution), "nodes": len(self.weights)}


def quadrature(geometry: AmbientGeometry, resolution) -> QuadratureGrid:
    """Tensor quadrature whose weights carry the host's volume form.

    Rectangle and torus use the midpoint rule (for the torus in cell
    coordinates, so ``x = u B``). The sphere uses Gauss-Legendre in
    ``cos(theta)`` times the periodic trapezoid rule in ``phi``.
    """
    r1, r2 = (int(r) for r in resolution)
    if r1 < 2 or r2 < 2 or (r1, r2) != tuple(resolution):
        raise GeometryError(f"resolution components must be integers >= 2, got {resolution}")

    if isinstance(geometry, Rectangle):
        x = (np.arange(r1) + 0.5) * (geometry.a1 / r1)
        y = (np.arange(r2) + 0.5) * (geometry.a2 / r2)
        X, Y = np.meshgrid(x, y, indexing="ij")
        nodes = np.stack([X.ravel(), Y.ravel()], axis=1)
        weights = np.full(r1 * r2, geometry.area / (r1 * r2))
    elif isinstance(geometry, UnitSphere):
        ct, wt = roots_legendre(r1)
        th = np.arccos(ct)[::-1]
        wt = wt[::-1]
        ph = np.arange(r2) * (2 * math.pi / r2)
        T, P = np.meshgrid(th, ph, indexing="ij")
        nodes = np.stack([T.ravel(), P.ravel()], axis=1)
        weights = np.outer(wt, np.full(r2, 2 * math.pi / r2)).ravel()
    elif isinstance(geometry, FlatTorus):
        u1 = (np.arange(r1) + 0.5) / r1
        u2 = (np.arange(r2) + 0.5) / r2
        U1, U2 = np.meshgrid(u1, u2, indexing="ij")
        nodes = np.stack([U1.ravel(), U2.ravel()], axis=1) @ geometry.matrix
        weights = np.full(r1 * r2, geometry.area / (r1 * r2))
    else:
        raise GeometryError(f"unknown geometry {geometry!r}")
    return QuadratureGrid(geometry, _frozen(nodes), _frozen(weights), (r1, r2))


def _even(n: int) -> int:
    return max(2, n + (n % 2))


def default_resolution(spec: BasisSpec, nodes_per_halfwave: int = 4) -> tuple[int, int]:
    """Grid size giving ``nodes_per_halfwave`` nodes per half-wavelength of the
    highest retained mode along each coordinate (rounded up to even)."""
    g = spec.geometry
    idx = np.abs(spec.index_array())
    k = nodes_per_halfwave
    if isinstance(g, Rectangle):
        return _even(k * int(idx[:, 0].max())), _even(k * int(idx[:, 1].max()))
    if isinstance(g, UnitSphere):
        L = int(idx[:, 0].max())
        # exactness of the Gram matrix needs n_theta > L and n_phi > 2L
        return max(_even(k * L), L + 1), max(_even(2 * k * L), 2 * L + 2)
    if isinstance(g, FlatTorus):
        return _even(2 * k * int(idx[:, 0].max())), _even(2 * k * int(idx[:, 1].max()))
    raise GeometryError(f"unknown geometry {g!r}")


def geometry_to_dict(g: AmbientGeometry) -> dict:
    if isinstance(g, Rectangle):
        return {"kind": "rectangle", "a1": g.a1, "a2": g.a2}
    if isinstance(g, UnitSphere):
        return {"kind": "sphere"}
    if isinstance(g, FlatTorus):
        return {"kind": "torus", "B": [list(r) for r in g.B]}
    raise GeometryError(f"unknown geometry {g!r}")


def geometry_from_dict(d: dict) -> AmbientGeometry:
    kind = d.get("kind")
    if kind == "rectangle":
        return Rectangle(float(d["a1"]), float(d["a2"]))
    if kind == "sphere":
        return UnitSphere()
    if kind == "torus":
        return FlatTorus(tuple(tuple(r) for r in d.get("B", [[1.0, 0.0], [0.0, 1.0]])))
    raise GeometryError(f"unknown geometry kind {kind!r}")
