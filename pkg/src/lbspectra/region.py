"""Boolean shape algebra for the domain embedded in a host space.

Planar primitives work in rectangle and torus charts, spherical primitives take
``(theta, phi)`` chart points. Every primitive is half-open: it contains its
lower/closed boundary and excludes the upper/open one (``Box`` is ``[lo, hi)``,
``Disk`` is ``|x - c| < r``, ``HalfPlane`` is ``<n, x> >= offset``).
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .geometry import AmbientGeometry, FlatTorus, Rectangle, UnitSphere

__all__ = [
    "RegionError",
    "Region",
    "Full",
    "HalfPlane",
    "Box",
    "Disk",
    "ConvexPolygon",
    "SphericalCap",
    "SphericalLune",
    "TorusHole",
    "Union",
    "Intersection",
    "Complement",
    "Domain",
    "contains",
    "complement_indicator",
    "builtin_domains",
    "region_from_dict",
    "region_to_dict",
    "region_hash",
    "sphere_to_cartesian",
]


class RegionError(ValueError):
    pass


def sphere_to_cartesian(points: np.ndarray) -> np.ndarray:
    th, ph = points[:, 0], points[:, 1]
    st = np.sin(th)
    return np.stack([st * np.cos(ph), st * np.sin(ph), np.cos(th)], axis=1)


class Region:
    """Base class; subclasses implement ``_contains`` on an ``(n, 2)`` array."""

    chart = "any"

    def _contains(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __or__(self, other):
        return Union((self, other))

    def __and__(self, other):
        return Intersection((self, other))

    def __invert__(self):
        return Complement(self)


@dataclass(frozen=True)
class Full(Region):
    """The whole host space."""

    def _contains(self, pts):
        return np.ones(len(pts), dtype=bool)


@dataclass(frozen=True)
class HalfPlane(Region):
    normal: tuple
    offset: float = 0.0
    chart = "plane"

    def _contains(self, pts):
        return pts @ np.asarray(self.normal, dtype=float) >= self.offset


@dataclass(frozen=True)
class Box(Region):
    lo: tuple
    hi: tuple
    chart = "plane"

    def __post_init__(self):
        if not all(h > l for l, h in zip(self.lo, self.hi)):
            raise RegionError(f"box needs lo < hi, got {self.lo}, {self.hi}")

    def _contains(self, pts):
        lo, hi = np.asarray(self.lo, float), np.asarray(self.hi, float)
        return np.all((pts >= lo) & (pts < hi), axis=1)


@dataclass(frozen=True)
class Disk(Region):
    center: tuple
    radius: float
    chart = "plane"

    def __post_init__(self):
        if not self.radius > 0:
            raise RegionError(f"disk radius must be positive, got {self.radius}")

    def _contains(self, pts):
        d = pts - np.asarray(self.center, float)
        return np.einsum("ij,ij->i", d, d) < self.radius**2


@dataclass(frozen=True)
class ConvexPolygon(Region):
    """Closed convex polygon; vertices in either orientation."""

    vertices: tuple
    chart = "plane"

    def __post_init__(self):
        v = np.asarray(self.vertices, float)
        if v.ndim != 2 or v.shape[0] < 3 or v.shape[1] != 2:
            raise RegionError("polygon needs at least 3 planar vertices")
        e = np.roll(v, -1, axis=0) - v
        cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
        scale = np.abs(e).max() ** 2
        if np.all(np.abs(cross) <= 1e-12 * scale):
            raise RegionError("polygon vertices are collinear")
        nz = cross[np.abs(cross) > 1e-12 * scale]
        if not (np.all(nz > 0) or np.all(nz < 0)):
            raise RegionError("polygon is not convex")
        object.__setattr__(self, "vertices", tuple(tuple(float(c) for c in p) for p in v))

    def _contains(self, pts):
        v = np.asarray(self.vertices, float)
        e = np.roll(v, -1, axis=0) - v
        area2 = np.sum(v[:, 0] * np.roll(v, -1, axis=0)[:, 1] - np.roll(v, -1, axis=0)[:, 0] * v[:, 1])
        sign = 1.0 if area2 > 0 else -1.0
        inside = np.ones(len(pts), dtype=bool)
        for k in range(len(v)):
            d = pts - v[k]
            inside &= sign * (e[k, 0] * d[:, 1] - e[k, 1] * d[:, 0]) >= 0
        return inside


@dataclass(frozen=True)
class SphericalCap(Region):
    """Points within geodesic distance ``radius`` (exclusive) of ``center``.

    ``center`` is any nonzero 3-vector; it is normalized when testing points.
    """

    center: tuple
    radius: float
    chart = "sphere"

    def __post_init__(self):
        c = np.asarray(self.center, float)
        n = np.linalg.norm(c)
        if c.shape != (3,) or n == 0:
            raise RegionError("cap center must be a nonzero 3-vector")
        if not 0 < self.radius < math.pi:
            raise RegionError(f"cap radius must lie in (0, pi), got {self.radius}")
        object.__setattr__(self, "center", tuple(float(t) for t in c))

    def _contains(self, pts):
        c = np.asarray(self.center)
        dots = sphere_to_cartesian(pts) @ (c / np.linalg.norm(c))
        return dots > math.cos(self.radius)


@dataclass(frozen=True)
class SphericalLune(Region):
    """Coordinate patch ``theta in [theta0, theta1)``, ``phi in [phi0, phi1)``."""

    theta: tuple
    phi: tuple
    chart = "sphere"

    def __post_init__(self):
        t0, t1 = self.theta
        p0, p1 = self.phi
        if not (0 <= t0 < t1 <= math.pi and 0 <= p0 < p1 <= 2 * math.pi):
            raise RegionError(f"invalid lune ranges theta={self.theta} phi={self.phi}")

    def _contains(self, pts):
        t0, t1 = self.theta
        p0, p1 = self.phi
        th, ph = pts[:, 0], np.mod(pts[:, 1], 2 * math.pi)
        return (th >= t0) & (th < t1) & (ph >= p0) & (ph < p1)


@dataclass(frozen=True)
class TorusHole(Region):
    """A planar shape repeated over every cell of the lattice ``Z^2 B``."""

    shape: Region
    B: tuple = ((1.0, 0.0), (0.0, 1.0))
    chart = "plane"

    def __post_init__(self):
        object.__setattr__(self, "B", FlatTorus(self.B).B)

    def _contains(self, pts):
        torus = FlatTorus(self.B)
        base = torus.wrap(pts)
        Bm = torus.matrix
        hit = np.zeros(len(pts), dtype=bool)
        for i in (-1, 0, 1):
            for j in (-1, 0, 1):
                hit |= self.shape._contains(base + i * Bm[0] + j * Bm[1])
        return hit


@dataclass(frozen=True)
class Union(Region):
    parts: tuple

    def _contains(self, pts):
        out = np.zeros(len(pts), dtype=bool)
        for p in self.parts:
            out |= p._contains(pts)
        return out


@dataclass(frozen=True)
class Intersection(Region):
    parts: tuple

    def _contains(self, pts):
        out = np.ones(len(pts), dtype=bool)
        for p in self.parts:
            out &= p._contains(pts)
        return out


@dataclass(frozen=True)
class Complement(Region):
    part: Region

    def _contains(self, pts):
        return ~self.part._contains(pts)


def _as_points(points) -> tuple[np.ndarray, bool]:
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    return np.atleast_2d(pts), single


def contains(region: Region, points):
    """Membership of one point (returns bool) or of an ``(n, 2)`` array."""
    pts, single = _as_points(points)
    out = region._contains(pts)
    return bool(out[0]) if single else out


def complement_indicator(region: Region, points):
    """``1`` where a point lies in the host but outside the domain, else ``0``."""
    pts, single = _as_points(points)
    out = (~region._contains(pts)).astype(np.int8)
    return int(out[0]) if single else out


def _walk(region: Region):
    yield region
    if isinstance(region, (Union, Intersection)):
        for p in region.parts:
            yield from _walk(p)
    elif isinstance(region, Complement):
        yield from _walk(region.part)
    elif isinstance(region, TorusHole):
        yield from _walk(region.shape)


def check_compatible(region: Region, geometry: AmbientGeometry) -> None:
    """Raise if the region uses primitives from the wrong chart."""
    want = "sphere" if isinstance(geometry, UnitSphere) else "plane"
    for r in _walk(region):
        if r.chart not in ("any", want):
            raise RegionError(f"{type(r).__name__} cannot be used on a {geometry.tag}")


@dataclass(frozen=True)
class Domain:
    name: str
    geometry: AmbientGeometry
    region: Region
    description: str = ""


# Hole sizes below are stand-ins, chosen only to break symmetry cleanly.
SINAI_RADIUS = 0.5
OCTANT_HOLE_RADIUS = 0.3
TORUS_HOLE_RADIUS = 0.25


def _half_space(normal) -> SphericalCap:
    return SphericalCap(tuple(normal), math.pi / 2)


def builtin_domains() -> dict[str, Domain]:
    """Named catalog of domains paired with their host spaces."""
    s3 = math.sqrt(3.0)
    octant = SphericalLune((0.0, math.pi / 2), (0.0, math.pi / 2))
    hole = SphericalCap((1.0, 1.0, 1.0), OCTANT_HOLE_RADIUS)
    torus = FlatTorus(((1.0, 0.0), (0.0, 1.0)))
    doms = [
        Domain("l_shape", Rectangle(2.0, 2.0), Complement(Box((1.0, 1.0), (2.0, 2.0))),
               "square (0,2)^2 minus [1,2)^2"),
        Domain("equilateral_triangle", Rectangle(1.0, s3 / 2),
               ConvexPolygon(((0.0, 0.0), (1.0, 0.0), (0.5, s3 / 2))),
               "unit-side equilateral triangle in its bounding rectangle"),
        Domain("sinai", Rectangle(2.0, 2.0), Complement(Disk((1.0, 1.0), SINAI_RADIUS)),
               "square (0,2)^2 with a central disk removed"),
        Domain("desymmetrized_sinai", Rectangle(1.0, 1.0),
               Intersection((HalfPlane((1.0, -1.0), 0.0), Complement(Disk((1.0, 1.0), SINAI_RADIUS)))),
               "one eighth of the Sinai billiard: 0 < y < x < 1 outside the disk"),
        Domain("hemisphere", UnitSphere(), SphericalCap((0.0, 0.0, 1.0), math.pi / 2), "upper hemisphere"),
        Domain("spherical_octant", UnitSphere(), octant, "x, y, z > 0"),
        Domain("spherical_square", UnitSphere(),
               Intersection(tuple(_half_space(n) for n in
                                  ((-1, 0, 1), (1, 0, 1), (0, -1, 1), (0, 1, 1)))),
               "cube face z > |x|, |y| projected to the sphere"),
        Domain("octant_with_hole", UnitSphere(), Intersection((octant, Complement(hole))),
               "octant minus a cap at its centroid"),
        Domain("desymmetrized_octant_with_hole", UnitSphere(),
               Intersection((octant, Complement(hole), _half_space((1, -1, 0)), _half_space((0, 1, -1)))),
               "sixth of the holed octant: x > y > z > 0"),
        Domain("torus_with_hole", torus,
               Complement(TorusHole(Disk((0.5, 0.5), TORUS_HOLE_RADIUS), torus.B)),
               "unit flat torus with a centred disk removed in every cell"),
        Domain("torus_asymmetric_holes", torus,
               Complement(Union((
                   TorusHole(Disk((0.3, 0.6), 0.18), torus.B),
                   TorusHole(ConvexPolygon(((0.6, 0.15), (0.85, 0.2), (0.7, 0.4))), torus.B),
               ))),
               "unit flat torus with a disk and a triangle removed, no symmetry"),
    ]
    return {d.name: d for d in doms}


_PRIMS = {
    "full": Full,
    "half_plane": HalfPlane,
    "box": Box,
    "disk": Disk,
    "polygon": ConvexPolygon,
    "cap": SphericalCap,
    "lune": SphericalLune,
}
_NAMES = {v: k for k, v in _PRIMS.items()}


def _tuplify(v):
    if isinstance(v, (list, tuple)):
        return tuple(_tuplify(t) for t in v)
    return float(v) if isinstance(v, (int, float)) and not isinstance(v, bool) else v


def region_from_dict(d: dict[str, Any]) -> Region:
    """Build a region from a nested ``{"shape": ...}`` / ``{"op": ...}`` tree."""
    if "op" in d:
        op = d["op"]
        if op == "union":
            return Union(tuple(region_from_dict(a) for a in d["args"]))
        if op == "intersection":
            return Intersection(tuple(region_from_dict(a) for a in d["args"]))
        if op == "complement":
            return Complement(region_from_dict(d["arg"]))
        if op == "periodic":
            return TorusHole(region_from_dict(d["arg"]), _tuplify(d.get("B", [[1, 0], [0, 1]])))
        raise RegionError(f"unknown region op {op!r}")
    shape = d.get("shape")
    if shape not in _PRIMS:
        raise RegionError(f"unknown region shape {shape!r}")
    params = {k: _tuplify(v) for k, v in d.items() if k != "shape"}
    try:
        return _PRIMS[shape](**params)
    except TypeError as exc:
        raise RegionError(f"bad parameters for {shape}: {exc}") from exc


def _listify(v):
    if isinstance(v, tuple):
        return [_listify(t) for t in v]
    return v


def region_to_dict(r: Region) -> dict[str, Any]:
    if isinstance(r, Union):
        return {"op": "union", "args": [region_to_dict(p) for p in r.parts]}
    if isinstance(r, Intersection):
        return {"op": "intersection", "args": [region_to_dict(p) for p in r.parts]}
    if isinstance(r, Complement):
        return {"op": "complement", "arg": region_to_dict(r.part)}
    if isinstance(r, TorusHole):
        return {"op": "periodic", "arg": region_to_dict(r.shape), "B": _listify(r.B)}
    out: dict[str, Any] = {"shape": _NAMES[type(r)]}
    for k, v in r.__dict__.items():
        out[k] = _listify(v)
    return out


def region_hash(r: Region) -> str:
    blob = json.dumps(region_to_dict(r), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
