"""Run configuration: a TOML document with nested tables for region trees."""
from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field
from typing import Any

import tomli
import tomli_w

from .assembly import DEFAULT_V0
from .geometry import GeometryError, geometry_from_dict
from .region import Domain, RegionError, builtin_domains, check_compatible, region_from_dict

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class RunConfig:
    region: dict[str, Any]
    geometry: dict[str, Any] | None = None
    N: int = 225
    truncation: str = "eigenvalue"
    V0: float = DEFAULT_V0
    resolution: list[int] | None = None
    nodes_per_halfwave: int = 4
    K: int | None = None
    sample_resolution: list[int] = field(default_factory=lambda: [64, 64])
    options: dict[str, Any] = field(default_factory=dict)
    out: str = "out"
    seed: int = 0
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict[str, Any]:
        return {k: v for k, v in asdict(self).items() if v is not None}

    def domain(self) -> Domain:
        """Resolve the region and its host geometry, checking they agree."""
        reg = self.region
        try:
            if "name" in reg:
                cat = builtin_domains()
                if reg["name"] not in cat:
                    raise ConfigError("region.name", f"unknown domain {reg['name']!r}; choose from {sorted(cat)}")
                dom = cat[reg["name"]]
                geom = dom.geometry if self.geometry is None else geometry_from_dict(self.geometry)
                region = dom.region
                name = dom.name
            else:
                if self.geometry is None:
                    raise ConfigError("geometry", "required when the region is given as a tree")
                geom = geometry_from_dict(self.geometry)
                region = region_from_dict(reg["tree"])
                name = reg.get("label", "custom")
        except GeometryError as exc:
            raise ConfigError("geometry", str(exc)) from exc
        except RegionError as exc:
            raise ConfigError("region", str(exc)) from exc
        try:
            check_compatible(region, geom)
        except RegionError as exc:
            raise ConfigError("region", str(exc)) from exc
        return Domain(name, geom, region)


def _positive(path: str, v, kind=float):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or (kind is int and int(v) != v) or not v > 0:
        raise ConfigError(path, f"must be a positive {kind.__name__}, got {v!r}")
    return kind(v)


def from_dict(d: dict[str, Any]) -> RunConfig:
    d = copy.deepcopy(d)
    version = d.pop("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported version {version}")
    known = set(RunConfig.__dataclass_fields__)
    extra = set(d) - known
    if extra:
        raise ConfigError(sorted(extra)[0], "unknown key")
    if "region" not in d or not isinstance(d["region"], dict):
        raise ConfigError("region", "a [region] table with 'name' or 'tree' is required")
    if not ("name" in d["region"] or "tree" in d["region"]):
        raise ConfigError("region", "needs 'name' or 'tree'")
    if "N" in d:
        d["N"] = _positive("N", d["N"], int)
    if "V0" in d:
        d["V0"] = _positive("V0", d["V0"])
    if "K" in d:
        d["K"] = _positive("K", d["K"], int)
    if "nodes_per_halfwave" in d:
        d["nodes_per_halfwave"] = _positive("nodes_per_halfwave", d["nodes_per_halfwave"], int)
    for key in ("resolution", "sample_resolution"):
        if key in d:
            r = d[key]
            if not (isinstance(r, list) and len(r) == 2):
                raise ConfigError(key, "must be a pair of integers")
            d[key] = [_positive(f"{key}[{i}]", v, int) for i, v in enumerate(r)]
            if key == "resolution" and min(d[key]) < 2:
                raise ConfigError(key, "components must be >= 2")
    if "seed" in d:
        s = d["seed"]
        if isinstance(s, bool) or not isinstance(s, int) or not 0 <= s < 2**64:
            raise ConfigError("seed", "must be an unsigned 64-bit integer")
    if d.get("truncation", "eigenvalue") not in ("eigenvalue", "box"):
        raise ConfigError("truncation", "must be 'eigenvalue' or 'box'")
    cfg = RunConfig(**d)
    cfg.domain()
    return cfg


def loads(text: str) -> RunConfig:
    try:
        return from_dict(tomli.loads(text))
    except tomli.TOMLDecodeError as exc:
        raise ConfigError("<document>", str(exc)) from exc


def dumps(cfg: RunConfig) -> str:
    return tomli_w.dumps(cfg.to_dict())


def load(path) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            text = fh.read().decode()
    except OSError as exc:
        raise ConfigError("--config", str(exc)) from exc
    return loads(text)
