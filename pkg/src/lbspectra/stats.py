"""Nearest-neighbour level spacing statistics and billiard classification."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SpacingSample",
    "Classification",
    "INCONCLUSIVE_MARGIN",
    "spacings",
    "poisson_pdf",
    "poisson_cdf",
    "goe_pdf",
    "goe_cdf",
    "ks_distance",
    "histogram",
    "classify",
    "shell_split_warning",
]

INCONCLUSIVE_MARGIN = 0.02


@dataclass(frozen=True)
class SpacingSample:
    spacings: np.ndarray
    source_count: int

    def __len__(self) -> int:
        return len(self.spacings)


def spacings(
    eigenvalues,
    n: int,
    *,
    drop_degenerate: bool = False,
    unfold_window: int | None = None,
) -> SpacingSample:
    """First ``n`` gaps of an ascending list, scaled to unit mean.

    ``drop_degenerate`` removes gaps below ``1e-8`` times the mean gap, so a
    repeated level is counted once. ``unfold_window`` divides every gap by the
    mean of the surrounding ``unfold_window`` gaps before the final scaling.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.ndim != 1 or len(lam) < n + 1:
        raise ValueError(f"need at least {n + 1} eigenvalues for {n} spacings, got {lam.size}")
    if n < 1:
        raise ValueError("n must be >= 1")
    if np.any(np.diff(lam) < 0):
        raise ValueError("eigenvalues must be ascending")
    gaps = np.diff(lam[: n + 1])
    if drop_degenerate:
        gaps = gaps[gaps >= 1e-8 * gaps.mean()]
    if unfold_window:
        half = max(1, unfold_window // 2)
        c = np.concatenate([[0.0], np.cumsum(gaps)])
        i = np.arange(len(gaps))
        lo = np.clip(i - half, 0, None)
        hi = np.clip(i + half + 1, None, len(gaps))
        local = (c[hi] - c[lo]) / (hi - lo)
        gaps = gaps / np.where(local > 0, local, 1.0)
    mean = gaps.mean()
    if not mean > 0:
        raise ValueError("all gaps are zero")
    s = gaps / mean
    s.flags.writeable = False
    return SpacingSample(s, int(n + 1))


def _check_s(s):
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("spacing must be non-negative")
    return s


def poisson_pdf(s):
    return np.exp(-_check_s(s))


def poisson_cdf(s):
    return -np.expm1(-_check_s(s))


def goe_pdf(s):
    s = _check_s(s)
    return 0.5 * math.pi * s * np.exp(-math.pi * s * s / 4)


def goe_cdf(s):
    s = _check_s(s)
    return -np.expm1(-math.pi * s * s / 4)


def ks_distance(sample: SpacingSample | np.ndarray, cdf) -> float:
    """Kolmogorov-Smirnov distance between the sample and a reference CDF."""
    x = np.sort(np.asarray(getattr(sample, "spacings", sample), dtype=float))
    n = len(x)
    if n == 0:
        raise ValueError("empty sample")
    F = cdf(x)
    above = np.arange(1, n + 1) / n - F
    below = F - np.arange(n) / n
    return float(max(above.max(), below.max()))


def histogram(sample: SpacingSample, bin_width: float, max_s: float):
    """Area-normalized histogram on ``[0, max_s]``.

    Returns ``(left_edges, right_edges, density)``; the bin areas sum to the
    fraction of the sample that is at most ``max_s``.
    """
    if not (bin_width > 0 and max_s > 0):
        raise ValueError("bin_width and max_s must be positive")
    nb = max(1, int(math.ceil(max_s / bin_width - 1e-12)))
    edges = np.arange(nb + 1) * bin_width
    s = np.asarray(sample.spacings)
    counts, _ = np.histogram(s[s <= edges[-1]], bins=edges)
    density = counts / (len(s) * bin_width)
    return edges[:-1], edges[1:], density


@dataclass(frozen=True)
class Classification:
    label: str
    ks_poisson: float
    ks_goe: float


def classify(sample: SpacingSample, margin: float = INCONCLUSIVE_MARGIN) -> Classification:
    """Label a spectrum ``poisson_like`` or ``goe_like`` by the nearer reference.

    The rule is a heuristic: when the two KS distances differ by less than
    ``margin`` the verdict is ``inconclusive``.
    """
    dp = ks_distance(sample, poisson_cdf)
    dg = ks_distance(sample, goe_cdf)
    if abs(dp - dg) < margin:
        label = "inconclusive"
    else:
        label = "poisson_like" if dp < dg else "goe_like"
    return Classification(label, dp, dg)


def shell_split_warning(spec) -> str | None:
    """Warn when a sphere basis stops in the middle of an ``l`` shell."""
    from .geometry import UnitSphere

    if not isinstance(spec.geometry, UnitSphere):
        return None
    l_last = spec.indices[-1].l
    if spec.N != (l_last + 1) ** 2:
        msg = (
            f"basis of size {spec.N} splits the l={l_last} shell; "
            f"use N={(l_last + 1) ** 2} or N={l_last ** 2} to avoid spurious gaps"
        )
        warnings.warn(msg, stacklevel=2)
        return msg
    return None
