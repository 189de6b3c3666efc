"""Funnel-plot envelopes, coverage counting and asymmetry diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import StudyRecord, large_study_mean

__all__ = [
    "EnvelopeSpec",
    "CoverageReport",
    "AsymmetryReport",
    "VarianceFit",
    "envelope_pi",
    "envelope_n",
    "envelope_curve",
    "inside_flags",
    "coverage",
    "fit_variance_factor",
    "fit_variance",
    "wp_estimate",
    "asymmetry",
]

V_BOUNDS = (0.05, 20.0)


@dataclass(frozen=True)
class EnvelopeSpec:
    """Confidence envelope ``wp +/- z0 * sqrt(wp (1 - wp) / N) * V``."""

    z0: float = 1.96
    v_factor: float = 1.0
    wp: float = 0.5
    n_range: tuple[int, int] = (100, 10**7)

    def __post_init__(self) -> None:
        if not self.z0 > 0:
            raise ValueError("z0 must be positive")
        if not self.v_factor > 0:
            raise ValueError("v_factor must be positive")
        if not 0.0 <= self.wp <= 1.0:
            raise ValueError("wp must lie in [0, 1]")

    def half_width(self, n) -> np.ndarray | float:
        return self.z0 * self.v_factor * np.sqrt(self.wp * (1.0 - self.wp) / np.asarray(n, dtype=float))


def envelope_pi(spec: EnvelopeSpec, n: int) -> tuple[float, float]:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    h = float(spec.half_width(n))
    return max(spec.wp - h, 0.0), min(spec.wp + h, 1.0)


def envelope_n(spec: EnvelopeSpec, pi: float) -> float:
    """Study size at which the envelope passes through ``pi``."""
    if pi == spec.wp:
        raise ValueError("the envelope never reaches the centre line")
    return spec.z0**2 * spec.v_factor**2 * spec.wp * (1.0 - spec.wp) / (pi - spec.wp) ** 2


def envelope_curve(spec: EnvelopeSpec, points: int = 200) -> np.ndarray:
    """Polyline ``(N, lower, upper)`` log-spaced over ``spec.n_range``."""
    lo, hi = spec.n_range
    n = np.logspace(math.log10(lo), math.log10(hi), points)
    h = spec.half_width(n)
    return np.column_stack([n, np.clip(spec.wp - h, 0, 1), np.clip(spec.wp + h, 0, 1)])


@dataclass(frozen=True)
class CoverageReport:
    n_total: int
    n_inside: int
    n_on_or_outside: int
    fraction_inside: float
    inside: np.ndarray = field(repr=False)


def _arrays(records: Iterable[StudyRecord]) -> tuple[np.ndarray, np.ndarray]:
    records = list(records)
    pis = np.array([r.pi for r in records], dtype=float)
    sizes = np.array([r.n_bits for r in records], dtype=float)
    return pis, sizes


def inside_flags(pis, sizes, spec: EnvelopeSpec) -> np.ndarray:
    """Strictly-inside flags for raw ``(pi, N)`` arrays; points on a curve count as outside."""
    pis = np.asarray(pis, dtype=float)
    h = spec.half_width(sizes)
    lower = np.clip(spec.wp - h, 0.0, 1.0)
    upper = np.clip(spec.wp + h, 0.0, 1.0)
    return ((pis > lower) & (pis < upper)) | (pis == spec.wp)


def coverage(records: Iterable[StudyRecord], spec: EnvelopeSpec) -> CoverageReport:
    pis, sizes = _arrays(records)
    if pis.size == 0:
        raise ValueError("coverage needs at least one record")
    flags = inside_flags(pis, sizes, spec)
    n_in = int(flags.sum())
    return CoverageReport(pis.size, n_in, pis.size - n_in, n_in / pis.size, flags)


@dataclass(frozen=True)
class VarianceFit:
    v_factor: float
    wp: float
    coverage: float
    degenerate: bool


def fit_variance(
    records: Iterable[StudyRecord],
    z0: float = 1.96,
    target_coverage: float = 0.95,
    wp: Optional[float] = None,
    tol: float = 1e-3,
) -> VarianceFit:
    """Smallest variance factor whose envelope holds ``target_coverage`` of the records.

    Coverage is a non-decreasing step function of ``V``; bisection over
    ``[0.05, 20]`` brackets the step to within ``tol``. The centre defaults to
    :func:`wp_estimate`. A fit pinned at the lower bound is flagged as
    degenerate (no scatter to explain).
    """
    pis, sizes = _arrays(records)
    if pis.size < 20:
        raise ValueError(f"need at least 20 records to fit V, got {pis.size}")
    if not 0.0 < target_coverage < 1.0:
        raise ValueError("target_coverage must lie in (0, 1)")
    if wp is None:
        wp = large_study_mean(pis, sizes)[0]

    def frac(v: float) -> float:
        return float(inside_flags(pis, sizes, EnvelopeSpec(z0, v, wp)).mean())

    lo, hi = V_BOUNDS
    if frac(hi) < target_coverage:
        raise ValueError(f"coverage {target_coverage} not reachable with V <= {hi}")
    if frac(lo) >= target_coverage:
        return VarianceFit(lo, wp, frac(lo), True)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if frac(mid) >= target_coverage:
            hi = mid
        else:
            lo = mid
    return VarianceFit(hi, wp, frac(hi), False)


def fit_variance_factor(
    records: Iterable[StudyRecord],
    z0: float = 1.96,
    target_coverage: float = 0.95,
    wp: Optional[float] = None,
) -> float:
    return fit_variance(records, z0, target_coverage, wp).v_factor


def wp_estimate(records: Iterable[StudyRecord], large_n_quantile: float = 0.1, minimum: int = 5) -> float:
    """Size-weighted mean effect of the largest studies (where the funnel converges)."""
    pis, sizes = _arrays(records)
    if pis.size < minimum:
        raise ValueError(f"need at least {minimum} large studies, got {pis.size} records")
    return large_study_mean(pis, sizes, large_n_quantile, minimum)[0]


@dataclass(frozen=True)
class AsymmetryReport:
    """Quadrant counts split at ``wp`` (effect) and ``n_threshold`` (size).

    ``imbalance`` is ``(above - below) / (above + below)`` over small studies;
    records sitting exactly on ``wp`` are counted in ``on_center`` only.
    """

    wp: float
    n_threshold: int
    small_above: int
    small_below: int
    large_above: int
    large_below: int
    on_center: int
    imbalance: float

    @property
    def n_total(self) -> int:
        return self.small_above + self.small_below + self.large_above + self.large_below + self.on_center

    def regions(self) -> dict[str, str]:
        def label(count: int, other: int) -> str:
            if count == 0:
                return "void"
            return "dense" if count > 1.5 * other else "balanced"

        return {
            "small_above": label(self.small_above, self.small_below),
            "small_below": label(self.small_below, self.small_above),
        }


def asymmetry(records: Iterable[StudyRecord], wp: float = 0.5, n_threshold: int = 10**5) -> AsymmetryReport:
    pis, sizes = _arrays(records)
    if pis.size == 0:
        raise ValueError("asymmetry needs at least one record")
    small = sizes < n_threshold
    above = pis > wp
    below = pis < wp
    sa, sb = int((small & above).sum()), int((small & below).sum())
    denom = sa + sb
    return AsymmetryReport(
        wp=wp,
        n_threshold=int(n_threshold),
        small_above=sa,
        small_below=sb,
        large_above=int((~small & above).sum()),
        large_below=int((~small & below).sum()),
        on_center=int((pis == wp).sum()),
        imbalance=(sa - sb) / denom if denom else 0.0,
    )
