"""Study records and the effect-size / standard-error / z-score algebra."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

__all__ = [
    "Condition",
    "StudyRecord",
    "EffectSummary",
    "DatabaseSummary",
    "MergedSummary",
    "effect_size",
    "p_obs_from_effect_size",
    "standard_error",
    "z_score",
    "pi_from_z",
    "summarize",
    "merge_and_average",
    "large_study_mean",
]


class Condition(str, enum.Enum):
    TREATMENT = "Treatment"
    CONTROL = "Control"
    CALIBRATION = "Calibration"

    @classmethod
    def parse(cls, value: str | "Condition") -> "Condition":
        if isinstance(value, cls):
            return value
        for member in cls:
            if member.value.lower() == str(value).strip().lower():
                return member
        raise ValueError(f"unknown condition {value!r}")


def _check_proportion(name: str, value: float) -> None:
    if not (0.0 <= value <= 1.0) or math.isnan(value):
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


def effect_size(p_obs: float, kappa: int = 2) -> float:
    """Map a raw hit proportion onto the binary-equivalent effect size.

    ``pi = p_obs (kappa - 1) / (1 + p_obs (kappa - 2))``. For ``kappa == 2``
    the input is returned unchanged; chance (``1 / kappa``) maps to 0.5.
    """
    _check_proportion("p_obs", p_obs)
    if kappa < 2:
        raise ValueError(f"kappa must be >= 2, got {kappa}")
    if kappa == 2:
        return float(p_obs)
    return p_obs * (kappa - 1) / (1.0 + p_obs * (kappa - 2))


def p_obs_from_effect_size(pi: float, kappa: int = 2) -> float:
    """Inverse of :func:`effect_size`."""
    _check_proportion("pi", pi)
    if kappa < 2:
        raise ValueError(f"kappa must be >= 2, got {kappa}")
    if kappa == 2:
        return float(pi)
    return pi / (kappa - 1 - pi * (kappa - 2))


def standard_error(pi: float, p_obs: float, n_bits: int) -> float:
    """Standard error of an effect size, ``pi (1 - pi) / sqrt(N p_obs (1 - p_obs))``.

    Note the numerator is ``pi (1 - pi)`` rather than its square root. With
    ``pi == p_obs`` it collapses to the binomial ``sqrt(p (1 - p) / N)``.
    """
    if n_bits < 1:
        raise ValueError(f"n_bits must be >= 1, got {n_bits}")
    if not (0.0 < pi < 1.0):
        raise ValueError(f"standard error undefined for pi={pi!r}")
    if not (0.0 < p_obs < 1.0):
        raise ValueError(f"standard error undefined for p_obs={p_obs!r}")
    return pi * (1.0 - pi) / math.sqrt(n_bits * p_obs * (1.0 - p_obs))


def z_score(pi: float, se: float) -> float:
    if not se > 0:
        raise ValueError(f"se must be positive, got {se!r}")
    return (pi - 0.5) / se


def pi_from_z(z: float, n_bits: int, p_obs_assumed: float = 0.5) -> float:
    """Effect size whose z-score is ``z`` for a study of ``n_bits`` bits.

    Solves ``z * pi (1 - pi) = (pi - 0.5) * sqrt(N P (1 - P))`` for ``pi``,
    with ``P`` fixed at ``p_obs_assumed``. The quadratic always has exactly
    one root in (0, 1).
    """
    if n_bits < 1:
        raise ValueError(f"n_bits must be >= 1, got {n_bits}")
    if not (0.0 < p_obs_assumed < 1.0):
        raise ValueError(f"p_obs_assumed must lie in (0, 1), got {p_obs_assumed!r}")
    if z == 0:
        return 0.5
    a = math.sqrt(n_bits * p_obs_assumed * (1.0 - p_obs_assumed))
    # z pi^2 + (a - z) pi - a/2 = 0
    qa, qb, qc = z, a - z, -0.5 * a
    disc = math.sqrt(qb * qb - 4.0 * qa * qc)
    q = -0.5 * (qb + math.copysign(disc, qb))
    roots = [q / qa, qc / q] if q != 0 else [-qb / (2.0 * qa)]
    inside = [r for r in roots if 0.0 < r < 1.0]
    if not inside:
        raise ValueError(f"no effect size in (0, 1) for z={z!r}, n_bits={n_bits}")
    return inside[0]


@dataclass(frozen=True)
class EffectSummary:
    pi: float
    se: float
    z: float


@dataclass(frozen=True)
class StudyRecord:
    """One binary-outcome experiment.

    Only the raw inputs are stored; ``pi``, ``se`` and ``z`` are derived.
    ``se`` and ``z`` are NaN for degenerate outcomes (``p_obs`` of 0 or 1).
    """

    study_id: str
    n_bits: int
    p_obs: float
    kappa: int = 2
    condition: Condition = Condition.TREATMENT
    pub_year: int = 2000
    pub_month: Optional[int] = None

    def __post_init__(self) -> None:
        if self.n_bits < 1:
            raise ValueError(f"{self.study_id}: n_bits must be >= 1")
        _check_proportion("p_obs", self.p_obs)
        if self.kappa < 2:
            raise ValueError(f"{self.study_id}: kappa must be >= 2")
        if self.pub_month is not None and not 1 <= self.pub_month <= 12:
            raise ValueError(f"{self.study_id}: pub_month must be in 1..12")
        object.__setattr__(self, "condition", Condition.parse(self.condition))

    @property
    def pi(self) -> float:
        return effect_size(self.p_obs, self.kappa)

    @property
    def se(self) -> float:
        pi = self.pi
        if not (0.0 < pi < 1.0 and 0.0 < self.p_obs < 1.0):
            return math.nan
        return standard_error(pi, self.p_obs, self.n_bits)

    @property
    def z(self) -> float:
        se = self.se
        return z_score(self.pi, se) if se > 0 else math.nan

    def effect(self) -> EffectSummary:
        return EffectSummary(self.pi, self.se, self.z)

    @property
    def sort_key(self) -> tuple:
        # undated months sort after dated ones within the same year
        month = self.pub_month if self.pub_month is not None else 13
        return (self.pub_year, month, self.study_id)


@dataclass(frozen=True)
class DatabaseSummary:
    count: int
    mean_pi: float
    mean_se: float
    wp_estimate: float = math.nan
    weighted_mean_pi: float = math.nan

    @property
    def sd(self) -> float:
        """Sample standard deviation implied by ``mean_se`` and ``count``."""
        return self.mean_se * math.sqrt(self.count)


@dataclass(frozen=True)
class MergedSummary:
    """Two database summaries combined.

    ``mean_of_means`` is the plain average of the two means;
    ``pooled_mean`` weights each mean by its study count. Both share
    ``pooled_se``, which treats all studies as one sample.
    """

    count: int
    mean_of_means: float
    pooled_mean: float
    pooled_se: float
    wp_estimate: float

    def as_summary(self, rule: str = "means") -> DatabaseSummary:
        mean = self.mean_of_means if rule == "means" else self.pooled_mean
        return DatabaseSummary(self.count, mean, self.pooled_se, self.wp_estimate)


def large_study_mean(
    pis: Sequence[float], sizes: Sequence[int], quantile: float = 0.1, minimum: int = 5
) -> tuple[float, float]:
    """Size-weighted mean effect of the largest studies and its standard error.

    Takes the top ``quantile`` of studies by size, but never fewer than
    ``minimum``. The standard error is binomial, ``sqrt(m (1 - m) / sum N)``.
    """
    pis = np.asarray(pis, dtype=float)
    sizes = np.asarray(sizes, dtype=float)
    if not 0 < quantile <= 1:
        raise ValueError("quantile must lie in (0, 1]")
    take = max(minimum, int(math.ceil(quantile * pis.size)))
    if pis.size < minimum or take > pis.size:
        raise ValueError(f"need at least {minimum} studies, got {pis.size}")
    # stable sort keeps ties in input order
    order = np.argsort(-sizes, kind="stable")[:take]
    w = sizes[order]
    mean = float(np.sum(w * pis[order]) / np.sum(w))
    return mean, math.sqrt(max(mean * (1.0 - mean), 0.0) / float(np.sum(w)))


def summarize(records: Iterable[StudyRecord], large_n_quantile: float = 0.1) -> DatabaseSummary:
    """Unweighted mean effect size with the standard error of that mean.

    The standard error is the sample standard deviation over ``sqrt(count)``;
    a single record falls back to its own standard error. ``wp_estimate`` is
    the size-weighted mean of the largest studies (NaN with fewer than five
    records).
    """
    records = list(records)
    if not records:
        raise ValueError("cannot summarize an empty collection")
    pis = np.array([r.pi for r in records])
    sizes = np.array([r.n_bits for r in records])
    count = len(records)
    if count > 1:
        mean_se = float(np.std(pis, ddof=1) / math.sqrt(count))
    else:
        mean_se = records[0].se
    try:
        wp, _ = large_study_mean(pis, sizes, large_n_quantile)
    except ValueError:
        wp = math.nan
    weighted = float(np.sum(pis * sizes) / np.sum(sizes))
    return DatabaseSummary(count, float(pis.mean()), mean_se, wp, weighted)


def merge_and_average(a: DatabaseSummary, b: DatabaseSummary) -> MergedSummary:
    """Combine two summaries as if both came from the same population."""
    if a.count < 1 or b.count < 1:
        raise ValueError("both summaries must be non-empty")
    n = a.count + b.count
    pooled_mean = (a.count * a.mean_pi + b.count * b.mean_pi) / n
    # total sum of squares of the union, rebuilt from counts, means and sds
    ss = 0.0
    for s in (a, b):
        within = (s.count - 1) * s.sd**2 if s.count > 1 else 0.0
        ss += within + s.count * (s.mean_pi - pooled_mean) ** 2
    pooled_se = math.sqrt(ss / (n - 1) / n) if n > 1 else a.mean_se
    wps = [(s.wp_estimate, s.count) for s in (a, b) if not math.isnan(s.wp_estimate)]
    wp = sum(w * c for w, c in wps) / sum(c for _, c in wps) if wps else math.nan
    return MergedSummary(
        count=n,
        mean_of_means=(a.mean_pi + b.mean_pi) / 2.0,
        pooled_mean=pooled_mean,
        pooled_se=pooled_se,
        wp_estimate=wp,
    )
