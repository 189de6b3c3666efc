"""Two-state Markov bit sources: closed-form statistics and simulation.

Random streams come from numpy's ``default_rng`` (PCG64 seeded through
``SeedSequence``). Independent tasks use the child stream
``SeedSequence(base_seed, spawn_key=(index,))``, so any single replication
can be regenerated alone and runs at neighbouring base seeds share no
streams (``base_seed + index`` would make seed 0, task 1 collide with
seed 1, task 0).

Sequences are simulated run by run: a run of state ``s`` has a geometric
length with success probability ``1 - p_ss``, which is exactly the holding
time of the chain in that state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "MarkovParams",
    "MarkovTheory",
    "BitSequence",
    "FunnelSimulation",
    "derive_rng",
    "theory",
    "self_transition_from_v",
    "correlation_at_distance",
    "generate",
    "count_ones",
    "empirical_correlation",
    "product_correlation",
    "funnel_simulation",
    "batch_means",
    "pack_bits",
    "unpack_bits",
]


def derive_rng(base_seed: int, index: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(base_seed), spawn_key=(int(index),)))


@dataclass(frozen=True)
class MarkovParams:
    """Self-transition probabilities ``p11`` (1 -> 1) and ``p00`` (0 -> 0)."""

    p11: float
    p00: float

    def __post_init__(self) -> None:
        for name in ("p11", "p00"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")
        if self.p11 + self.p00 >= 2.0:
            raise ValueError("p11 = p00 = 1 is an absorbing chain")

    @classmethod
    def symmetric(cls, p: float) -> "MarkovParams":
        return cls(p, p)

    @property
    def p10(self) -> float:
        return 1.0 - self.p11

    @property
    def p01(self) -> float:
        return 1.0 - self.p00

    @property
    def transition_matrix(self) -> np.ndarray:
        """Row-stochastic matrix indexed ``[from_state, to_state]``."""
        return np.array([[self.p00, self.p01], [self.p10, self.p11]])

    @property
    def memoryless(self) -> bool:
        return math.isclose(self.p11 + self.p00, 1.0, abs_tol=1e-15)


@dataclass(frozen=True)
class MarkovTheory:
    wp: float
    sigma0: float
    v_factor: float
    c1: float


def theory(params: MarkovParams, n_bits: int = 1) -> MarkovTheory:
    """Stationary mean, binomial spread at ``n_bits``, variance factor and lag-1 correlation.

    ``c1`` is the second eigenvalue ``p11 + p00 - 1`` of the transition
    matrix, which equals ``2p - 1`` when ``p11 == p00 == p``.
    """
    s = params.p11 + params.p00
    wp = (1.0 - params.p00) / (2.0 - s)
    return MarkovTheory(
        wp=wp,
        sigma0=math.sqrt(wp * (1.0 - wp) / n_bits),
        v_factor=math.sqrt(s / (2.0 - s)),
        c1=s - 1.0,
    )


def self_transition_from_v(v_factor: float) -> float:
    """Symmetric self-transition probability giving variance factor ``v_factor``."""
    if not v_factor > 0:
        raise ValueError(f"v_factor must be positive, got {v_factor!r}")
    v2 = v_factor * v_factor
    return v2 / (v2 + 1.0)


def correlation_at_distance(p: float, k: int) -> float:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p!r}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return (2.0 * p - 1.0) ** k


@dataclass(frozen=True)
class BitSequence:
    bits: np.ndarray = field(repr=False)
    seed: int
    params: MarkovParams

    def __len__(self) -> int:
        return int(self.bits.size)

    def mean(self) -> float:
        return float(self.bits.mean())


def _runs(params: MarkovParams, n_bits: int, rng: np.random.Generator):
    """Alternating run states and lengths covering at least ``n_bits`` bits."""
    wp = theory(params).wp
    first = 1 if rng.random() < wp else 0
    stay = {1: params.p11, 0: params.p00}
    # expected length of one (1-run, 0-run) pair; capped for near-absorbing states
    mean_pair = sum(min(1.0 / max(1.0 - stay[s], 1e-12), n_bits) for s in (0, 1))
    states = []
    lengths = []
    total = 0
    state = first
    while total < n_bits:
        n_pairs = int(math.ceil((n_bits - total) / mean_pair * 1.1)) + 8
        chunk = []
        for s in (state, 1 - state):
            if stay[s] >= 1.0:
                chunk.append(np.full(n_pairs, n_bits, dtype=np.int64))
            else:
                chunk.append(rng.geometric(1.0 - stay[s], size=n_pairs))
        run_len = np.empty(2 * n_pairs, dtype=np.int64)
        run_len[0::2], run_len[1::2] = chunk
        run_state = np.empty(2 * n_pairs, dtype=np.int8)
        run_state[0::2], run_state[1::2] = state, 1 - state
        states.append(run_state)
        lengths.append(run_len)
        total += int(run_len.sum())
    states = np.concatenate(states)
    lengths = np.concatenate(lengths)
    ends = np.cumsum(lengths)
    last = int(np.searchsorted(ends, n_bits))
    states = states[: last + 1]
    lengths = lengths[: last + 1].copy()
    lengths[-1] -= int(ends[last]) - n_bits
    return states, lengths


def generate(params: MarkovParams, n_bits: int, seed: int) -> BitSequence:
    """Simulate ``n_bits`` bits; the first bit is drawn from the stationary law."""
    if n_bits < 1:
        raise ValueError(f"n_bits must be >= 1, got {n_bits}")
    states, lengths = _runs(params, n_bits, np.random.default_rng(seed))
    bits = np.repeat(states.astype(np.uint8), lengths)
    return BitSequence(bits, int(seed), params)


def count_ones(params: MarkovParams, n_bits: int, rng: np.random.Generator) -> int:
    """Number of ones in a fresh ``n_bits``-long sequence.

    Memoryless chains draw the count binomially, which has the same law but
    consumes a different random stream than :func:`generate`.
    """
    if n_bits < 1:
        raise ValueError(f"n_bits must be >= 1, got {n_bits}")
    if params.memoryless:
        return int(rng.binomial(n_bits, theory(params).wp))
    states, lengths = _runs(params, n_bits, rng)
    return int(lengths[states == 1].sum())


def _as_array(bits) -> np.ndarray:
    return np.asarray(getattr(bits, "bits", bits), dtype=float)


def empirical_correlation(bits, k: int = 1) -> float:
    """Lag-``k`` Pearson autocorrelation of a bit series."""
    x = _as_array(bits)
    if k < 1 or k >= x.size - 1:
        raise ValueError(f"lag {k} needs a series longer than {k + 1}, got {x.size}")
    a, b = x[:-k], x[k:]
    a = a - a.mean()
    b = b - b.mean()
    denom = math.sqrt(float(a @ a) * float(b @ b))
    if denom == 0:
        raise ValueError("autocorrelation undefined for a constant series")
    return float(a @ b) / denom


def product_correlation(bits, k: int = 1) -> float:
    """Mean product ``<s_n s_{n+k}>`` of the series mapped to spins ``s = 2b - 1``.

    For a stationary symmetric chain this also converges to ``(2p - 1)^k``.
    """
    s = 2.0 * _as_array(bits) - 1.0
    if k < 1 or k >= s.size:
        raise ValueError(f"lag {k} too long for a series of {s.size}")
    return float(np.mean(s[:-k] * s[k:]))


@dataclass(frozen=True)
class FunnelSimulation:
    """Proportion of ones for each (size, replication) pair."""

    params: MarkovParams
    sizes: np.ndarray
    proportions: np.ndarray  # shape (len(sizes), replications)
    seed: int

    @property
    def mean_proportions(self) -> np.ndarray:
        return self.proportions.mean(axis=1)

    def rows(self):
        """Yield ``(N, replication, proportion)`` in size-major order."""
        for i, n in enumerate(self.sizes):
            for r, value in enumerate(self.proportions[i]):
                yield int(n), r, float(value)


def funnel_simulation(
    params: MarkovParams, sizes: Sequence[int], replications: int = 30, seed: int = 0
) -> FunnelSimulation:
    """Simulate ``replications`` independent samples at each study size.

    Pair ``(i, r)`` uses task index ``i * replications + r``.
    """
    if replications < 1:
        raise ValueError("replications must be >= 1")
    sizes = np.asarray(sizes, dtype=np.int64)
    if sizes.size == 0 or np.any(sizes < 1):
        raise ValueError("sizes must be a non-empty list of positive integers")
    props = np.empty((sizes.size, replications))
    for i, n in enumerate(sizes):
        for r in range(replications):
            rng = derive_rng(seed, i * replications + r)
            props[i, r] = count_ones(params, int(n), rng) / n
    return FunnelSimulation(params, sizes, props, int(seed))


def batch_means(bits, batch_size: int) -> np.ndarray:
    """Means of consecutive non-overlapping batches; a trailing partial batch is dropped."""
    x = _as_array(bits)
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    if batch_size > x.size:
        raise ValueError(f"batch_size {batch_size} exceeds series length {x.size}")
    n = x.size // batch_size
    return x[: n * batch_size].reshape(n, batch_size).mean(axis=1)


def pack_bits(bits) -> bytes:
    """Pack 0/1 values 8 per byte, most significant bit first; the tail is zero padded."""
    return np.packbits(np.asarray(getattr(bits, "bits", bits), dtype=np.uint8)).tobytes()


def unpack_bits(data: bytes, n_bits: int) -> np.ndarray:
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8))[:n_bits]
