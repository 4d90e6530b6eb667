"""
Classical 3-way random walk on the triangular lattice.

Each step picks ``e1``, ``e2`` or ``e3`` with probability 1/3.  The walker is
back at the origin after ``t = 3m`` steps iff each direction was used ``m``
times, so ``p0(t) = t! / (m!)**3 / 3**t``: the central entry of Pascal's
pyramid divided by the number of paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional

import numpy as np

__all__ = [
    "STIRLING_CONSTANT",
    "LOG_GROWTH_SLOPE",
    "ClassicalRow",
    "classical_p0_exact",
    "iter_classical_p0",
    "classical_series",
    "stirling_p0",
    "classical_partial_sums",
    "classical_polya_partial",
    "log_growth_slope",
    "classical_monte_carlo_p0",
]

#: p0(t) ~ STIRLING_CONSTANT / t for t divisible by 3.
STIRLING_CONSTANT = 3.0 * math.sqrt(3.0) / (2.0 * math.pi)
#: Returns only happen every third step, so S_T ~ (STIRLING_CONSTANT / 3) ln T.
LOG_GROWTH_SLOPE = STIRLING_CONSTANT / 3.0


def classical_p0_exact(t: int) -> Fraction:
    """Exact return probability after ``t`` steps (0 unless ``3 | t``)."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if t % 3:
        return Fraction(0)
    m = t // 3
    # t! / (m!)^3 = C(t, m) * C(2m, m)
    return Fraction(math.comb(t, m) * math.comb(2 * m, m), 3**t)


def iter_classical_p0(t_max: int) -> Iterator[tuple[int, Fraction]]:
    """Yield ``(t, p0(t))`` for ``t = 0, 3, ..., <= t_max`` incrementally."""
    p = Fraction(1)
    t = 0
    while t <= t_max:
        yield t, p
        m = t // 3
        # p0(t+3) / p0(t) = (t+1)(t+2)(t+3) / (27 (m+1)^3)
        p *= Fraction((t + 1) * (t + 2) * (t + 3), 27 * (m + 1) ** 3)
        t += 3


def stirling_p0(t: float) -> float:
    """Large-``t`` approximation ``3 sqrt(3) / (2 pi t)``."""
    if t <= 0:
        raise ValueError("t must be positive")
    return STIRLING_CONSTANT / t


@dataclass(frozen=True)
class ClassicalRow:
    t: int
    p0_exact: Fraction
    p0_float: float
    stirling: float
    partial_sum: float
    polya_partial: float

    @property
    def relative_error(self) -> float:
        """``stirling / exact - 1`` (nan where the exact value is zero)."""
        if self.p0_float == 0.0:
            return math.nan
        return self.stirling / self.p0_float - 1.0


def classical_series(t_max: int) -> list[ClassicalRow]:
    """Rows for every multiple of 3 up to ``t_max`` with running sums."""
    rows = []
    s = Fraction(0)
    for t, p in iter_classical_p0(t_max):
        s += p
        s_float = float(s)
        rows.append(
            ClassicalRow(
                t=t,
                p0_exact=p,
                p0_float=float(p),
                stirling=stirling_p0(t) if t > 0 else math.inf,
                partial_sum=s_float,
                polya_partial=1.0 - 1.0 / s_float,
            )
        )
    return rows


def classical_partial_sums(t_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Times ``0, 3, ...`` and the partial sums ``S_T = sum_{t<=T} p0(t)``."""
    times, vals = zip(*((t, float(p)) for t, p in iter_classical_p0(t_max)))
    return np.array(times), np.cumsum(vals)


def classical_polya_partial(t_max: int) -> tuple[float, float]:
    """``(S_T, 1 - 1/S_T)`` with the sum starting at ``t = 0``."""
    if t_max < 3:
        raise ValueError("T must be at least 3")
    s = sum((p for _, p in iter_classical_p0(t_max)), Fraction(0))
    return float(s), float(1 - 1 / s)


def log_growth_slope(t_lo: int, t_hi: int) -> float:
    """``(S_{t_hi} - S_{t_lo}) / ln(t_hi / t_lo)``; tends to ``LOG_GROWTH_SLOPE``."""
    if not 3 <= t_lo < t_hi:
        raise ValueError("need 3 <= t_lo < t_hi")
    s_lo, _ = classical_polya_partial(t_lo)
    s_hi, _ = classical_polya_partial(t_hi)
    return (s_hi - s_lo) / math.log(t_hi / t_lo)


def classical_monte_carlo_p0(
    t: int,
    samples: int = 1_000_000,
    seed: Optional[int] = 0,
    shards: int = 8,
) -> tuple[float, float]:
    """
    Monte Carlo estimate of ``p0(t)`` and its standard error.

    Samples are split into ``shards`` independent streams spawned from
    ``numpy.random.SeedSequence(seed)``, so the result depends only on
    ``(t, samples, seed, shards)``.
    """
    if samples < 1000:
        raise ValueError("use at least 1000 samples")
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return 1.0, 0.0
    if t % 3:
        return 0.0, 0.0
    m = t // 3
    sizes = [samples // shards + (i < samples % shards) for i in range(shards)]
    hits = 0
    for child, size in zip(np.random.SeedSequence(seed).spawn(shards), sizes):
        rng = np.random.default_rng(child)
        chunk = max(1, 4_000_000 // t)
        done = 0
        while done < size:
            n = min(chunk, size - done)
            steps = rng.integers(0, 3, size=(n, t), dtype=np.int8)
            n1 = np.count_nonzero(steps == 0, axis=1)
            n2 = np.count_nonzero(steps == 1, axis=1)
            hits += int(np.count_nonzero((n1 == m) & (n2 == m)))
            done += n
    p = hits / samples
    return p, math.sqrt(p * (1.0 - p) / samples)
