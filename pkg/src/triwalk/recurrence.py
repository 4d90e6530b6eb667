"""
Return-probability analysis: power-law fits, Pólya estimates, verdicts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.typing import NDArray
from scipy import stats

__all__ = [
    "ReturnSeries",
    "DecayFit",
    "PolyaEstimate",
    "VerdictReport",
    "InsufficientDataError",
    "fit_decay_exponent",
    "polya_estimate",
    "verdict",
    "DEFAULT_WINDOW",
    "MIN_FIT_POINTS",
]

DEFAULT_WINDOW = (30, 300)
MIN_FIT_POINTS = 8


class InsufficientDataError(ValueError):
    """Too few usable points in the fit window."""


@dataclass(frozen=True, eq=False)
class ReturnSeries:
    """
    Probability at the origin ``p0(t)`` for consecutive integer times.

    ``norms`` (optional) holds the total probability at each time and is used
    to monitor unitarity drift.
    """

    times: NDArray[np.int64]
    p0: NDArray[np.float64]
    coin_label: str = ""
    initial_chirality: Optional[NDArray[np.complex128]] = None
    norms: Optional[NDArray[np.float64]] = None

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=np.int64)
        p = np.asarray(self.p0, dtype=np.float64)
        if t.shape != p.shape or t.ndim != 1:
            raise ValueError("times and p0 must be 1-d arrays of equal length")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "p0", p)

    @classmethod
    def from_values(cls, p0, start: int = 0, **kw) -> "ReturnSeries":
        p = np.asarray(p0, dtype=np.float64)
        return cls(np.arange(start, start + len(p)), p, **kw)

    @property
    def horizon(self) -> int:
        return int(self.times[-1]) if len(self.times) else 0

    def at(self, t: int) -> float:
        idx = np.searchsorted(self.times, t)
        if idx >= len(self.times) or self.times[idx] != t:
            raise KeyError(t)
        return float(self.p0[idx])

    def max_off_sublattice(self) -> float:
        """Largest ``p0(t)`` at times not divisible by 3 (should be zero)."""
        mask = self.times % 3 != 0
        return float(self.p0[mask].max()) if mask.any() else 0.0

    def norm_drift(self) -> float:
        if self.norms is None:
            raise ValueError("series carries no norm record")
        return float(np.max(np.abs(self.norms - 1.0)))


@dataclass(frozen=True)
class DecayFit:
    """Least-squares line through ``(ln t, ln p0)``; ``exponent`` is the slope."""

    exponent: float
    intercept: float
    stderr: float
    r_squared: float
    window: tuple[int, int]
    n_points: int
    n_excluded: int = 0

    def to_dict(self) -> dict:
        return {
            "exponent": self.exponent,
            "intercept": self.intercept,
            "stderr": self.stderr,
            "r2": self.r_squared,
            "window": list(self.window),
            "n_points": self.n_points,
            "n_excluded": self.n_excluded,
        }


def fit_decay_exponent(
    series: ReturnSeries,
    t_min: int = DEFAULT_WINDOW[0],
    t_max: int = DEFAULT_WINDOW[1],
) -> DecayFit:
    """
    Fit ``p0(t) ~ A t**exponent`` over ``t_min <= t <= t_max``, ``t % 3 == 0``.

    Points with ``p0 <= 0`` are dropped and counted in ``n_excluded``.

    Raises
    ------
    InsufficientDataError
        If fewer than eight usable points remain.
    """
    t, p = series.times, series.p0
    window = (t >= max(t_min, 1)) & (t <= t_max) & (t % 3 == 0)
    usable = window & (p > 0)
    n_excluded = int(np.sum(window & ~(p > 0)))
    n = int(usable.sum())
    if n < MIN_FIT_POINTS:
        raise InsufficientDataError(
            f"{n} usable points in window [{t_min}, {t_max}] "
            f"({n_excluded} non-positive excluded); need {MIN_FIT_POINTS}"
        )
    res = stats.linregress(np.log(t[usable]), np.log(p[usable]))
    return DecayFit(
        exponent=float(res.slope),
        intercept=float(res.intercept),
        stderr=float(res.stderr),
        r_squared=float(res.rvalue**2),
        window=(int(t_min), int(t_max)),
        n_points=n,
        n_excluded=n_excluded,
    )


@dataclass(frozen=True)
class PolyaEstimate:
    """
    Partial product ``1 - prod_{1<=t<=horizon} (1 - p0(t))``.

    ``partials`` holds the running value for every ``t`` in the series.
    """

    partial_value: float
    horizon: int
    verdict_hint: str
    partials: NDArray[np.float64] = field(repr=False, compare=False)


def polya_estimate(
    series: ReturnSeries,
    fit: Optional[DecayFit] = None,
    t_min: int = DEFAULT_WINDOW[0],
    t_max: int = DEFAULT_WINDOW[1],
    margin: float = 0.1,
) -> PolyaEstimate:
    """
    Quantum Pólya number truncated at the series horizon.

    The hint is ``"recurrent-consistent"`` when the decay exponent is at least
    ``-1 - margin`` (so ``sum p0`` diverges), ``"transient-consistent"`` when it
    is below, and ``"undetermined"`` when no fit is possible.  A fit is
    computed over ``[t_min, min(t_max, horizon)]`` unless one is given.
    """
    mask = series.times >= 1
    survival = np.cumprod(np.clip(1.0 - series.p0[mask], 0.0, 1.0))
    partials = 1.0 - survival
    # floating round-off must not break monotonicity
    partials = np.maximum.accumulate(partials) if len(partials) else partials
    value = float(partials[-1]) if len(partials) else 0.0
    if fit is None:
        try:
            fit = fit_decay_exponent(series, t_min, min(t_max, series.horizon))
        except InsufficientDataError:
            fit = None
    if fit is None:
        hint = "undetermined"
    elif fit.exponent >= -1.0 - margin:
        hint = "recurrent-consistent"
    else:
        hint = "transient-consistent"
    return PolyaEstimate(value, series.horizon, hint, partials)


@dataclass(frozen=True)
class VerdictReport:
    consistent: bool
    classification: str
    expected: str
    observed: str

    def to_dict(self) -> dict:
        return {
            "consistent": self.consistent,
            "classification": self.classification,
            "expected": self.expected,
            "observed": self.observed,
        }


def verdict(
    classification,
    fit: Optional[DecayFit] = None,
    series: Optional[ReturnSeries] = None,
    margin: float = 0.1,
    tol: float = 1e-10,
) -> VerdictReport:
    """
    Cross-check an analytic coin classification against a measured series.

    Transient coins must decay faster than ``t**(-1 - margin)``; quasi 1-D
    coins must decay as ``t**-1`` within ``margin``.  Trivial coins need the
    series itself: with an all-zero diagonal the state relocalizes, so
    ``p0(3k) = 1``; otherwise the walker drifts away ballistically and
    ``p0(t) = 0`` for ``t >= 1``.
    """
    from .coin import Verdict

    name = classification.verdict.value
    if classification.verdict is Verdict.TRIVIAL_GENERALIZED_PERMUTATION:
        if series is None:
            raise ValueError("a trivial coin is checked against its p0 series")
        later = series.times >= 1
        on = later & (series.times % 3 == 0)
        if classification.zero_diagonal_count == 3:
            expected = "p0(3k) = 1"
            ok = bool(np.all(np.abs(series.p0[on] - 1.0) <= tol))
            observed = f"min p0(3k) = {series.p0[on].min() if on.any() else float('nan'):.17g}"
        else:
            expected = "p0(t) = 0 for t >= 1"
            ok = bool(np.all(series.p0[later] <= tol))
            observed = f"max p0(t>=1) = {series.p0[later].max() if later.any() else 0.0:.17g}"
        return VerdictReport(ok, name, expected, observed)

    if fit is None:
        raise ValueError("a decay fit is required for non-trivial coins")
    observed = f"exponent = {fit.exponent:.6f} ± {fit.stderr:.2e}"
    if classification.verdict is Verdict.TRANSIENT:
        expected = f"exponent < {-1.0 - margin:g}"
        ok = fit.exponent < -1.0 - margin
    else:
        expected = f"exponent = -1 ± {margin:g}"
        ok = abs(fit.exponent + 1.0) <= margin
    return VerdictReport(bool(ok), name, expected, observed)
