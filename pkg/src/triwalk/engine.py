"""
Real-space time evolution of the walk.

One step applies the coin on every site and then the conditional shift, which
moves chirality ``i`` by ``e_i``.  The step kernel comes from the compiled
extension when it is importable and from NumPy otherwise; set
``TRIWALK_BACKEND=numpy`` to force the fallback.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import _npkernel
from .coin import CoinMatrix
from .lattice import (
    DISPLACEMENT_STEPS,
    ORIGIN,
    SiteCoord,
    WalkState,
    new_localized,
    probability_at,
)
from .recurrence import ReturnSeries

__all__ = [
    "BACKEND",
    "available_backends",
    "get_kernel",
    "WalkRun",
    "step",
    "evolve",
    "brute_force_amplitude",
    "BRUTE_FORCE_MAX_T",
]

BRUTE_FORCE_MAX_T = 9

KernelFn = Callable[[NDArray[np.complex128], NDArray[np.complex128]], NDArray[np.complex128]]

try:
    from . import _ckernel
except ImportError:  # extension not built
    _ckernel = None

_KERNELS: dict[str, KernelFn] = {"numpy": _npkernel.step_kernel}
if _ckernel is not None:
    _KERNELS["cython"] = _ckernel.step_kernel


def available_backends() -> list[str]:
    return list(_KERNELS)


def _select_backend() -> str:
    wanted = os.environ.get("TRIWALK_BACKEND", "auto").lower()
    if wanted == "auto":
        return "cython" if "cython" in _KERNELS else "numpy"
    if wanted not in _KERNELS:
        raise ImportError(
            f"TRIWALK_BACKEND={wanted!r} is not available (have {available_backends()})"
        )
    return wanted


BACKEND = _select_backend()


def get_kernel(backend: Optional[str] = None) -> KernelFn:
    return _KERNELS[backend or BACKEND]


@dataclass(frozen=True)
class WalkRun:
    """Coin, initial chirality at the origin and number of steps."""

    coin: CoinMatrix
    initial_chirality: NDArray[np.complex128]
    horizon: int

    def __post_init__(self) -> None:
        psi = np.asarray(self.initial_chirality, dtype=np.complex128)
        if psi.shape != (3,) or abs(np.linalg.norm(psi) - 1.0) > 1e-12:
            raise ValueError("initial chirality must be a normalized 3-vector")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        object.__setattr__(self, "initial_chirality", psi)


def step(state: WalkState, coin: CoinMatrix, backend: Optional[str] = None) -> WalkState:
    """Advance ``state`` by one step of ``S (I ⊗ C)``."""
    out = get_kernel(backend)(np.ascontiguousarray(state.amplitudes), coin.entries)
    return WalkState(state.time + 1, out)


def evolve(
    run: WalkRun, backend: Optional[str] = None
) -> tuple[WalkState, ReturnSeries]:
    """
    Evolve a localized walker for ``run.horizon`` steps.

    Returns the final state and the return-probability series ``p0(t)`` for
    ``t = 0..horizon``.  The series also records the total norm at every
    step; no renormalization is applied.
    """
    kernel = get_kernel(backend)
    state = new_localized(run.initial_chirality)
    c = run.coin.entries
    amp = np.ascontiguousarray(state.amplitudes)
    p0 = np.empty(run.horizon + 1)
    norms = np.empty(run.horizon + 1)
    p0[0] = probability_at(state, ORIGIN)
    norms[0] = state.norm()
    for t in range(1, run.horizon + 1):
        amp = kernel(amp, c)
        centre = amp[t, t]
        p0[t] = float(np.sum(centre.real**2 + centre.imag**2))
        norms[t] = float(np.sum(amp.real**2 + amp.imag**2))
    final = WalkState(run.horizon, amp)
    series = ReturnSeries(
        times=np.arange(run.horizon + 1),
        p0=p0,
        coin_label=run.coin.label,
        initial_chirality=run.initial_chirality.copy(),
        norms=norms,
    )
    return final, series


def brute_force_amplitude(
    coin: CoinMatrix | ArrayLike,
    chirality: ArrayLike,
    t: int,
    site: tuple[int, int],
) -> NDArray[np.complex128]:
    """
    Amplitude vector at ``site`` after ``t`` steps by explicit path summation.

    Every sequence of ``t`` chirality labels is a path; its amplitude is the
    product of coin entries along it applied to the initial chirality.  This
    is ``3**t`` work and independent of the grid kernels, so it serves as a
    test oracle for small ``t``.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if t > BRUTE_FORCE_MAX_T:
        raise ValueError(f"path enumeration refused for t={t} > {BRUTE_FORCE_MAX_T}")
    c = np.asarray(coin, dtype=np.complex128)
    psi = np.asarray(chirality, dtype=np.complex128)
    target = SiteCoord(*site)
    result = np.zeros(3, dtype=np.complex128)
    if t == 0:
        return psi.copy() if target == ORIGIN else result
    first = c @ psi
    for path in itertools.product(range(3), repeat=t):
        a = b = 0
        for i in path:
            da, db = DISPLACEMENT_STEPS[i]
            a += da
            b += db
        if (a, b) != target:
            continue
        amp = first[path[0]]
        for prev, nxt in zip(path, path[1:]):
            amp = amp * c[nxt, prev]
        result[path[-1]] += amp
    return result
