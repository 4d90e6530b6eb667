"""
Oriented triangular lattice and the walker's amplitude field.

Sites are stored as integer coefficients ``(a, b)`` in the basis ``(e1, e2)``;
``e3 = -e1 - e2`` so every reachable point has integer coordinates.  A
:class:`WalkState` at time ``t`` keeps a dense ``(2t+1, 2t+1, 3)`` complex
array covering ``-t <= a, b <= t``; the array index of site ``(a, b)`` is
``(a + t, b + t)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

__all__ = [
    "SQRT3",
    "DISPLACEMENTS",
    "DISPLACEMENT_STEPS",
    "Displacement",
    "SiteCoord",
    "WalkState",
    "site_to_physical",
    "new_localized",
    "probability_at",
    "full_distribution",
    "rotate_site",
]

SQRT3 = np.sqrt(3.0)

#: Physical displacement vectors e1, e2, e3 (rows).
DISPLACEMENTS: NDArray[np.float64] = np.array(
    [[-0.5, SQRT3 / 2.0], [1.0, 0.0], [-0.5, -SQRT3 / 2.0]]
)

#: Change of lattice coordinates (da, db) produced by each displacement.
DISPLACEMENT_STEPS: tuple[tuple[int, int], ...] = ((1, 0), (0, 1), (-1, -1))


class Displacement(NamedTuple):
    """One of the three step directions; ``index`` is 1-based."""

    index: int
    physical: tuple[float, float]

    @classmethod
    def of(cls, index: int) -> "Displacement":
        if index not in (1, 2, 3):
            raise ValueError(f"displacement index must be 1, 2 or 3, got {index}")
        x, y = DISPLACEMENTS[index - 1]
        return cls(index, (float(x), float(y)))


class SiteCoord(NamedTuple):
    """Lattice site ``a*e1 + b*e2``."""

    a: int
    b: int

    def step(self, index: int) -> "SiteCoord":
        da, db = DISPLACEMENT_STEPS[index - 1]
        return SiteCoord(self.a + da, self.b + db)


ORIGIN = SiteCoord(0, 0)


def site_to_physical(site: tuple[int, int]) -> tuple[float, float]:
    """Cartesian position of a lattice site in units of the lattice constant."""
    a, b = site
    x = a * DISPLACEMENTS[0, 0] + b * DISPLACEMENTS[1, 0]
    y = a * DISPLACEMENTS[0, 1] + b * DISPLACEMENTS[1, 1]
    return float(x), float(y)


def rotate_site(site: tuple[int, int]) -> SiteCoord:
    """Rotate a site by +2π/3 about the origin (maps e1→e3, e2→e1, e3→e2)."""
    a, b = site
    # a*e1 + b*e2 -> a*e3 + b*e1 = (b - a)*e1 - a*e2
    return SiteCoord(b - a, -a)


@dataclass(frozen=True)
class WalkState:
    """
    Amplitude field of the walker at a fixed time.

    Attributes
    ----------
    time : int
        Number of steps taken.
    amplitudes : ndarray of complex128, shape (2*time+1, 2*time+1, 3)
        ``amplitudes[a + time, b + time, i]`` is the amplitude of chirality
        ``i + 1`` at site ``(a, b)``.  The array is read-only.
    """

    time: int
    amplitudes: NDArray[np.complex128]

    def __post_init__(self) -> None:
        n = 2 * self.time + 1
        if self.amplitudes.shape != (n, n, 3):
            raise ValueError(
                f"amplitude grid for t={self.time} must have shape {(n, n, 3)}, "
                f"got {self.amplitudes.shape}"
            )
        self.amplitudes.setflags(write=False)

    @property
    def radius(self) -> int:
        return self.time

    def amplitude(self, site: tuple[int, int]) -> NDArray[np.complex128]:
        """Chirality vector at ``site`` (zeros outside the stored window)."""
        a, b = site
        t = self.time
        if abs(a) > t or abs(b) > t:
            return np.zeros(3, dtype=np.complex128)
        return self.amplitudes[a + t, b + t].copy()

    def probabilities(self) -> NDArray[np.float64]:
        """Site probabilities on the stored window, shape (2t+1, 2t+1)."""
        amp = self.amplitudes
        return np.sum(amp.real**2 + amp.imag**2, axis=-1)

    def norm(self) -> float:
        return float(np.sum(self.probabilities()))

    def coordinates(self) -> tuple[NDArray[np.int64], NDArray[np.int64]]:
        """Lattice coordinate grids ``(A, B)`` matching :meth:`probabilities`."""
        r = np.arange(-self.time, self.time + 1)
        return np.meshgrid(r, r, indexing="ij")


def new_localized(chirality: ArrayLike, tol: float = 1e-12) -> WalkState:
    """
    Walker at the origin at ``t = 0`` with the given coin state.

    Raises
    ------
    ValueError
        If ``chirality`` is not a normalized 3-vector.
    """
    psi = np.asarray(chirality, dtype=np.complex128)
    if psi.shape != (3,):
        raise ValueError(f"chirality must be a 3-vector, got shape {psi.shape}")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > tol:
        raise ValueError(f"chirality must be normalized, got norm {norm!r}")
    amp = np.zeros((1, 1, 3), dtype=np.complex128)
    amp[0, 0] = psi
    return WalkState(0, amp)


def probability_at(state: WalkState, site: tuple[int, int]) -> float:
    """Probability ``||psi(site, t)||^2``; zero outside the stored window."""
    amp = state.amplitude(site)
    return float(np.sum(amp.real**2 + amp.imag**2))


def full_distribution(
    state: WalkState, threshold: float = 0.0
) -> list[tuple[SiteCoord, float]]:
    """All sites with probability strictly above ``threshold``, row-major in (a, b)."""
    prob = state.probabilities()
    t = state.time
    idx_a, idx_b = np.nonzero(prob > threshold)
    return [
        (SiteCoord(int(i) - t, int(j) - t), float(prob[i, j]))
        for i, j in zip(idx_a, idx_b)
    ]
