"""
Three-state coin operators: construction, validation and classification.

The classification follows the zero-diagonal structure of the coin.  A
continuum of stationary points of an eigenphase (a saddle line) requires
exactly two vanishing diagonal entries; unitarity then forces the coin into
one of two sparsity patterns whose propagator depends on a single momentum
component, so the walk is quasi one-dimensional and recurrent.  Fewer zeros
give isolated stationary points only (transient walk); three zeros force a
generalized permutation, i.e. a mere relabeling of sites.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.stats import unitary_group

__all__ = [
    "CoinMatrix",
    "UnitarityError",
    "Verdict",
    "CoinClassification",
    "grover_coin",
    "recurrent_coin",
    "permutation_coin",
    "random_coin",
    "validate_unitary",
    "classify",
    "is_generalized_permutation",
    "zero_diagonal_count",
    "fast_decay_projection",
    "su3_normalize",
    "parse_complex",
    "parse_coin",
    "SYMMETRIC_STATE",
    "FAST_DECAY_STATE",
]

SYMMETRIC_STATE = np.ones(3, dtype=np.complex128) / np.sqrt(3.0)
FAST_DECAY_STATE = np.exp(2j * np.pi * np.arange(3) / 3) / np.sqrt(3.0)


class UnitarityError(ValueError):
    """Raised for a coin that is not unitary within tolerance."""

    def __init__(self, deviation: float, tol: float):
        self.deviation = deviation
        self.tol = tol
        super().__init__(
            f"coin is not unitary: max |C C^dagger - I| = {deviation:.3e} > {tol:.1e}"
        )


@dataclass(frozen=True, eq=False)
class CoinMatrix:
    """A validated 3x3 unitary coin.  Use :func:`validate_unitary` to build one."""

    entries: NDArray[np.complex128]
    label: str = "custom"

    def __post_init__(self) -> None:
        self.entries.setflags(write=False)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CoinMatrix):
            return NotImplemented
        return bool(np.array_equal(self.entries, other.entries))

    def __hash__(self) -> int:
        return hash(self.entries.tobytes())

    @property
    def diagonal(self) -> NDArray[np.complex128]:
        return np.diag(self.entries).copy()

    def to_strings(self) -> list[str]:
        """Row-major ``re+imj`` strings, the JSON wire format."""
        return [format_complex(z) for z in self.entries.ravel()]


class Verdict(str, enum.Enum):
    TRANSIENT = "Transient"
    QUASI_1D_RECURRENT = "QuasiOneDimensionalRecurrent"
    TRIVIAL_GENERALIZED_PERMUTATION = "TrivialGeneralizedPermutation"


@dataclass(frozen=True)
class CoinClassification:
    verdict: Verdict
    zero_diagonal_count: int
    propagation_direction: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "zero_diagonal_count": self.zero_diagonal_count,
            "propagation_direction": (
                None if self.propagation_direction is None
                else f"e{self.propagation_direction}"
            ),
        }


def validate_unitary(
    matrix: ArrayLike, tol: float = 1e-10, label: str = "custom"
) -> CoinMatrix:
    """
    Check that ``matrix`` is a 3x3 unitary and wrap it as a :class:`CoinMatrix`.

    Parameters
    ----------
    matrix : array_like, shape (3, 3)
    tol : float
        Maximum allowed entrywise deviation of ``C C^dagger`` from identity.

    Raises
    ------
    UnitarityError
        With the measured deviation, if the check fails.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    c = np.array(matrix, dtype=np.complex128)
    if c.shape != (3, 3):
        raise ValueError(f"coin must be 3x3, got shape {c.shape}")
    deviation = float(np.max(np.abs(c @ c.conj().T - np.eye(3))))
    if not deviation <= tol:
        raise UnitarityError(deviation, tol)
    return CoinMatrix(c, label)


def grover_coin() -> CoinMatrix:
    """Grover diffusion coin ``2/3 - delta_ij``."""
    g = np.full((3, 3), 2.0 / 3.0, dtype=np.complex128) - np.eye(3)
    return CoinMatrix(g, "grover")


def recurrent_coin() -> CoinMatrix:
    """The quasi one-dimensional recurrent coin with ``C11 = C33 = 0``."""
    s = np.sqrt(2.0)
    c = np.array([[0, 0, s], [1, 1, 0], [1, -1, 0]], dtype=np.complex128) / s
    return CoinMatrix(c, "crec")


def permutation_coin(sigma: Union[str, Sequence[int]]) -> CoinMatrix:
    """
    Permutation coin in one-line notation, ``C[i, sigma(i)] = 1``.

    ``permutation_coin("231")`` is ``[[0,1,0],[0,0,1],[1,0,0]]``.
    """
    perm = [int(ch) for ch in sigma] if isinstance(sigma, str) else list(sigma)
    if sorted(perm) != [1, 2, 3]:
        raise ValueError(f"not a permutation of 1,2,3: {sigma!r}")
    c = np.zeros((3, 3), dtype=np.complex128)
    for i, j in enumerate(perm):
        c[i, j - 1] = 1.0
    return CoinMatrix(c, "perm:" + "".join(map(str, perm)))


def all_permutation_coins() -> list[CoinMatrix]:
    return [permutation_coin(p) for p in itertools.permutations((1, 2, 3))]


def random_coin(seed: Union[int, np.random.Generator, None] = None) -> CoinMatrix:
    """Haar-random U(3) coin."""
    u = unitary_group.rvs(3, random_state=seed)
    label = f"random:{seed}" if isinstance(seed, int) else "random"
    return CoinMatrix(np.asarray(u, dtype=np.complex128), label)


def su3_normalize(coin: Union[CoinMatrix, ArrayLike]) -> NDArray[np.complex128]:
    """Remove the global phase so that ``det C = 1`` (principal cube root)."""
    c = np.asarray(coin, dtype=np.complex128)
    det = np.linalg.det(c)
    if abs(abs(det) - 1.0) > 1e-8:
        raise ValueError(f"|det C| = {abs(det)!r} differs from 1")
    return c * det ** (-1.0 / 3.0)


def zero_diagonal_count(coin: Union[CoinMatrix, ArrayLike], zero_tol: float = 1e-10) -> int:
    return int(np.sum(np.abs(np.diag(np.asarray(coin))) <= zero_tol))


def is_generalized_permutation(
    coin: Union[CoinMatrix, ArrayLike], zero_tol: float = 1e-10
) -> bool:
    """True iff each row and each column has exactly one entry above ``zero_tol``."""
    if zero_tol <= 0:
        raise ValueError("zero_tol must be positive")
    nonzero = np.abs(np.asarray(coin)) > zero_tol
    return bool(np.all(nonzero.sum(axis=0) == 1) and np.all(nonzero.sum(axis=1) == 1))


def classify(coin: Union[CoinMatrix, ArrayLike], zero_tol: float = 1e-10) -> CoinClassification:
    """
    Recurrence class of a coin from its diagonal.

    Generalized permutations are trivial regardless of their diagonal; for all
    other coins two zero diagonal entries mean quasi one-dimensional
    propagation along the direction of the surviving diagonal entry, and at
    most one zero means a transient walk.
    """
    if zero_tol <= 0:
        raise ValueError("zero_tol must be positive")
    c = np.asarray(coin)
    zeros = np.abs(np.diag(c)) <= zero_tol
    count = int(zeros.sum())
    if count == 3 or is_generalized_permutation(c, zero_tol):
        return CoinClassification(Verdict.TRIVIAL_GENERALIZED_PERMUTATION, count)
    if count == 2:
        direction = int(np.flatnonzero(~zeros)[0]) + 1
        return CoinClassification(Verdict.QUASI_1D_RECURRENT, count, direction)
    return CoinClassification(Verdict.TRANSIENT, count)


def fast_decay_projection(
    psi: ArrayLike, tol: float = 1e-12
) -> tuple[complex, NDArray[np.complex128]]:
    """
    Split ``psi`` into its component along ``(1,1,1)/sqrt(3)`` and the remainder.

    The remainder is the part of the initial coin state that avoids the
    degenerate stationary point of the Grover walk; ``psi`` lies in the
    fast-decay subspace (``a + b + c = 0``) when the component vanishes.
    """
    v = np.asarray(psi, dtype=np.complex128)
    if v.shape != (3,):
        raise ValueError("psi must be a 3-vector")
    if abs(np.linalg.norm(v) - 1.0) > tol:
        raise ValueError(f"psi must be normalized, got norm {np.linalg.norm(v)!r}")
    component = complex(np.vdot(SYMMETRIC_STATE, v))
    return component, v - component * SYMMETRIC_STATE


# -- wire format ------------------------------------------------------------

def format_complex(z: complex) -> str:
    z = complex(z)
    return f"{z.real!r}{z.imag:+.17g}j"


def parse_complex(text: str) -> complex:
    """Parse ``re``, ``re+imj`` or ``imj`` (Python ``complex`` syntax, ``i`` accepted)."""
    s = text.strip().replace(" ", "").replace("i", "j")
    if not s:
        raise ValueError("empty complex literal")
    return complex(s)


_PRESETS = {
    "grover": grover_coin,
    "crec": recurrent_coin,
}


def parse_coin(
    spec: Union[str, Sequence, ArrayLike],
    seed: Optional[int] = None,
    tol: float = 1e-10,
) -> CoinMatrix:
    """
    Build a coin from a preset name or 9 row-major entries.

    Accepted forms: ``"grover"``, ``"crec"``, ``"perm:<sigma>"`` (one-line
    notation, e.g. ``perm:231``), ``"identity"``, ``"random"`` (Haar, uses
    ``seed``), ``"random:<seed>"``, a comma-separated string of 9 complex
    entries, or a sequence of 9 entries (numbers or ``re+imj`` strings).
    """
    if isinstance(spec, str):
        name = spec.strip()
        lowered = name.lower()
        if lowered in _PRESETS:
            return _PRESETS[lowered]()
        if lowered == "identity":
            return CoinMatrix(np.eye(3, dtype=np.complex128), "identity")
        if lowered.startswith("perm:"):
            return permutation_coin(lowered[5:])
        if lowered == "random" or lowered.startswith("random:"):
            s = int(lowered.split(":", 1)[1]) if ":" in lowered else seed
            coin = random_coin(s)
            return CoinMatrix(coin.entries.copy(), f"random:{s}")
        entries = [parse_complex(p) for p in name.split(",")]
    else:
        entries = [parse_complex(x) if isinstance(x, str) else complex(x)
                   for x in np.asarray(spec, dtype=object).ravel()]
    if len(entries) != 9:
        raise ValueError(f"a coin needs 9 entries, got {len(entries)}")
    return validate_unitary(np.array(entries).reshape(3, 3), tol)
