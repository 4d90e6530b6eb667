"""
Momentum-space analysis of the walk.

In momentum space one step is the 3x3 unitary ``U(k) = D(k) C`` with
``D(k) = diag(exp(-i k.e1), exp(-i k.e2), exp(-i k.e3))``.  Its eigenphases
``omega_j(k)`` are the dispersion sheets.  Stationary points of the sheets
control the decay of the amplitude at the origin:

==========================  ==================  ===========
structure                   amplitude           p0(t)
==========================  ==================  ===========
flat sheet                  does not decay      const
saddle line (1-D set)       t**-1/2             t**-1
point, Hessian rank 0       t**-2/3             t**-4/3
point, Hessian rank 1       t**-5/6             t**-5/3
point, Hessian rank 2       t**-1               t**-2
==========================  ==================  ===========
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import ndimage

from .coin import CoinMatrix, su3_normalize
from .lattice import DISPLACEMENTS, SQRT3

__all__ = [
    "MomentumPropagator",
    "DispersionSurface",
    "DecayClass",
    "StationaryPoint",
    "StationaryComponent",
    "StationaryPointReport",
    "k_dot_e",
    "propagator_matrix",
    "momentum_propagator",
    "group_velocity",
    "delta_minors",
    "char_poly_coefficients",
    "char_poly_residuals",
    "grover_dispersion_residual",
    "crec_dispersion_residual",
    "dispersion_consistency",
    "build_dispersion_surface",
    "find_stationary_points",
    "saddle_line_condition_residual",
    "brillouin_grid",
]

DEGENERACY_TOL = 1e-7
_PERMS = np.array(list(itertools.permutations(range(3))))


def k_dot_e(k1: ArrayLike, k2: ArrayLike) -> NDArray[np.float64]:
    """``k . e_i`` for ``i = 1, 2, 3`` stacked on a trailing axis."""
    k1 = np.asarray(k1, dtype=float)
    k2 = np.asarray(k2, dtype=float)
    return np.stack(
        [-k1 / 2 + SQRT3 * k2 / 2, k1, -k1 / 2 - SQRT3 * k2 / 2], axis=-1
    )


def propagator_matrix(
    coin: Union[CoinMatrix, ArrayLike], k1: ArrayLike, k2: ArrayLike
) -> NDArray[np.complex128]:
    """``D(k) C`` broadcast over the shapes of ``k1`` and ``k2``."""
    c = np.asarray(coin, dtype=np.complex128)
    phases = np.exp(-1j * k_dot_e(k1, k2))
    return phases[..., :, None] * c


def _wrap(phase: NDArray[np.float64]) -> NDArray[np.float64]:
    """Map angles into (-pi, pi]."""
    out = np.angle(np.exp(1j * phase))
    return np.where(out <= -np.pi, out + 2 * np.pi, out)


def _eig_unitary(u: NDArray[np.complex128]):
    """
    Eigenphases in (-pi, pi], ascending, and orthonormal eigenvectors.

    Returns ``(phases[..., 3], vectors[..., 3(branch), 3(component)],
    degenerate[..., 3])``.  Within a degenerate eigenspace the vectors are
    re-orthonormalized, since ``eig`` returns an arbitrary, possibly skewed
    basis there.
    """
    batch = u.shape[:-2]
    lam, vec = np.linalg.eig(u.reshape(-1, 3, 3))
    phases = _wrap(np.angle(lam))
    order = np.argsort(phases, axis=-1)
    phases = np.take_along_axis(phases, order, axis=-1)
    lam = np.take_along_axis(lam, order, axis=-1)
    vec = np.take_along_axis(vec, order[..., None, :], axis=-1)
    gap = np.abs(lam[..., :, None] - lam[..., None, :]) + 10 * np.eye(3)
    close = gap < DEGENERACY_TOL
    degenerate = close.any(axis=-1)
    if degenerate.any():
        for node in np.flatnonzero(degenerate.any(axis=-1)):
            v = vec[node]
            groups = _groups(close[node])
            for g in groups:
                if len(g) > 1:
                    q, _ = np.linalg.qr(v[:, g])
                    v[:, g] = q
            vec[node] = v
    vectors = np.swapaxes(vec, -1, -2)
    vectors = vectors / np.linalg.norm(vectors, axis=-1, keepdims=True)
    return (
        phases.reshape(batch + (3,)),
        vectors.reshape(batch + (3, 3)),
        degenerate.reshape(batch + (3,)),
    )


def _groups(close: NDArray[np.bool_]) -> list[list[int]]:
    groups: list[list[int]] = []
    seen: set[int] = set()
    for i in range(3):
        if i in seen:
            continue
        g = [i] + [j for j in range(i + 1, 3) if close[i, j]]
        seen.update(g)
        groups.append(g)
    return groups


@dataclass(frozen=True)
class MomentumPropagator:
    """
    ``U(k)`` with its eigen-decomposition.

    ``eigenvectors[j]`` belongs to ``eigenphases[j]``; phases are ascending.
    ``degenerate`` is set when two eigenvalues coincide within 1e-7, in which
    case the vectors of that eigenspace are an arbitrary orthonormal basis.
    """

    k: tuple[float, float]
    matrix: NDArray[np.complex128]
    eigenphases: NDArray[np.float64]
    eigenvectors: NDArray[np.complex128]
    degenerate: bool


def momentum_propagator(
    coin: Union[CoinMatrix, ArrayLike], k: tuple[float, float]
) -> MomentumPropagator:
    k1, k2 = float(k[0]), float(k[1])
    u = propagator_matrix(coin, k1, k2)
    phases, vectors, degenerate = _eig_unitary(u)
    return MomentumPropagator((k1, k2), u, phases, vectors, bool(degenerate.any()))


def group_velocity(prop: MomentumPropagator) -> NDArray[np.float64]:
    """
    Exact gradients ``grad omega_j`` (rows) from first-order perturbation.

    ``d omega_j = -sum_i |v_{j,i}|^2 (dk . e_i)``; meaningless at degenerate
    points.
    """
    weights = np.abs(prop.eigenvectors) ** 2
    return -weights @ DISPLACEMENTS


def delta_minors(
    coin: Union[CoinMatrix, ArrayLike], k1: ArrayLike, k2: ArrayLike
) -> NDArray[np.complex128]:
    """
    Principal 2x2 minors of ``U(k)``: ``(Delta12, Delta13, Delta23)``.

    ``Delta_ij = exp(-i k.(e_i + e_j)) (C_ii C_jj - C_ij C_ji)``.  Their sum is
    the linear coefficient of the monic characteristic polynomial.
    """
    c = np.asarray(coin, dtype=np.complex128)
    kd = k_dot_e(k1, k2)
    out = []
    for i, j in ((0, 1), (0, 2), (1, 2)):
        minor = c[i, i] * c[j, j] - c[i, j] * c[j, i]
        out.append(np.exp(-1j * (kd[..., i] + kd[..., j])) * minor)
    return np.stack(out, axis=-1)


def char_poly_coefficients(
    coin: Union[CoinMatrix, ArrayLike], k: tuple[float, float]
) -> tuple[complex, complex, complex]:
    """
    Coefficients ``(c2, c1, c0)`` of ``det(lambda I - U(k)) = lambda^3 + c2 lambda^2 + c1 lambda + c0``.

    The coin is first rescaled to unit determinant, so ``c2 = -Tr U``,
    ``c1 = Delta12 + Delta13 + Delta23`` and ``c0 = -det U = -1``.
    """
    c = su3_normalize(coin)
    u = propagator_matrix(c, k[0], k[1])
    c2 = -np.trace(u)
    c1 = np.sum(delta_minors(c, k[0], k[1]))
    c0 = -np.linalg.det(u)
    return complex(c2), complex(c1), complex(c0)


def char_poly_residuals(
    coin: Union[CoinMatrix, ArrayLike], k1: ArrayLike, k2: ArrayLike
) -> dict[str, NDArray[np.float64]]:
    """
    Residuals of the eigenvalue/coefficient identities for the SU(3)-normalized coin.

    ``det``: ``|exp(i sum omega) - 1|``; ``lambda1``:
    ``|sum_{i<j} exp(i(omega_i + omega_j)) - sum Delta|``; ``trace``:
    ``|sum exp(i omega) - Tr U|``.  Eigenphases come from numerical
    diagonalization; the right-hand sides from the coin entries directly.
    """
    c = su3_normalize(coin)
    u = propagator_matrix(c, k1, k2)
    phases, _, _ = _eig_unitary(u)
    lam = np.exp(1j * phases)
    pair = lam[..., 0] * lam[..., 1] + lam[..., 0] * lam[..., 2] + lam[..., 1] * lam[..., 2]
    return {
        "det": np.abs(np.exp(1j * phases.sum(axis=-1)) - 1.0),
        "lambda1": np.abs(pair - delta_minors(c, k1, k2).sum(axis=-1)),
        "trace": np.abs(lam.sum(axis=-1) - np.trace(u, axis1=-2, axis2=-1)),
    }


def grover_dispersion_residual(k: tuple[float, float], omega: ArrayLike) -> NDArray[np.float64]:
    """Closed-form Grover dispersion function; zero at the eigenphases of ``U(k)``."""
    k1, k2 = k
    w = np.asarray(omega, dtype=float)
    return (
        np.sin(k1 - w / 2)
        - 2 * np.cos(SQRT3 * k2 / 2) * np.sin((k1 + w) / 2)
        - 3 * np.sin(3 * w / 2)
    )


def crec_dispersion_residual(k: tuple[float, float], omega: ArrayLike) -> NDArray[np.float64]:
    """Closed-form dispersion function of the recurrent coin; ``k2`` drops out."""
    k1, _ = k
    w = np.asarray(omega, dtype=float)
    return np.cos(k1 - w / 2) - np.sqrt(2.0) * np.cos(3 * w / 2)


def dispersion_consistency(
    residual_fn, coin: Union[CoinMatrix, ArrayLike], n: int = 64, tol: float = 1e-6
) -> float:
    """Fraction of grid eigenphases at which ``|residual_fn(k, omega)| < tol``."""
    k1, k2 = np.meshgrid(*brillouin_grid(n), indexing="ij")
    phases, _, _ = _eig_unitary(propagator_matrix(coin, k1, k2))
    res = np.abs(residual_fn((k1[..., None], k2[..., None]), phases))
    return float(np.mean(res < tol))


def saddle_line_condition_residual(
    coin: Union[CoinMatrix, ArrayLike], k: tuple[float, float], phi: float
) -> NDArray[np.float64]:
    """``sum_i e_i |C_ii| cos(-k.e_i + arg C_ii + phi)``, a 2-vector."""
    d = np.diag(np.asarray(coin, dtype=np.complex128))
    kd = k_dot_e(k[0], k[1])
    weights = np.abs(d) * np.cos(-kd + np.angle(d) + phi)
    return weights @ DISPLACEMENTS


# -- dispersion surfaces -----------------------------------------------------

def brillouin_grid(n: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """``n`` equispaced momenta in (-pi, pi] per axis; contains 0 for even ``n``."""
    h = 2 * np.pi / n
    k = -np.pi + h * np.arange(1, n + 1)
    return k, k.copy()


@dataclass(frozen=True, eq=False)
class DispersionSurface:
    """
    Eigenphase sheets of ``U(k)`` on an ``n x n`` grid over (-pi, pi]^2.

    Arrays are indexed ``[i1, i2, j]`` with ``k = (k1[i1], k2[i2])`` and sheet
    ``j``.  Sheets are followed across the grid by eigenvector overlap;
    ``flagged`` marks nodes where the best overlap was not above 0.5.
    Gradients and Hessians are central differences with step ``2 pi / n``,
    taking neighbouring phases from the eigenvector that overlaps most with
    the node's own, so they are insensitive to sheet labels.
    """

    coin: NDArray[np.complex128]
    n: int
    k1: NDArray[np.float64]
    k2: NDArray[np.float64]
    phases: NDArray[np.float64]
    vectors: NDArray[np.complex128] = field(repr=False)
    gradients: NDArray[np.float64] = field(repr=False)
    hessians: NDArray[np.float64] = field(repr=False)
    flagged: NDArray[np.bool_] = field(repr=False)
    degenerate: NDArray[np.bool_] = field(repr=False)
    ambiguous: NDArray[np.bool_] = field(repr=False)
    label: str = ""

    @property
    def step(self) -> float:
        return 2 * np.pi / self.n

    @property
    def gradient_norms(self) -> NDArray[np.float64]:
        return np.linalg.norm(self.gradients, axis=-1)

    def flagged_nodes(self) -> list[tuple[float, float]]:
        i1, i2 = np.nonzero(self.flagged)
        return [(float(self.k1[a]), float(self.k2[b])) for a, b in zip(i1, i2)]


def _best_perm(prev: NDArray, new: NDArray) -> tuple[NDArray, NDArray]:
    """Permutation of ``new`` sheets best matching ``prev`` and its weakest overlap."""
    overlap = np.abs(np.einsum("...ac,...bc->...ab", prev.conj(), new))
    scores = np.stack(
        [overlap[..., [0, 1, 2], p].sum(axis=-1) for p in _PERMS], axis=-1
    )
    best = np.argmax(scores, axis=-1)
    perm = _PERMS[best]
    weakest = np.min(np.take_along_axis(overlap, perm[..., :, None], axis=-1)[..., 0], axis=-1)
    return perm, weakest


def build_dispersion_surface(
    coin: Union[CoinMatrix, ArrayLike], n: int = 128
) -> DispersionSurface:
    """
    Diagonalize ``U(k)`` on the grid, track sheets and differentiate them.

    Raises
    ------
    ValueError
        If ``n < 16``.
    """
    if n < 16:
        raise ValueError("grid size must be at least 16")
    c = np.asarray(coin, dtype=np.complex128)
    h = 2 * np.pi / n
    k1, k2 = brillouin_grid(n)
    # one-node halo so every grid node has a full 3x3 stencil
    kh = -np.pi + h * np.arange(0, n + 2)
    K1, K2 = np.meshgrid(kh, kh, indexing="ij")
    phases, vectors, degenerate = _eig_unitary(propagator_matrix(c, K1, K2))

    # sheet tracking on the interior: first along k2 at i1 = 0, then along k1
    ph = phases[1:-1, 1:-1].copy()
    vec = vectors[1:-1, 1:-1].copy()
    deg = degenerate[1:-1, 1:-1].copy()
    flagged = np.zeros((n, n), dtype=bool)
    for i2 in range(1, n):
        perm, weakest = _best_perm(vec[0, i2 - 1], vec[0, i2])
        _apply_perm(ph, vec, deg, (0, i2), perm)
        flagged[0, i2] = weakest <= 0.5
    for i1 in range(1, n):
        perm, weakest = _best_perm(vec[i1 - 1], vec[i1])
        rows = np.arange(n)
        ph[i1] = np.take_along_axis(ph[i1], perm, axis=-1)
        deg[i1] = np.take_along_axis(deg[i1], perm, axis=-1)
        vec[i1] = vec[i1][rows[:, None], perm]
        flagged[i1] = weakest <= 0.5

    # local stencil: phase differences to the best-overlapping neighbour sheet
    dphi = {}
    ambiguous = np.zeros((n, n, 3), dtype=bool)
    for o1, o2 in itertools.product((-1, 0, 1), repeat=2):
        if o1 == 0 and o2 == 0:
            continue
        nb_vec = vectors[1 + o1:n + 1 + o1, 1 + o2:n + 1 + o2]
        nb_ph = phases[1 + o1:n + 1 + o1, 1 + o2:n + 1 + o2]
        overlap = np.abs(np.einsum("...ac,...bc->...ab", vec.conj(), nb_vec))
        pick = np.argmax(overlap, axis=-1)
        best = np.take_along_axis(overlap, pick[..., None], axis=-1)[..., 0]
        ambiguous |= best <= 0.5
        nb = np.take_along_axis(nb_ph, pick, axis=-1)
        dphi[o1, o2] = _wrap(nb - ph)
    grad = np.stack(
        [(dphi[1, 0] - dphi[-1, 0]) / (2 * h), (dphi[0, 1] - dphi[0, -1]) / (2 * h)],
        axis=-1,
    )
    h11 = (dphi[1, 0] + dphi[-1, 0]) / h**2
    h22 = (dphi[0, 1] + dphi[0, -1]) / h**2
    h12 = (dphi[1, 1] - dphi[1, -1] - dphi[-1, 1] + dphi[-1, -1]) / (4 * h**2)
    hess = np.stack([np.stack([h11, h12], -1), np.stack([h12, h22], -1)], -2)
    label = coin.label if isinstance(coin, CoinMatrix) else ""
    return DispersionSurface(
        coin=c, n=n, k1=k1, k2=k2, phases=ph, vectors=vec, gradients=grad,
        hessians=hess, flagged=flagged, degenerate=deg, ambiguous=ambiguous,
        label=label,
    )


def _apply_perm(ph, vec, deg, node, perm) -> None:
    ph[node] = ph[node][perm]
    deg[node] = deg[node][perm]
    vec[node] = vec[node][perm]


# -- stationary points -------------------------------------------------------

class DecayClass(str, enum.Enum):
    FLAT_BRANCH = "FlatBranch"
    SADDLE_LINE = "SaddleLine"
    RANK_ZERO_HESSIAN = "RankZeroHessian"
    RANK_ONE_HESSIAN = "RankOneHessian"
    ISOLATED_NONDEGENERATE = "IsolatedNondegenerate"
    NO_STATIONARY_POINT = "NoStationaryPoint"

    @property
    def p0_exponent(self) -> Optional[float]:
        """Exponent of ``p0(t)``; ``None`` when no stationary point contributes."""
        return _EXPONENTS[self]


_EXPONENTS = {
    DecayClass.FLAT_BRANCH: 0.0,
    DecayClass.SADDLE_LINE: -1.0,
    DecayClass.RANK_ZERO_HESSIAN: -4.0 / 3.0,
    DecayClass.RANK_ONE_HESSIAN: -5.0 / 3.0,
    DecayClass.ISOLATED_NONDEGENERATE: -2.0,
    DecayClass.NO_STATIONARY_POINT: None,
}
# slowest decay first
_ORDER = list(_EXPONENTS)


@dataclass(frozen=True)
class StationaryPoint:
    k: tuple[float, float]
    branch: int
    gradient_norm: float
    hessian_rank: int
    hessian_singular_values: tuple[float, float]

    def to_dict(self) -> dict:
        return {
            "k": list(self.k),
            "branch": self.branch,
            "gradient_norm": self.gradient_norm,
            "hessian_rank": self.hessian_rank,
            "hessian_singular_values": list(self.hessian_singular_values),
        }


@dataclass(frozen=True)
class StationaryComponent:
    """A connected set of stationary nodes on one sheet."""

    branch: int
    size: int
    extent: tuple[int, int]
    kind: DecayClass
    representative: StationaryPoint

    def to_dict(self) -> dict:
        return {
            "branch": self.branch,
            "size": self.size,
            "extent": list(self.extent),
            "kind": self.kind.value,
            "representative": self.representative.to_dict(),
        }


@dataclass(frozen=True)
class StationaryPointReport:
    points: list[StationaryPoint]
    components: list[StationaryComponent]
    decay_class: DecayClass
    grad_tol: float
    rank_tol: float

    def contains(self, k: tuple[float, float], rank: Optional[int] = None, tol: float = 1e-9) -> bool:
        return any(
            abs(p.k[0] - k[0]) <= tol and abs(p.k[1] - k[1]) <= tol
            and (rank is None or p.hessian_rank == rank)
            for p in self.points
        )

    def to_dict(self) -> dict:
        exponent = self.decay_class.p0_exponent
        return {
            "decay_class": self.decay_class.value,
            "p0_exponent": exponent,
            "grad_tol": self.grad_tol,
            "rank_tol": self.rank_tol,
            "points": [p.to_dict() for p in self.points],
            "components": [c.to_dict() for c in self.components],
        }


def find_stationary_points(
    surface: DispersionSurface,
    grad_tol: float = 1e-3,
    rank_rel_tol: float = 1e-2,
    flat_fraction: float = 0.9,
) -> StationaryPointReport:
    """
    Locate stationary nodes of every sheet and classify their structure.

    A node is stationary when ``|grad omega| < grad_tol`` or when the Newton
    step ``-H^+ grad omega`` towards the zero of the gradient stays inside the
    node's grid cell (and the gradient outside the range of ``H`` is below
    ``grad_tol``).  Degenerate or ambiguously matched nodes are skipped.
    Stationary nodes are grouped into 8-connected components per sheet: a
    component covering ``flat_fraction`` of the grid is a flat sheet, one
    spanning at least half the grid along an axis is a saddle line, anything
    else is a point classified by the Hessian rank at its smallest-gradient
    node.  Singular values below ``rank_rel_tol`` times the median Hessian
    scale of the surface count as zero.
    """
    if grad_tol <= 0:
        raise ValueError("grad_tol must be positive")
    n, h = surface.n, surface.step
    g = surface.gradients
    hess = surface.hessians
    gnorm = np.linalg.norm(g, axis=-1)
    valid = ~surface.degenerate & ~surface.ambiguous
    sv = np.linalg.svd(hess, compute_uv=False)
    scale = float(np.median(sv[..., 0][valid])) if valid.any() else 1.0
    rank_tol = rank_rel_tol * scale

    pinv = np.linalg.pinv(hess, rcond=rank_rel_tol)
    delta = -np.einsum("...ab,...b->...a", pinv, g)
    leftover = np.linalg.norm(g + np.einsum("...ab,...b->...a", hess, delta), axis=-1)
    in_cell = (np.max(np.abs(delta), axis=-1) <= h / 2) & (leftover < grad_tol)
    stationary = valid & ((gnorm < grad_tol) | in_cell)

    points: list[StationaryPoint] = []
    components: list[StationaryComponent] = []
    structure = np.ones((3, 3), dtype=bool)
    for j in range(3):
        labels, count = ndimage.label(stationary[..., j], structure=structure)
        for lab in range(1, count + 1):
            i1, i2 = np.nonzero(labels == lab)
            size = len(i1)
            extent = (len(np.unique(i1)), len(np.unique(i2)))
            best = np.argmin(gnorm[i1, i2, j])
            a, b = int(i1[best]), int(i2[best])
            s = sv[a, b, j]
            rank = int(np.sum(s > rank_tol))
            point = StationaryPoint(
                k=(float(surface.k1[a]), float(surface.k2[b])),
                branch=j,
                gradient_norm=float(gnorm[a, b, j]),
                hessian_rank=rank,
                hessian_singular_values=(float(s[0]), float(s[1])),
            )
            if size >= flat_fraction * n * n:
                kind = DecayClass.FLAT_BRANCH
            elif max(extent) >= n / 2:
                kind = DecayClass.SADDLE_LINE
            else:
                kind = {
                    0: DecayClass.RANK_ZERO_HESSIAN,
                    1: DecayClass.RANK_ONE_HESSIAN,
                    2: DecayClass.ISOLATED_NONDEGENERATE,
                }[rank]
            points.append(point)
            components.append(StationaryComponent(j, size, extent, kind, point))
    if components:
        decay = min((c.kind for c in components), key=_ORDER.index)
    else:
        decay = DecayClass.NO_STATIONARY_POINT
    return StationaryPointReport(points, components, decay, grad_tol, rank_tol)
