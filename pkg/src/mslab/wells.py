"""Well families, rank-one geometry, and hull classification of boundary data.

The four built-in families are the two-well pair, the three diagonal wells
with a single rank-one connection (first and second order laminates), the
general diagonal chain of N <= d+1 wells, and the four pairwise
incompatible diagonal wells whose hull is nontrivial only at the
quasiconvex level.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from mslab.errors import (
    DimensionMismatchError,
    DuplicateWellError,
    InvalidParameterError,
    UnsupportedFamilyError,
)

RANK_ONE_RTOL = 1e-12
HULL_TOL = 1e-9


class Family(str, Enum):
    TWO_WELL = "two_well"
    LORENT_K3 = "lorent_k3"
    DIAGONAL_KN = "diagonal_kn"
    TARTAR_T4 = "tartar_t4"
    CUSTOM = "custom"


@dataclass(frozen=True)
class WellSet:
    """Finite set of d x d wells with family metadata.

    ``wells`` is an (N, d, d) array; order is meaningful (well indices are
    stored in phase fields).
    """

    dimension: int
    wells: np.ndarray
    family_tag: Family
    diagonal_only: bool = False
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        w = np.asarray(self.wells, dtype=float)
        object.__setattr__(self, "wells", w)
        if w.ndim != 3 or w.shape[1] != self.dimension or w.shape[2] != self.dimension:
            raise DimensionMismatchError(
                f"wells array {w.shape} does not match dimension {self.dimension}"
            )
        for i in range(len(w)):
            for j in range(i + 1, len(w)):
                if np.array_equal(w[i], w[j]):
                    raise DuplicateWellError(f"wells {i} and {j} coincide")
        if self.diagonal_only:
            for i, a in enumerate(w):
                if not np.allclose(a, np.diag(np.diag(a))):
                    raise InvalidParameterError(f"well {i} is not diagonal")

    @property
    def n_wells(self) -> int:
        return len(self.wells)

    def __len__(self) -> int:
        return len(self.wells)

    def diameter(self) -> float:
        w = self.wells
        d = 0.0
        for i in range(len(w)):
            for j in range(i + 1, len(w)):
                d = max(d, float(np.linalg.norm(w[i] - w[j])))
        return d


@dataclass(frozen=True)
class BoundaryDatum:
    """Classification of an affine boundary matrix against a well family.

    ``laminate_order`` is 0 when F is itself a well, ell >= 1 for an
    ell-th order laminate, and None when F lies outside the lamination
    hull.  For the four incompatible wells only the quasiconvex-hull flag
    ``in_qc_hull`` is meaningful.
    """

    F: np.ndarray
    laminate_order: Optional[int]
    alpha: Optional[float] = None
    in_qc_hull: Optional[bool] = None

    @property
    def in_hull(self) -> bool:
        return self.laminate_order is not None or bool(self.in_qc_hull)


def _lorent_k3() -> np.ndarray:
    return np.array(
        [
            [[0.0, 0.0], [0.0, 0.0]],
            [[1.0, 0.0], [0.0, 0.0]],
            [[0.5, 0.0], [0.0, 1.0]],
        ]
    )


def _diagonal_kn(d: int, n_wells: int) -> np.ndarray:
    mats = [np.zeros((d, d))]
    for j in range(2, n_wells + 1):
        diag = np.zeros(d)
        diag[: j - 2] = 0.5
        diag[j - 2] = 1.0
        mats.append(np.diag(diag))
    return np.array(mats)


def _tartar_t4() -> np.ndarray:
    return np.array(
        [
            np.diag([-1.0, -3.0]),
            np.diag([-3.0, 1.0]),
            np.diag([1.0, 3.0]),
            np.diag([3.0, -1.0]),
        ]
    )


TARTAR_AUX = np.array(
    [
        np.diag([-1.0, -1.0]),
        np.diag([-1.0, 1.0]),
        np.diag([1.0, 1.0]),
        np.diag([1.0, -1.0]),
    ]
)


def make_well_set(family_tag, d: int, **params) -> WellSet:
    """Construct one of the built-in well families.

    Parameters
    ----------
    family_tag : Family or str
        One of "two_well", "lorent_k3", "diagonal_kn", "tartar_t4", "custom".
    d : int
        Spatial dimension (2 or 3).
    params :
        two_well: ``a`` (d-vector, default e1); the wells are {0, a x e1}.
        diagonal_kn: ``n_wells`` (N <= d+1).
        custom: ``matrices`` ((N, d, d) array-like).
    """
    tag = Family(family_tag)
    if d not in (2, 3):
        raise DimensionMismatchError(f"dimension must be 2 or 3, got {d}")
    if tag is Family.TWO_WELL:
        a = np.asarray(params.get("a", np.eye(d)[0]), dtype=float)
        if a.shape != (d,) or not np.any(a):
            raise InvalidParameterError("two_well requires a nonzero d-vector a")
        e1 = np.zeros(d)
        e1[0] = 1.0
        wells = np.array([np.zeros((d, d)), np.outer(a, e1)])
        return WellSet(d, wells, tag, diagonal_only=False, params={"a": a})
    if tag is Family.LORENT_K3:
        if d != 2:
            raise DimensionMismatchError("lorent_k3 requires d = 2")
        return WellSet(d, _lorent_k3(), tag, diagonal_only=True)
    if tag is Family.DIAGONAL_KN:
        n_wells = int(params.get("n_wells", d + 1))
        if not 2 <= n_wells <= d + 1:
            raise DimensionMismatchError(
                f"diagonal_kn requires 2 <= N <= d+1, got N={n_wells}, d={d}"
            )
        return WellSet(
            d, _diagonal_kn(d, n_wells), tag, diagonal_only=True, params={"n_wells": n_wells}
        )
    if tag is Family.TARTAR_T4:
        if d != 2:
            raise DimensionMismatchError("tartar_t4 requires d = 2")
        return WellSet(d, _tartar_t4(), tag, diagonal_only=True)
    if tag is Family.CUSTOM:
        mats = np.asarray(params["matrices"], dtype=float)
        diag = all(np.allclose(m, np.diag(np.diag(m))) for m in mats)
        return WellSet(d, mats, tag, diagonal_only=diag)
    raise UnsupportedFamilyError(str(family_tag))


def rank_one_direction(A, B) -> Optional[tuple[np.ndarray, np.ndarray]]:
    """Decompose A - B = a x n when rank(A - B) = 1.

    Returns (a, n) with n a unit vector whose first nonzero component is
    positive, or None when the rank is 0 or >= 2.  Total function: never
    raises for square inputs.
    """
    M = np.asarray(A, dtype=float) - np.asarray(B, dtype=float)
    norm = np.linalg.norm(M)
    if norm == 0.0:
        return None
    u, s, vt = np.linalg.svd(M)
    if s[1] > RANK_ONE_RTOL * norm:
        return None
    n = vt[0]
    a = s[0] * u[:, 0]
    nz = np.nonzero(np.abs(n) > 1e-14)[0][0]
    if n[nz] < 0:
        n = -n
        a = -a
    return a, n


def cross_product(v, M) -> np.ndarray:
    """Row-wise cross product (v x M)_j = v1 M_j2 - v2 M_j1 for d = 2.

    Vanishes iff M = a x n with n parallel to v (or M = 0), so it tests
    compatibility of an interface with normal direction v.
    """
    v = np.asarray(v, dtype=float)
    M = np.asarray(M, dtype=float)
    return v[0] * M[:, 1] - v[1] * M[:, 0]


def _classify_diagonal_chain(W: WellSet, F: np.ndarray) -> BoundaryDatum:
    d = W.dimension
    n_wells = len(W)
    if not np.allclose(F, np.diag(np.diag(F)), atol=HULL_TOL):
        return BoundaryDatum(F, None)
    for ell in range(1, n_wells):
        # order ell: (ell-1) leading entries 1/2, entry ell equal to alpha in (0,1), rest 0
        diag = np.diag(F)
        proto = np.zeros(d)
        proto[: ell - 1] = 0.5
        rest_ok = np.allclose(diag[ell:], 0.0, atol=HULL_TOL)
        lead_ok = np.allclose(diag[: ell - 1], proto[: ell - 1], atol=HULL_TOL)
        alpha = diag[ell - 1]
        if rest_ok and lead_ok and HULL_TOL < alpha < 1.0 - HULL_TOL:
            return BoundaryDatum(F, ell, alpha=float(alpha))
    return BoundaryDatum(F, None)


def _classify_tartar(F: np.ndarray) -> BoundaryDatum:
    if not np.allclose(F, np.diag(np.diag(F)), atol=HULL_TOL):
        return BoundaryDatum(F, None, in_qc_hull=False)
    x, y = F[0, 0], F[1, 1]
    in_square = abs(x) <= 1.0 + HULL_TOL and abs(y) <= 1.0 + HULL_TOL
    # four arms [A_j, J_j]: one coordinate pinned at +-1, the other reaching out to +-3
    arms = (
        (abs(x + 1.0) <= HULL_TOL and -3.0 - HULL_TOL <= y <= -1.0 + HULL_TOL)
        or (abs(y - 1.0) <= HULL_TOL and -3.0 - HULL_TOL <= x <= -1.0 + HULL_TOL)
        or (abs(x - 1.0) <= HULL_TOL and 1.0 - HULL_TOL <= y <= 3.0 + HULL_TOL)
        or (abs(y + 1.0) <= HULL_TOL and 1.0 - HULL_TOL <= x <= 3.0 + HULL_TOL)
    )
    return BoundaryDatum(F, None, in_qc_hull=bool(in_square or arms))


def classify_boundary_datum(W: WellSet, F) -> BoundaryDatum:
    """Closed-form hull membership test against the family's parametrization.

    For the diagonal chains returns the laminate order ell and the free
    parameter alpha; for the incompatible four-well family returns the
    quasiconvex-hull flag instead.
    """
    if W.family_tag is Family.CUSTOM:
        raise UnsupportedFamilyError("classification requires a built-in family")
    F = np.asarray(F, dtype=float)
    for i, A in enumerate(W.wells):
        if np.allclose(F, A, atol=HULL_TOL):
            return BoundaryDatum(
                F, 0, in_qc_hull=True if W.family_tag is Family.TARTAR_T4 else None
            )
    if W.family_tag is Family.TWO_WELL:
        A, B = W.wells[1], W.wells[0]
        # F = alpha*(a x e1) with alpha in (0, 1)
        D = F - B
        ro = rank_one_direction(W.wells[1], W.wells[0])
        a, nvec = ro
        denom = float(np.dot(a, a))
        alpha = float(np.tensordot(D, np.outer(a, nvec)) / denom)
        if HULL_TOL < alpha < 1 - HULL_TOL and np.allclose(
            D, alpha * np.outer(a, nvec), atol=HULL_TOL
        ):
            return BoundaryDatum(F, 1, alpha=alpha)
        return BoundaryDatum(F, None)
    if W.family_tag in (Family.LORENT_K3, Family.DIAGONAL_KN):
        return _classify_diagonal_chain(W, F)
    if W.family_tag is Family.TARTAR_T4:
        return _classify_tartar(F)
    raise UnsupportedFamilyError("classification requires a built-in family")


def parametrize_order(W: WellSet, ell: int, alpha: float) -> np.ndarray:
    """Inverse of classification for the diagonal chains: the order-ell datum."""
    if W.family_tag not in (Family.LORENT_K3, Family.DIAGONAL_KN):
        raise UnsupportedFamilyError("parametrization defined for diagonal chains only")
    if not 1 <= ell <= len(W) - 1:
        raise InvalidParameterError(f"order must lie in 1..{len(W) - 1}")
    if not 0.0 < alpha < 1.0:
        raise InvalidParameterError("alpha must lie in (0,1)")
    diag = np.zeros(W.dimension)
    diag[: ell - 1] = 0.5
    diag[ell - 1] = alpha
    return np.diag(diag)
