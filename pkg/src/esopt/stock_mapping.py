"""Mapping from human-impact change to the underlying stock price.

``S = s0 - alpha * delta_H``: lowering the impact raises the price. The
curvature of ``S`` as a function of the boundary readings comes only from the
interaction matrix, so the price Hessian is the constant ``-2 alpha g``.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from .errors import EsoptError
from .pb_model import InteractionMatrix, PBVector, human_impact

EIGEN_RTOL = 1e-10

MAXIMUM = "maximum"
MINIMUM = "minimum"
SADDLE = "saddle"
DEGENERATE = "degenerate"


@dataclass(frozen=True)
class MappingParams:
    """Initial stock price ``s0`` and impact-to-price coefficient ``alpha``."""

    s0: float
    alpha: float

    def __post_init__(self):
        if not (np.isfinite(self.s0) and self.s0 > 0):
            raise EsoptError(f"s0: must be a positive finite price, got {self.s0!r}")
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise EsoptError(f"alpha: must be a positive finite constant, got {self.alpha!r}")


class MappedPrice(NamedTuple):
    value: float
    priceable: bool


def stock_price(params: MappingParams, delta_h: float) -> MappedPrice:
    """Spot implied by an impact change. Non-positive values are flagged, not clamped."""
    s = params.s0 - params.alpha * delta_h
    return MappedPrice(s, bool(s > 0.0))


def price_of_state(params: MappingParams, h: PBVector, h_ref: PBVector, g: InteractionMatrix) -> float:
    """Unflagged ``S(h)`` for a state measured against ``h_ref``."""
    return params.s0 - params.alpha * (human_impact(h, g) - human_impact(h_ref, g))


def _coords(coords: Sequence[int], n: int) -> list[int]:
    idx = [int(c) for c in coords]
    if not idx:
        raise EsoptError("coords: coordinate set must not be empty")
    if len(set(idx)) != len(idx):
        raise EsoptError(f"coords: duplicate coordinates in {idx}")
    bad = [c for c in idx if not 0 <= c < n]
    if bad:
        raise EsoptError(f"coords: indices {bad} outside 0..{n - 1}")
    return idx


def hessian_of_price(
    params: MappingParams, g: InteractionMatrix, coords: Sequence[int]
) -> np.ndarray:
    """Analytic Hessian ``d2S/dh_i dh_j = -alpha (g_ij + g_ji)`` over ``coords``.

    ``coords`` are zero-based indices into the PB vector.
    """
    idx = _coords(coords, g.dimension)
    sub = g.entries[np.ix_(idx, idx)]
    return -params.alpha * (sub + sub.T)


def eigen_classification(eigenvalues, rtol: float = EIGEN_RTOL) -> str:
    """Classify a critical point from Hessian eigenvalues.

    An eigenvalue counts as zero when ``|lam| <= rtol * max|lam|``; an all-zero
    spectrum is degenerate.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    scale = float(np.max(np.abs(lam))) if lam.size else 0.0
    if scale == 0.0:
        return DEGENERATE
    tol = rtol * scale
    if np.any(np.abs(lam) <= tol):
        return DEGENERATE
    if np.all(lam < -tol):
        return MAXIMUM
    if np.all(lam > tol):
        return MINIMUM
    return SADDLE


def second_derivative_test(hessian, rtol: float = EIGEN_RTOL) -> str:
    """Two-variable determinant/leading-entry test.

    A maximum needs ``S11*S22 - S12**2 > 0`` and ``S11 < 0``. The determinant
    is judged against ``rtol * max|entry|**2`` so near-singular matrices are
    reported as degenerate rather than guessed.
    """
    h = np.asarray(hessian, dtype=float)
    if h.shape != (2, 2):
        raise EsoptError(f"second_derivative_test: expected a 2x2 Hessian, got {h.shape}")
    s11, s22, s12 = h[0, 0], h[1, 1], 0.5 * (h[0, 1] + h[1, 0])
    scale = float(np.max(np.abs(h)))
    if scale == 0.0:
        return DEGENERATE
    det = s11 * s22 - s12 * s12
    # |det| = |l1*l2|; compare with the eigenvalue criterion's threshold
    if abs(det) <= rtol * 2.0 * scale * scale:
        return DEGENERATE
    if det < 0:
        return SADDLE
    return MAXIMUM if s11 < 0 else MINIMUM


@dataclass(frozen=True)
class ExtremumReport:
    point: list[float] | None
    classification: str
    hessian_det: float
    leading_second_derivative: float
    eigenvalues: list[float]
    coords: list[int]
    determinant_condition: bool
    leading_condition: bool

    def to_dict(self, one_based: bool = True) -> dict:
        d = asdict(self)
        if one_based:
            d["coords"] = [c + 1 for c in self.coords]
        return d


def stationary_point(g: InteractionMatrix, coords: Sequence[int]) -> np.ndarray | None:
    """Solve ``1 + 2 g h = 0`` on ``coords`` (other readings held at zero).

    Returns ``None`` when the restricted matrix is singular.
    """
    idx = _coords(coords, g.dimension)
    sub = g.entries[np.ix_(idx, idx)]
    scale = float(np.max(np.abs(sub)))
    if scale == 0.0:
        return None
    lam = np.linalg.eigvalsh(sub)
    if np.min(np.abs(lam)) <= EIGEN_RTOL * np.max(np.abs(lam)):
        return None
    return np.linalg.solve(2.0 * sub, -np.ones(len(idx)))


def _minors_alternate(hess: np.ndarray) -> bool:
    # Sylvester: (-1)^k det(H[:k, :k]) > 0 for k >= 2; reduces to det > 0 for 2x2
    n = hess.shape[0]
    if n == 1:
        return True
    return all((-1) ** k * np.linalg.det(hess[:k, :k]) > 0.0 for k in range(2, n + 1))


def classify_extremum(
    params: MappingParams,
    g: InteractionMatrix,
    coords: Sequence[int],
    rtol: float = EIGEN_RTOL,
) -> ExtremumReport:
    """Classify the critical point of ``S`` restricted to ``coords``.

    Two coordinates use the determinant/leading-entry test; larger sets use
    the eigenvalue signs. Both results are reported through the fields of the
    returned :class:`ExtremumReport`.
    """
    idx = _coords(coords, g.dimension)
    hess = hessian_of_price(params, g, idx)
    eig = np.linalg.eigvalsh(hess)
    det = float(np.linalg.det(hess))
    lead = float(hess[0, 0])
    if len(idx) == 2:
        kind = second_derivative_test(hess, rtol)
    else:
        kind = eigen_classification(eig, rtol)
    point = None if kind == DEGENERATE else stationary_point(g, idx)
    return ExtremumReport(
        point=None if point is None else point.tolist(),
        classification=kind,
        hessian_det=det,
        leading_second_derivative=lead,
        eigenvalues=eig.tolist(),
        coords=idx,
        determinant_condition=_minors_alternate(hess),
        leading_condition=bool(lead < 0.0),
    )
