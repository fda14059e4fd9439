"""Planetary-boundary state and the human-impact aggregate.

The aggregate combines the boundary readings linearly plus a symmetric
pairwise interaction term,

    H(h) = sum_i h_i + sum_{i,j} g_ij h_i h_j,

where the quadratic sum runs over *all ordered pairs* (i, j), so an
off-diagonal pair contributes 2 * g_ij * h_i * h_j.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from typing import Any

import numpy as np

from .errors import (
    AsymmetricMatrixError,
    DegenerateMatrixError,
    DimensionMismatchError,
    EsoptError,
)

DEFAULT_DIMENSION = 9

PB_LABELS = (
    "rate of biosphere loss",
    "land system change",
    "global fresh water use",
    "biogeochemical flows",
    "ocean acidification",
    "atmospheric aerosol loading",
    "stratospheric ozone depletion",
    "climate change",
    "chemical pollution",
)

SYMMETRY_TOL = 1e-9
DEGENERACY_TOL = 1e-12


def _as_finite_array(values, name: str, ndim: int) -> np.ndarray:
    try:
        arr = np.array(values, dtype=float)
    except (TypeError, ValueError) as exc:
        raise EsoptError(f"{name}: expected numbers ({exc})") from None
    if arr.ndim != ndim:
        raise EsoptError(f"{name}: expected a {ndim}-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise EsoptError(f"{name}: entries must be finite")
    arr.setflags(write=False)
    return arr


class PBVector:
    """Planetary-boundary readings ``h_i`` relative to the safe operating space.

    Values are signed dimensionless reals with no range clamp. The vector is
    immutable; its length is the configured dimension.
    """

    __slots__ = ("_values", "_labels")

    def __init__(self, values: Sequence[float], labels: Sequence[str] | None = None):
        arr = _as_finite_array(values, "h", 1)
        if arr.size < 1:
            raise EsoptError("h: dimension must be >= 1")
        if labels is None and arr.size == DEFAULT_DIMENSION:
            labels = PB_LABELS
        if labels is not None:
            labels = tuple(str(s) for s in labels)
            if len(labels) != arr.size:
                raise DimensionMismatchError(
                    f"labels: expected {arr.size} labels, got {len(labels)}"
                )
        self._values = arr
        self._labels = labels

    @classmethod
    def zeros(cls, n: int = DEFAULT_DIMENSION) -> "PBVector":
        return cls(np.zeros(n))

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def labels(self) -> tuple[str, ...] | None:
        return self._labels

    @property
    def dimension(self) -> int:
        return self._values.size

    def replace(self, index: int, value: float) -> "PBVector":
        """Return a copy with entry ``index`` set to ``value``."""
        arr = self._values.copy()
        arr[index] = value
        return PBVector(arr, self._labels)

    def __len__(self) -> int:
        return self._values.size

    def __getitem__(self, i):
        return self._values[i]

    def __iter__(self):
        return iter(self._values.tolist())

    def __eq__(self, other) -> bool:
        if not isinstance(other, PBVector):
            return NotImplemented
        return np.array_equal(self._values, other._values)

    def __hash__(self) -> int:
        return hash(self._values.tobytes())

    def __repr__(self) -> str:
        return f"PBVector({self._values.tolist()!r})"


class InteractionMatrix:
    """Symmetric, non-degenerate coupling matrix ``g_ij``.

    Only the upper triangle of the input is kept (after symmetrizing inputs
    that are symmetric to within ``sym_tol``), so ``g_ij == g_ji`` holds
    exactly. The all-zero matrix is accepted as the "no interaction" case even
    though its determinant vanishes.
    """

    __slots__ = ("_entries",)

    def __init__(
        self,
        entries,
        *,
        sym_tol: float = SYMMETRY_TOL,
        det_tol: float = DEGENERACY_TOL,
    ):
        g = np.array(_as_finite_array(entries, "g", 2))
        n, m = g.shape
        if n != m:
            raise DimensionMismatchError(f"g: matrix must be square, got {n}x{m}")
        if n < 1:
            raise EsoptError("g: dimension must be >= 1")
        asym = float(np.max(np.abs(g - g.T)))
        if asym > sym_tol:
            raise AsymmetricMatrixError(
                f"g: asymmetry {asym:.3g} exceeds tolerance {sym_tol:g}"
            )
        if asym > 0.0:
            g = 0.5 * (g + g.T)
        upper = np.triu(g)
        g = upper + np.triu(upper, 1).T
        if np.any(g != 0.0):
            det = float(np.linalg.det(g))
            if not abs(det) > det_tol:
                raise DegenerateMatrixError(
                    f"g: |det| = {abs(det):.3g} <= {det_tol:g}; non-zero matrix is degenerate"
                )
        g.setflags(write=False)
        self._entries = g

    @classmethod
    def zeros(cls, n: int = DEFAULT_DIMENSION) -> "InteractionMatrix":
        return cls(np.zeros((n, n)))

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    @property
    def dimension(self) -> int:
        return self._entries.shape[0]

    @property
    def is_zero(self) -> bool:
        return not np.any(self._entries)

    def scaled(self, factor: float) -> "InteractionMatrix":
        return InteractionMatrix(factor * self._entries)

    def __eq__(self, other) -> bool:
        if not isinstance(other, InteractionMatrix):
            return NotImplemented
        return np.array_equal(self._entries, other._entries)

    def __hash__(self) -> int:
        return hash(self._entries.tobytes())

    def __repr__(self) -> str:
        return f"InteractionMatrix({self._entries.tolist()!r})"


def validate_matrix(
    raw, *, sym_tol: float = SYMMETRY_TOL, det_tol: float = DEGENERACY_TOL
) -> InteractionMatrix:
    """Check a raw square array and wrap it as an :class:`InteractionMatrix`.

    Raises
    ------
    AsymmetricMatrixError
        if ``max|g - g.T| > sym_tol``.
    DegenerateMatrixError
        if ``g`` is non-zero and ``|det g| <= det_tol``.
    """
    return InteractionMatrix(raw, sym_tol=sym_tol, det_tol=det_tol)


def _check_dims(*items) -> int:
    dims = {it.dimension for it in items}
    if len(dims) != 1:
        raise DimensionMismatchError(f"dimension mismatch: {sorted(dims)}")
    return dims.pop()


def human_impact(h: PBVector, g: InteractionMatrix) -> float:
    """Second-order human-impact aggregate ``H(h)``.

    Both sums are accumulated with :func:`math.fsum`, so the result is the
    correctly rounded sum of the (rounded) terms.
    """
    _check_dims(h, g)
    x = h.values
    quadratic = (g.entries * np.outer(x, x)).ravel()
    return math.fsum(x) + math.fsum(quadratic)


def impact_delta(h_start: PBVector, h_end: PBVector, g: InteractionMatrix) -> float:
    """``H(h_end) - H(h_start)``; negative when the impact went down."""
    _check_dims(h_start, h_end, g)
    return human_impact(h_end, g) - human_impact(h_start, g)


def impact_gradient(h: PBVector, g: InteractionMatrix) -> np.ndarray:
    """Gradient of ``H`` with respect to ``h``: ``1 + 2 g h``."""
    _check_dims(h, g)
    return 1.0 + 2.0 * (g.entries @ h.values)


def coupling_for_fraction(h1: float, h2: float, fraction: float = 0.1) -> float:
    """Off-diagonal ``g_12`` making the pair term ``fraction * (h1 + h2)``.

    With the ordered-pair convention the pair term is ``2 g_12 h1 h2``.
    """
    if h1 == 0.0 or h2 == 0.0:
        raise EsoptError("coupling_for_fraction: h1 and h2 must be non-zero")
    return fraction * (h1 + h2) / (2.0 * h1 * h2)


def load_pb_document(doc: Mapping[str, Any]) -> tuple[PBVector, InteractionMatrix]:
    """Parse the PB JSON document ``{dimension, labels?, h, g?}``."""
    if not isinstance(doc, Mapping):
        raise EsoptError("pb document: expected a JSON object")
    for key in ("dimension", "h"):
        if key not in doc:
            raise EsoptError(f"{key}: missing required field")
    n = parse_dimension(doc["dimension"])
    labels = doc.get("labels")
    h = PBVector(doc["h"], labels)
    if h.dimension != n:
        raise DimensionMismatchError(f"h: expected {n} entries, got {h.dimension}")
    g = parse_matrix(doc.get("g"), n)
    return h, g


def parse_dimension(value) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise EsoptError(f"dimension: expected a positive integer, got {value!r}")
    return value


def parse_matrix(raw, n: int) -> InteractionMatrix:
    if raw is None:
        return InteractionMatrix.zeros(n)
    g = InteractionMatrix(raw)
    if g.dimension != n:
        raise DimensionMismatchError(f"g: expected {n}x{n}, got {g.dimension}x{g.dimension}")
    return g
