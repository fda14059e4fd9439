import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from esopt import (
    AsymmetricMatrixError,
    DegenerateMatrixError,
    DimensionMismatchError,
    EsoptError,
    InteractionMatrix,
    PBVector,
    human_impact,
    impact_delta,
    validate_matrix,
)
from esopt.pb_model import PB_LABELS, coupling_for_fraction, load_pb_document

from conftest import naive_impact, nine, random_coupling

finite = st.floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False)


def test_default_labels_for_nine():
    v = PBVector(np.ones(9))
    assert v.labels == PB_LABELS
    assert v.dimension == 9
    assert PBVector([1.0, 2.0]).labels is None


def test_vector_is_immutable():
    v = PBVector([1.0, 2.0])
    with pytest.raises(ValueError):
        v.values[0] = 5.0


@pytest.mark.parametrize("bad", [[], [1.0, float("nan")], [[1.0]], [1.0, float("inf")]])
def test_vector_rejects_bad_input(bad):
    with pytest.raises(EsoptError):
        PBVector(bad)


def test_zero_vector_gives_zero():
    g = InteractionMatrix(random_coupling(np.random.default_rng(0), 9))
    assert human_impact(PBVector.zeros(9), g) == 0.0


def test_linear_term_only():
    assert human_impact(nine(h1=0.5, h2=0.3), InteractionMatrix.zeros(9)) == pytest.approx(0.8, abs=1e-15)


def test_pair_counted_twice():
    g = np.zeros((9, 9))
    g[0, 1] = g[1, 0] = 0.1
    h = nine(h1=0.5, h2=0.3)
    # the nine-dimensional g with only one pair is degenerate, use the 2x2 block
    g2 = InteractionMatrix([[0.0, 0.1], [0.1, 0.0]])
    h2 = PBVector([0.5, 0.3])
    assert human_impact(h2, g2) == pytest.approx(0.83, abs=1e-15)
    assert naive_impact(h.values, g) == pytest.approx(0.83, abs=1e-15)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        human_impact(PBVector([1.0, 2.0]), InteractionMatrix.zeros(3))
    with pytest.raises(DimensionMismatchError):
        impact_delta(PBVector([1.0]), PBVector([1.0, 2.0]), InteractionMatrix.zeros(2))


def test_impact_delta_examples():
    g0 = InteractionMatrix.zeros(9)
    a = nine(h1=0.5)
    assert impact_delta(a, a, g0) == 0.0
    assert impact_delta(a, nine(h1=0.3), g0) == pytest.approx(-0.2, abs=1e-15)


def test_ten_percent_coupling():
    h1, h2 = 0.8, 0.6
    g12 = coupling_for_fraction(h1, h2, 0.1)
    g = InteractionMatrix([[0.0, g12], [g12, 0.0]])
    h = PBVector([h1, h2])
    cross = human_impact(h, g) - (h1 + h2)
    assert cross == pytest.approx(0.1 * (h1 + h2), rel=1e-14)
    # delta from the origin reflects linear terms plus the coupling
    d = impact_delta(PBVector([0.0, 0.0]), h, g)
    assert d == pytest.approx(naive_impact([h1, h2], g.entries), rel=1e-14)
    uncoupled = impact_delta(PBVector([0.0, 0.0]), h, InteractionMatrix.zeros(2))
    assert d - uncoupled == pytest.approx(0.1 * (h1 + h2), rel=1e-13)


class TestValidateMatrix:
    def test_identity(self):
        g = validate_matrix(np.eye(9))
        assert np.array_equal(g.entries, np.eye(9))

    def test_zero_sentinel(self):
        g = validate_matrix(np.zeros((9, 9)))
        assert g.is_zero

    def test_degenerate_block(self):
        raw = np.zeros((9, 9))
        raw[:2, :2] = 1.0
        assert np.linalg.det(raw) == 0.0
        with pytest.raises(DegenerateMatrixError):
            validate_matrix(raw)

    def test_singular_nonzero_small(self):
        with pytest.raises(DegenerateMatrixError):
            validate_matrix([[1.0, 1.0], [1.0, 1.0]])

    def test_asymmetry_beyond_tolerance(self):
        with pytest.raises(AsymmetricMatrixError):
            validate_matrix([[1.0, 0.2], [0.1, 1.0]])

    def test_small_asymmetry_symmetrized(self):
        raw = np.array([[1.0, 0.1 + 4e-10], [0.1 - 4e-10, 1.0]])
        g = validate_matrix(raw)
        assert g.entries[0, 1] == g.entries[1, 0]
        assert g.entries[0, 1] == pytest.approx(0.1, abs=1e-15)

    def test_non_square(self):
        with pytest.raises(DimensionMismatchError):
            validate_matrix(np.ones((2, 3)))

    def test_custom_tolerances(self):
        with pytest.raises(DegenerateMatrixError):
            validate_matrix(np.eye(2) * 1e-4, det_tol=1e-6)
        validate_matrix([[1.0, 0.1 + 1e-6], [0.1, 1.0]], sym_tol=1e-5)

    def test_exact_symmetry_of_storage(self, rng):
        raw = random_coupling(rng, 7)
        raw[2, 5] += 1e-10
        g = validate_matrix(raw)
        assert np.array_equal(g.entries, g.entries.T)


def test_invariant_under_symmetrization(rng):
    for _ in range(50):
        raw = random_coupling(rng, 5)
        raw = raw + rng.uniform(-5e-10, 5e-10, size=raw.shape)
        h = PBVector(rng.uniform(0, 2, 5))
        sym = 0.5 * (raw + raw.T)
        assert human_impact(h, InteractionMatrix(raw)) == pytest.approx(naive_impact(h.values, sym), rel=1e-14)


@settings(max_examples=200, deadline=None)
@given(st.lists(finite, min_size=1, max_size=20))
def test_zero_coupling_is_plain_sum(values):
    h = PBVector(values)
    assert human_impact(h, InteractionMatrix.zeros(len(values))) == math.fsum(values)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6).flatmap(lambda n: st.tuples(
    st.lists(finite, min_size=n, max_size=n),
    st.lists(finite, min_size=n, max_size=n),
    st.integers(0, 2**32 - 1),
)))
def test_delta_antisymmetric(args):
    a, b, seed = args
    g = InteractionMatrix(random_coupling(np.random.default_rng(seed), len(a)))
    pa, pb_ = PBVector(a), PBVector(b)
    assert impact_delta(pa, pb_, g) == -impact_delta(pb_, pa, g)


@pytest.mark.parametrize("n", [2, 9, 20])
def test_matches_naive_loop(rng, n):
    for _ in range(100):
        g = random_coupling(rng, n)
        h = rng.uniform(0.0, 2.0, n)
        ref = naive_impact(h, g)
        assert abs(human_impact(PBVector(h), InteractionMatrix(g)) - ref) <= 1e-14 * abs(ref)


class TestDocument:
    def test_roundtrip(self):
        doc = {"dimension": 2, "labels": ["a", "b"], "h": [0.5, 0.3], "g": [[0, 0.1], [0.1, 0]]}
        h, g = load_pb_document(doc)
        assert h.labels == ("a", "b")
        assert human_impact(h, g) == pytest.approx(0.83)

    def test_g_defaults_to_zero(self):
        h, g = load_pb_document({"dimension": 3, "h": [1, 2, 3]})
        assert g.is_zero and g.dimension == 3

    @pytest.mark.parametrize("doc, field", [
        ({"h": [1.0]}, "dimension"),
        ({"dimension": 2}, "h"),
        ({"dimension": 2, "h": [1.0]}, "h"),
        ({"dimension": 2, "h": [1.0, 2.0], "g": [[1.0]]}, "g"),
        ({"dimension": 2, "h": [1.0, 2.0], "labels": ["x"]}, "labels"),
        ({"dimension": 0, "h": []}, "dimension"),
    ])
    def test_errors_name_field(self, doc, field):
        with pytest.raises(EsoptError, match=field):
            load_pb_document(doc)
