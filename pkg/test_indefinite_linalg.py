import numpy as np
import pytest
from hypothesis import given, strategies as st

from cxhyp.errors import DegenerateFormError, DimensionError, NotInGroupError, ParseError
from cxhyp.geodesic_normal_form import normal_form_matrix
from cxhyp.indefinite_linalg import (
    GroupElement,
    SigmaForm,
    eigen_decompose,
    gram_orthonormalize,
    invert_word,
    matrix_from_json,
    matrix_to_json,
    minkowski_form,
    random_element,
    reconstruct,
    reduce_word,
    validate_su,
)

_seeds = st.integers(min_value=0, max_value=2**32 - 1)


def _e(i, size):
    v = np.zeros(size, dtype=complex)
    v[i] = 1.0
    return v


@pytest.mark.parametrize('u,v,expected', [
    (_e(0, 3), _e(0, 3), 1.0),
    (_e(2, 3), _e(2, 3), -1.0),
    (np.array([1.0, 0.0, 1.0]), np.array([1.0, 0.0, 1.0]), 0.0),
])
def test_minkowski_form_examples(u, v, expected):
    assert minkowski_form(u, v) == pytest.approx(expected, abs=1e-15)


@given(_seeds)
def test_minkowski_form_conjugate_symmetric(seed):
    r = np.random.default_rng(seed)
    u = r.normal(size=3) + 1j * r.normal(size=3)
    v = r.normal(size=3) + 1j * r.normal(size=3)
    assert abs(minkowski_form(u, v) - np.conj(minkowski_form(v, u))) < 1e-12


def test_minkowski_form_dimension_mismatch():
    with pytest.raises(DimensionError):
        minkowski_form(np.ones(3), np.ones(2))
    with pytest.raises(DimensionError):
        SigmaForm(1)(np.ones(3), np.ones(3))


def test_validate_su_examples():
    assert validate_su(np.eye(2), 1e-12)
    assert validate_su(normal_form_matrix(2.0, 1).entries, 1e-12)
    bad = np.eye(3, dtype=complex)
    bad[0, 0] = 1.01
    m = validate_su(bad, 1e-10)
    assert not m
    assert m.form_residual > 0.01
    with pytest.raises(DimensionError):
        validate_su(np.ones((2, 3)))


def test_from_matrix_rejects_non_members():
    with pytest.raises(NotInGroupError) as exc:
        GroupElement.from_matrix(2 * np.eye(2))
    assert "det_residual" in exc.value.diagnostics


def test_random_element_scale_zero_is_identity():
    assert np.array_equal(random_element(7, 0.0, 2).entries, np.eye(3))


@given(_seeds)
def test_random_element_is_in_group(seed):
    g = random_element(seed, 0.5, 2)
    assert validate_su(g.entries, 1e-10)


def test_random_element_deterministic():
    a = random_element(42, 0.5, 3)
    b = random_element(42, 0.5, 3)
    assert np.array_equal(a.entries, b.entries)


@given(_seeds)
def test_group_preserves_form(seed):
    g = random_element(seed, 0.7, 2).entries
    r = np.random.default_rng(seed + 1)
    u = r.normal(size=3) + 1j * r.normal(size=3)
    v = r.normal(size=3) + 1j * r.normal(size=3)
    bound = 1e-8 * (1 + np.linalg.norm(u) * np.linalg.norm(v))
    assert abs(minkowski_form(g @ u, g @ v) - minkowski_form(u, v)) <= bound


def test_products_stay_in_group_with_growing_tolerance():
    a = random_element(1, 0.5, 2)
    b = random_element(2, 0.5, 2)
    ab = a @ b
    assert ab.tol == pytest.approx(a.tol + b.tol)
    assert ab.validate()
    assert np.allclose((a @ a.inverse()).entries, np.eye(3), atol=1e-12)


def test_word_bookkeeping():
    assert reduce_word("abBA") == ""
    assert reduce_word("aAb") == "b"
    assert invert_word("abC") == "cBA"
    g = GroupElement(normal_form_matrix(2.0, 1).entries, 1e-12, "a")
    assert (g @ g.inverse()).word == ""
    assert g.power(-3).word == "AAA"


def test_eigen_decompose_normal_form():
    pairs = eigen_decompose(normal_form_matrix(2.0, 1))
    assert [p.value for p in pairs] == pytest.approx([2.0, 0.5], abs=1e-12)
    assert all(p.value.imag == 0.0 for p in pairs)
    for p, expected in zip(pairs, ([1.0, 1.0], [1.0, -1.0])):
        e = np.array(expected) / np.sqrt(2.0)
        assert abs(abs(np.vdot(e, p.vector)) - 1.0) < 1e-10


def test_eigen_decompose_identity():
    pairs = eigen_decompose(GroupElement.identity(2))
    assert [p.value for p in pairs] == pytest.approx([1.0, 1.0, 1.0])


def test_eigen_decompose_block_form():
    pairs = eigen_decompose(normal_form_matrix(3.0, 2))
    assert [p.value.real for p in pairs] == pytest.approx([3.0, 1.0, 1.0 / 3.0], abs=1e-10)
    for p in pairs:
        assert p.residual <= 1e-10 * max(1.0, np.linalg.norm(normal_form_matrix(3.0, 2).entries, 2))


@pytest.mark.parametrize('seed', [3, 11, 29])
def test_reconstruct_recovers_matrix(seed):
    g = random_element(seed, 0.8, 2)
    assert np.max(np.abs(reconstruct(eigen_decompose(g)) - g.entries)) < 1e-8


def test_gram_orthonormalize_single_vector():
    (w,) = gram_orthonormalize([2 * _e(0, 3)])
    assert abs(abs(w[0]) - 1.0) < 1e-12
    assert np.allclose(w[1:], 0.0)


def test_gram_orthonormalize_pair():
    ws = gram_orthonormalize([_e(0, 3), _e(0, 3) + _e(1, 3)])
    gram = np.array([[minkowski_form(a, b) for b in ws] for a in ws])
    assert np.max(np.abs(gram - np.eye(2))) < 1e-10
    assert np.allclose([w[2] for w in ws], 0.0)


def test_gram_orthonormalize_rejects_negative_direction():
    with pytest.raises(DegenerateFormError):
        gram_orthonormalize([_e(2, 3)])


def test_matrix_json_codec():
    g = random_element(5, 0.5, 1)
    assert np.array_equal(matrix_from_json(matrix_to_json(g.entries)), g.entries)
    with pytest.raises(ParseError):
        matrix_from_json({"entries": [[1, 0], [0, 1]]})
    with pytest.raises(ParseError):
        matrix_from_json({"n": 2, "entries": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]})
    with pytest.raises(ParseError):
        matrix_from_json([1, 2])
