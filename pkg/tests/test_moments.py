import math

import pytest

from nptopt.fock import FockConfig, expectation, prepare_tmsv
from nptopt.moments import (HermitianPart, IndexMap, MultiIndex, hermitian_parts,
                            matrix_element_word, max_ordinal_for_degree,
                            multiindex_to_ordinal, ordinal_to_multiindex, part_mean,
                            variance_of_part)
from nptopt.words import OperatorWord

W = OperatorWord.parse

# Published ordering of the first fifteen multi-indices (p, q, r, s).
TABLE = [(0, 0, 0, 0), (1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1),
         (2, 0, 0, 0), (1, 1, 0, 0), (0, 2, 0, 0), (1, 0, 1, 0), (0, 1, 1, 0),
         (0, 0, 2, 0), (1, 0, 0, 1), (0, 1, 0, 1), (0, 0, 1, 1), (0, 0, 0, 2)]


def test_table_fidelity():
    assert [tuple(ordinal_to_multiindex(k)) for k in range(1, 16)] == TABLE


def test_first_degree_three_index():
    assert ordinal_to_multiindex(16) == MultiIndex(3, 0, 0, 0)


def test_graded_and_counted():
    degrees = [ordinal_to_multiindex(k).degree for k in range(1, 400)]
    assert degrees == sorted(degrees)
    assert max_ordinal_for_degree(1) == 5
    assert max_ordinal_for_degree(2) == 15
    assert ordinal_to_multiindex(max_ordinal_for_degree(3)).degree == 3
    assert ordinal_to_multiindex(max_ordinal_for_degree(3) + 1).degree == 4


def test_roundtrip_to_ten_thousand():
    for k in range(1, 10001):
        assert multiindex_to_ordinal(ordinal_to_multiindex(k)) == k


def test_fresh_map_grows_on_lookup():
    m = IndexMap()
    assert m.ordinal((0, 0, 0, 2)) == 15
    assert m[16] == MultiIndex(3, 0, 0, 0)


def test_negative_component_rejected():
    with pytest.raises(ValueError):
        multiindex_to_ordinal((-1, 0, 0, 0))


def test_matrix_element_words():
    assert str(matrix_element_word(1, 13)) == "a bd"
    assert str(matrix_element_word(3, 5)) == "ad bd"
    assert str(matrix_element_word(13, 13)) == "ad a bd b"
    assert str(matrix_element_word(1, 1)) == "1"


def test_transposed_element_is_adjoint():
    for i in range(1, 16):
        for j in range(1, 16):
            assert matrix_element_word(j, i) == matrix_element_word(i, j).adjoint()


def test_hermitian_word_has_no_imaginary_part(tmsv1):
    _, b1 = hermitian_parts(W("ad a"))
    assert part_mean(tmsv1, b1) == pytest.approx(0.0, abs=1e-14)


def test_vanishing_moment_parts(tmsv1):
    b0, b1 = hermitian_parts(W("a bd"))
    assert part_mean(tmsv1, b0) == pytest.approx(0.0, abs=1e-14)
    assert part_mean(tmsv1, b1) == pytest.approx(0.0, abs=1e-14)


def test_ab_parts_on_tmsv(tmsv1):
    b0, b1 = hermitian_parts(W("a b"))
    assert part_mean(tmsv1, b0) == pytest.approx(-math.cosh(0.5) * math.sinh(0.5), abs=1e-12)
    assert part_mean(tmsv1, b1) == pytest.approx(0.0, abs=1e-14)


def test_parts_recombine(sub11):
    for text in ["a^2 bd", "ad a b", "a b^2"]:
        b0, b1 = hermitian_parts(W(text))
        value = part_mean(sub11, b0) + 1j * part_mean(sub11, b1)
        assert value == pytest.approx(expectation(sub11, W(text)), abs=1e-12)


def test_invalid_part():
    with pytest.raises(ValueError):
        HermitianPart(W("a"), 2)


def test_identity_variance_zero(tmsv1):
    assert variance_of_part(tmsv1, HermitianPart(OperatorWord(), 0)) == 0.0


def test_number_variance_vacuum():
    vac = prepare_tmsv(0.0, FockConfig.square(4))
    assert variance_of_part(vac, HermitianPart(W("ad a"), 0)) == pytest.approx(0.0, abs=1e-15)


def test_number_variance_tmsv(tmsv1):
    """Thermal marginal: Var[n] = sinh^2 cosh^2 of zeta/2."""
    var = variance_of_part(tmsv1, HermitianPart(W("ad a"), 0))
    assert var == pytest.approx(0.345274461385453932, abs=1e-11)
