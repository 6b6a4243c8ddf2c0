import numpy as np
import pytest

from nptopt.words import OperatorWord, mode_matrix, runs, square

from oracles import dense_word


def test_parse_and_render_roundtrip():
    """Text notation parses and renders back identically."""
    for text in ["ad^2 a bd b", "a bd", "ad a ad a", "b^3", "1"]:
        assert str(OperatorWord.parse(text)) == text


def test_parse_rejects_bad_tokens():
    with pytest.raises(ValueError):
        OperatorWord.parse("c^2")


def test_from_exponents_slot_order():
    """Exponents fill ad^q a^p ad^n a^m on A and bd^l b^k bd^r b^s on B."""
    w = OperatorWord.from_exponents(q=1, p=2, n=0, m=1, l=1, k=0, r=2, s=1)
    assert str(w) == "ad a^3 bd^3 b"
    assert w.order == 8


def test_adjoint_and_hermitian():
    w = OperatorWord.parse("ad a^2 b")
    assert str(w.adjoint()) == "ad^2 a bd"
    assert OperatorWord.parse("ad a bd b").is_hermitian()
    assert not w.is_hermitian()


def test_rotation_charge():
    assert OperatorWord.parse("ad^2 a b").rotation_charge() == (1, -1)


def test_runs():
    assert runs((True, True, False, True)) == [(True, 2), (False, 1), (True, 1)]


def test_mode_matrix_matches_large_dense_product():
    """Cropped padded products equal the infinite-space elements."""
    letters = (False, True, True, False, False, True)
    big = dense_word(letters, 40)[:10, :10]
    np.testing.assert_allclose(mode_matrix(letters, 10), big, atol=1e-12)


def test_mode_matrix_is_read_only():
    m = mode_matrix((True,), 5)
    with pytest.raises(ValueError):
        m[0, 0] = 1.0


def test_square_polynomial():
    w = OperatorWord.parse("a")
    sq = square([(0.5, w), (0.5, w.adjoint())])
    assert len(sq) == 4
    assert {str(x) for _, x in sq} == {"a^2", "a ad", "ad a", "ad^2"}
