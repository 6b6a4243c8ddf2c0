import math

import pytest

from nptopt.fock import FockConfig, apply_thermal_loss_channel, expectation, prepare_tmsv
from nptopt.loss import (evaluate_lossy_moment, kappa_t_to_eta, lossy_moment_expansion,
                         mode_expansion, normal_order, thermal_bath_moment)
from nptopt.noise import NoiseModel
from nptopt.words import OperatorWord

W = OperatorWord.parse
S2 = math.sinh(0.5) ** 2


def test_normal_order_commutator():
    """e e^dag = e^dag e + 1."""
    assert normal_order((False, True)) == ((1, 0, 0), (1, 1, 1))


def test_wick_identity():
    """<e^dag^p e^q> = delta_pq p! n^p for p, q <= 4."""
    for p in range(5):
        for q in range(5):
            poly = thermal_bath_moment((True,) * p + (False,) * q)
            expected = (0,) * p + (math.factorial(p),) if p == q else ()
            assert poly == expected


def test_antinormal_bath_moment():
    """<e e^dag> = n + 1 and <e^2 e^dag^2> = 2 n^2 + 4 n + 2."""
    assert thermal_bath_moment((False, True)) == (1, 1)
    assert thermal_bath_moment((False, False, True, True)) == (2, 4, 2)


def test_number_expansion():
    exp = lossy_moment_expansion(W("ad a"), NoiseModel(0.3, 0.2))
    assert exp.coefficient(W("ad a")) == pytest.approx(0.3)
    assert exp.coefficient(OperatorWord()) == pytest.approx(0.7 * 0.2)
    assert len(exp) == 2


def test_antinormal_full_loss():
    exp = lossy_moment_expansion(W("a ad"), NoiseModel(0.0, 0.0))
    assert exp.terms == ((1.0, OperatorWord()),)


def test_cross_mode_expansion():
    exp = lossy_moment_expansion(W("a b"), NoiseModel(0.6, 0.5))
    assert exp.terms == ((pytest.approx(0.6), W("a b")),)


def test_expansion_coefficients_are_integers():
    for t in mode_expansion((False, True, True, False)):
        assert isinstance(t.coef, int)
        assert all(isinstance(c, int) for c in t.nbar_poly)


def test_transparent_equals_plain(sub11):
    for text in ["ad a b", "a^2 bd^2"]:
        assert evaluate_lossy_moment(sub11, W(text), NoiseModel(1.0, 0.4)) == expectation(sub11, W(text))


def test_vacuum_thermal_number():
    vac = prepare_tmsv(0.0, FockConfig.square(4))
    assert evaluate_lossy_moment(vac, W("ad a"), NoiseModel(0.5, 0.1)).real == pytest.approx(0.05)


def test_fourth_order_against_channel(tmsv1):
    noise = NoiseModel(0.8, 0.0)
    out = apply_thermal_loss_channel(tmsv1, noise)
    w = W("ad a bd b")
    assert evaluate_lossy_moment(tmsv1, w, noise) == pytest.approx(expectation(out, w), abs=1e-8)


def test_expansion_evaluates_like_matrix_path(cat1):
    noise = NoiseModel(0.7, 0.05)
    for text in ["ad^2 a b", "a ad bd b", "a^2 bd^2"]:
        w = W(text)
        assert lossy_moment_expansion(w, noise).evaluate(cat1) == pytest.approx(
            evaluate_lossy_moment(cat1, w, noise), abs=1e-12)


def test_eta_composition_symbolic():
    """Expanding twice at a vacuum bath equals one expansion at the product."""
    for text in ["ad a", "a ad^2 b", "ad^2 a^2", "a bd a ad"]:
        w = W(text)
        twice: dict = {}
        for c1, w1 in lossy_moment_expansion(w, NoiseModel(0.9)).terms:
            for c2, w2 in lossy_moment_expansion(w1, NoiseModel(0.7)).terms:
                twice[w2] = twice.get(w2, 0.0) + c1 * c2
        once = dict((x, c) for c, x in lossy_moment_expansion(w, NoiseModel(0.63)).terms)
        for key in set(twice) | set(once):
            assert twice.get(key, 0.0) == pytest.approx(once.get(key, 0.0), abs=1e-12)


def test_full_loss_identity_is_thermal_expectation():
    """At eta = 0 only the identity survives, with the bath's own moment."""
    exp = lossy_moment_expansion(W("a^2 ad^2 b bd"), NoiseModel(0.0, 0.3))
    assert [str(w) for _, w in exp.terms] == ["1"]
    n = 0.3
    assert exp.terms[0][0] == pytest.approx((2 * n * n + 4 * n + 2) * (n + 1))


def test_kappa_t_to_eta():
    assert kappa_t_to_eta(1.0, 0.0) == 1.0
    assert kappa_t_to_eta(1.0, 50.0) < 1e-40
    assert kappa_t_to_eta(math.log(2) / 2, 1.0) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        kappa_t_to_eta(-1.0, 1.0)
