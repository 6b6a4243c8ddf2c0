import math

import numpy as np
import pytest

from nptopt.criteria import (CriterionSpec, adjugate, build_matrix, determinant,
                             enumerate_specs, evaluate_specs, is_negative, label, lookup,
                             named_catalog, parse_spec)
from nptopt.exceptions import NumericalError
from nptopt.fock import LocalRotation, apply_local_rotation, prepare_tmsv
from nptopt.noise import NoiseModel

from oracles import random_hermitian

S2 = math.sinh(0.5) ** 2
CS = math.cosh(0.5) * math.sinh(0.5)


def test_counts():
    assert len(enumerate_specs(5, 2)) == 31
    assert len(enumerate_specs(2, 4, d_min=2)) == 105
    assert len(enumerate_specs(1, 2)) == 5


def test_enumeration_order():
    specs = enumerate_specs(3, 2)
    assert specs == sorted(specs, key=lambda s: s.sort_key)
    assert specs[0].retained_indices == (1,)


def test_cross_mode_filter():
    specs = enumerate_specs(5, 2, cross_mode_only=True)
    assert len(specs) == 18
    assert all(s.involves_both_modes() for s in specs)


def test_one_by_one_never_negative(example_states):
    for state in example_states.values():
        for spec, det in evaluate_specs(state, enumerate_specs(1, 4)):
            assert det >= -1e-12


def test_spec_validation():
    with pytest.raises(ValueError):
        CriterionSpec((5, 3))
    with pytest.raises(ValueError):
        CriterionSpec(())
    with pytest.raises(ValueError):
        CriterionSpec((0, 2))


def test_catalog_lookups():
    assert lookup("D_I").spec == CriterionSpec((3, 5))
    assert (lookup("D_I").spec.d, lookup("D_I").spec.n) == (2, 2)
    assert lookup("E_III").spec == CriterionSpec((8, 15)) and lookup("E_III").spec.n == 4
    assert lookup("F_IV").spec == CriterionSpec((9, 13)) and lookup("F_IV").spec.n == 4
    assert lookup("S_III").spec == CriterionSpec((1, 5, 13))
    assert "Hillery-Zubairy" in lookup("F_I").note
    assert len(named_catalog()) == 20


def test_parse_spec():
    assert parse_spec("D_II") == CriterionSpec((2, 3, 5))
    assert parse_spec("(3,5)") == parse_spec("3, 5") == CriterionSpec((3, 5))
    assert label(CriterionSpec((1, 2))) == "(1,2)"
    with pytest.raises(KeyError):
        parse_spec("Z_IX")


def test_d1_matrix_on_tmsv(tmsv1):
    m = build_matrix(tmsv1, lookup("D_I").spec)
    np.testing.assert_allclose(m.entries, [[S2, -CS], [-CS, S2]], atol=1e-12)
    assert determinant(m) == pytest.approx(-S2, abs=1e-12)


def test_identity_entry_exact(cat1):
    m = build_matrix(cat1, lookup("F_I").spec)
    assert m.entries[0, 0] == 1.0
    assert determinant(build_matrix(cat1, CriterionSpec((1,)))) == 1.0


def test_f1_on_cat(cat1):
    """<a^dag a b^dag b> vanishes on the cat, leaving -|<a b^dag>|^2."""
    assert determinant(build_matrix(cat1, lookup("F_I").spec)) == pytest.approx(
        -0.0846742218346164736, abs=1e-12)


def test_s3_on_cat(cat1):
    m = build_matrix(cat1, lookup("S_III").spec)
    np.testing.assert_allclose(m.entries, m.entries.conj().T, atol=1e-14)
    assert determinant(m) < 0


def test_d1_with_loss(tmsv1):
    m = build_matrix(tmsv1, lookup("D_I").spec, NoiseModel(0.8, 0.0))
    assert determinant(m) == pytest.approx(-0.64 * S2, abs=1e-10)


def test_two_by_two_adjugate():
    a = np.array([[2.0, 1 + 2j], [1 - 2j, 3.0]])
    np.testing.assert_allclose(adjugate(a), [[3.0, -1 - 2j], [-1 + 2j, 2.0]])
    np.testing.assert_allclose(adjugate(np.array([[7.0]])), [[1.0]])


def test_adjugate_identity(rng):
    for d in range(1, 6):
        for _ in range(5):
            a = random_hermitian(rng, d)
            adj = adjugate(a)
            np.testing.assert_allclose(adj @ a, determinant(a) * np.eye(d), atol=1e-8)
            np.testing.assert_allclose(adj, adj.conj().T, atol=1e-9)


def test_adjugate_of_singular_matrix():
    v = np.array([1.0, 2.0, 1j])
    a = np.outer(v, v.conj())
    adj = adjugate(a)
    assert np.all(np.isfinite(adj))
    np.testing.assert_allclose(adj @ a, np.zeros((3, 3)), atol=1e-12)


def test_determinant_rejects_non_hermitian():
    with pytest.raises(NumericalError):
        determinant(np.array([[1.0, 1.0], [2j, 1.0]]))


def test_lu_and_cofactor_paths_agree(rng):
    from nptopt.criteria import _det_small
    a = random_hermitian(rng, 3)
    assert _det_small(a) == pytest.approx(np.linalg.det(a), abs=1e-12)


def test_negativity_threshold():
    assert not is_negative(np.diag([1.0, 1.0]), -1e-13)
    assert is_negative(np.diag([1.0, 1.0]), -1e-11)
    assert is_negative(np.zeros((2, 2)), -1e-13)


def test_tmsv_identities(tmsv1):
    """With vanishing first moments: D_I=D_IV, D_II=D_V, D_III=D_VI."""
    det = {c.name: determinant(build_matrix(tmsv1, c.spec)) for c in named_catalog()
           if c.name.startswith("D_")}
    assert det["D_I"] == pytest.approx(det["D_IV"], abs=1e-10)
    assert det["D_II"] == pytest.approx(det["D_V"], abs=1e-10)
    assert det["D_III"] == pytest.approx(det["D_VI"], abs=1e-10)


def test_d1_is_only_negative_small_spec():
    """Among all d = 2, n = 2 specs only D_I is negative on the ideal TMSV."""
    s = prepare_tmsv(1.0)
    negative = [spec for spec, d in evaluate_specs(s, enumerate_specs(2, 2, d_min=2))
                if is_negative(build_matrix(s, spec), d)]
    assert negative == [lookup("D_I").spec]


def test_rotation_invariance(tmsv1):
    rot = apply_local_rotation(tmsv1, LocalRotation(0.7, -0.3))
    spec = lookup("D_I").spec
    assert determinant(build_matrix(rot, spec)) == pytest.approx(
        determinant(build_matrix(tmsv1, spec)), abs=1e-10)
