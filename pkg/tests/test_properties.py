"""Property-based checks of structural invariants."""
import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from nptopt.criteria import (CriterionSpec, adjugate, build_matrix, determinant,
                             enumerate_specs, is_negative, MomentTable)
from nptopt.fock import FockConfig, LocalRotation, apply_local_rotation, prepare_tmsv, product_state
from nptopt.loss import normal_order
from nptopt.moments import hermitian_parts, matrix_element_word, max_ordinal_for_degree
from nptopt.noise import NoiseModel

from oracles import dense_word, random_density_matrix, random_hermitian

SETTINGS = settings(max_examples=40, deadline=None,
                    suppress_health_check=[HealthCheck.function_scoped_fixture])
SMALL_SPECS = enumerate_specs(3, 2)


@SETTINGS
@given(st.lists(st.booleans(), max_size=7))
def test_normal_order_matches_dense(letters):
    dim = 20
    dense = dense_word(letters, dim)
    a = dense_word([False], dim)
    ad = a.T
    rebuilt = sum(c * np.linalg.matrix_power(ad, p) @ np.linalg.matrix_power(a, q)
                  for c, p, q in normal_order(tuple(letters)))
    keep = dim - len(letters) - 1
    np.testing.assert_allclose(rebuilt[:keep, :keep], dense[:keep, :keep], atol=1e-9)


@SETTINGS
@given(st.integers(1, max_ordinal_for_degree(2)), st.integers(1, max_ordinal_for_degree(2)))
def test_hermitian_parts_reassemble(i, j):
    """O = B_0 + i B_1 with both parts Hermitian."""
    word = matrix_element_word(i, j)
    dim = 8
    dense = lambda w: np.kron(dense_word(w.a, dim), dense_word(w.b, dim))
    parts = []
    for part in hermitian_parts(word):
        m = sum(c * dense(w) for c, w in part.polynomial())
        np.testing.assert_allclose(m, m.conj().T, atol=1e-12)
        parts.append(m)
    np.testing.assert_allclose(parts[0] + 1j * parts[1], dense(word), atol=1e-12)


@SETTINGS
@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_adjugate_identity(seed, d):
    a = random_hermitian(np.random.default_rng(seed), d)
    np.testing.assert_allclose(adjugate(a) @ a, determinant(a) * np.eye(d), atol=1e-8)


@SETTINGS
@given(st.floats(0.1, 1.8), st.floats(-np.pi, np.pi), st.floats(-np.pi, np.pi),
       st.sampled_from(SMALL_SPECS))
def test_rotation_invariance(zeta, ta, tb, spec):
    """Local phase rotations leave every criterion determinant unchanged."""
    s = prepare_tmsv(zeta)
    r = apply_local_rotation(s, LocalRotation(ta, tb))
    assert determinant(build_matrix(r, spec)) == pytest.approx(
        determinant(build_matrix(s, spec)), abs=1e-9 * max(1.0, zeta ** 6))


@SETTINGS
@given(st.integers(0, 2**32 - 1), st.floats(0.3, 1.0), st.floats(0.0, 0.2))
def test_product_states_never_flagged(seed, eta, n_bar):
    """Separable inputs stay non-negative for every small criterion, with or without loss."""
    rng = np.random.default_rng(seed)
    state = product_state(random_density_matrix(rng, 3), random_density_matrix(rng, 3),
                          FockConfig(4, 4))
    noise = NoiseModel(eta, n_bar)
    table = MomentTable(state, noise)
    for spec in SMALL_SPECS:
        m = build_matrix(state, spec, noise, table)
        assert not is_negative(m)


@SETTINGS
@given(st.floats(0.05, 1.5), st.floats(0.05, 1.0))
def test_loss_shrinks_d1_violation(zeta, eta):
    """D_I on a pure-loss TMSV scales as -eta^2 sinh^2(zeta/2)."""
    s = prepare_tmsv(zeta)
    det = determinant(build_matrix(s, CriterionSpec((3, 5)), NoiseModel(eta)))
    assert det == pytest.approx(-eta ** 2 * np.sinh(zeta / 2) ** 2, abs=1e-10)
