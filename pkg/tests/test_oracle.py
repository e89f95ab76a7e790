import numpy as np
import pytest

from majoranaft import oracle
from majoranaft.oracle import (
    DenseState,
    ImpossibleProjection,
    apply_exchange,
    apply_parity_projection,
    exchange_operator,
    outcome_probability,
    projector,
)


def test_majorana_algebra():
    ops = oracle.majorana_operators(6)
    for i, a in enumerate(ops):
        for j, b in enumerate(ops):
            anti = a @ b + b @ a
            expected = 2 * np.eye(len(a)) if i == j else 0 * a
            np.testing.assert_allclose(anti, expected, atol=1e-12)


def test_exchange_is_unitary_and_squares_to_pair_operator(rng):
    st = DenseState.random(4, rng)
    u = exchange_operator(st, 0, 1)
    np.testing.assert_allclose(u @ u.conj().T, np.eye(4), atol=1e-12)
    np.testing.assert_allclose(u @ u, st.monomial((0, 1)), atol=1e-12)
    out = apply_exchange(st, 0, 1)
    assert np.linalg.norm(out.amplitudes) == pytest.approx(1.0)


def test_exchange_rejects_equal_modes(rng):
    with pytest.raises(ValueError):
        exchange_operator(DenseState.random(4, rng), 1, 1)


@pytest.mark.parametrize("modes", [(0, 1), (0, 1, 2, 3), (0, 2, 4, 5), (0, 1, 2, 3, 4, 5)])
def test_projectors_are_complementary(modes, rng):
    st = DenseState.random(8, rng)
    p, m = projector(st, modes, +1), projector(st, modes, -1)
    np.testing.assert_allclose(p @ p, p, atol=1e-12)
    np.testing.assert_allclose(p.conj().T, p, atol=1e-12)
    np.testing.assert_allclose(p + m, np.eye(len(p)), atol=1e-12)
    assert outcome_probability(st, modes, 1) + outcome_probability(st, modes, -1) == pytest.approx(1.0)


def test_odd_mode_count_rejected(rng):
    st = DenseState.random(4, rng)
    with pytest.raises(ValueError):
        projector(st, (0, 1, 2), 1)
    with pytest.raises(ValueError):
        st.monomial((7,))


def test_impossible_projection_raises(rng):
    st = DenseState.random(4, rng)
    _, st = apply_parity_projection(st, (0, 1), +1)
    with pytest.raises(ImpossibleProjection):
        apply_parity_projection(st, (0, 1), -1)


def test_feedback_table_rows_conserve_charges():
    report = oracle.verify_feedback_table(n_inputs=5)
    assert report.rows_checked == 8
    assert report.ok, report.failures[:3]
    assert report.max_deviation < 1e-8


def test_linear_feedback_rule_matches_table():
    report = oracle.verify_feedback_table(n_inputs=3, use_table=False)
    assert report.ok


def test_feedback_is_defined_up_to_total_parity():
    assert oracle.feedback_equivalence_check()


def test_clifford_identities():
    assert oracle.phase_gate_check()
    assert oracle.hadamard_check()


def test_cnot_matches_matrix(rng):
    for _ in range(5):
        amp = oracle.random_state(4, rng)
        assert oracle.cnot_fidelity(amp, rng) == pytest.approx(1.0, abs=1e-8)


def test_literal_second_correction_fails_some_branch(rng):
    fids = [oracle.cnot_fidelity(oracle.random_state(4, rng), rng, literal_step2=True) for _ in range(10)]
    assert min(fids) < 0.99


def test_frame_tracking_predicts_outcomes():
    assert oracle.frame_prediction_check(n_sequences=15) == []
