import numpy as np
import pytest
import sympy

from majoranaft.circuits import (
    CircuitContext,
    ResourceRejected,
    closed_form_distillation_rate,
    distillation_failure_rate,
    distilled_pp_vector,
    effect_distribution,
    effective_pp_entangled,
    effective_pp_full,
    effective_pp_partial,
    enumerate_distillation,
    measure_charge8,
    reduced_weight,
    ring_layout,
    run_forced,
    sample_distilled_pp,
)
from majoranaft.frame import ErrorFrame, NoiseParams


def test_ring_layout_pairs_cross():
    lay = ring_layout(4)
    assert lay.readout_pairs() == [(0, 7), (2, 1), (4, 3), (6, 5)]
    assert lay.creation_pairs() == lay.readout_pairs()
    assert [s for s in lay.pp_slots(1)] == [("anc", 2), ("data", 2), ("data", 3), ("anc", 3)]


def test_feedback_matrix_running_xor():
    lay = ring_layout(4)
    assert lay.feedback_modes([0, 0, 0, 0]) == []
    assert lay.feedback_modes([1, 1, 0, 0]) == [0, 1]
    assert lay.feedback_modes([0, 1, 1, 0]) == [2, 3]
    # odd patterns are first completed on readout 0
    assert lay.feedback_modes([0, 1, 0, 0]) == [0, 1]
    assert lay.feedback_modes([1, 0, 0, 0]) == []


def test_ring_needs_two_projections():
    with pytest.raises(ValueError):
        ring_layout(1)


@pytest.mark.parametrize("circuit", [measure_charge8])
def test_noiseless_charge_measurement_reads_frame_parity(circuit):
    ctx = CircuitContext()
    data = tuple(ctx.fresh_modes(8))
    ctx.frame = ErrorFrame.of([data[2]])
    res = circuit(ctx, data)
    assert res.inferred_flip == 1
    assert res.flags == (0,)
    assert ctx.frame.support == frozenset({data[2]})


@pytest.mark.parametrize("fn,n_flags", [(effective_pp_partial, 1), (effective_pp_full, 3)])
def test_effective_projection_flags(fn, n_flags):
    ctx = CircuitContext()
    res = fn(ctx, tuple(ctx.fresh_modes(4)))
    assert len(res.flags) == n_flags and not any(res.flags)


def test_single_braiding_error_never_passes_undetected_with_wrong_outcome():
    # every single raw-projection braiding error is detected or harmless
    for i in range(4):
        for code in range(5, 11):
            eff = run_forced("full", {("pp", i): code})
            assert eff.detected or eff.category == 0


def test_entangled_projection_moves_data_to_fresh_modes():
    ctx = CircuitContext()
    modes = tuple(ctx.fresh_modes(4))
    ctx.frame = ErrorFrame.of([modes[1]])
    res = effective_pp_entangled(ctx, modes, "raw")
    assert res.inferred_flip == 1
    assert set(res.output_modes).isdisjoint(modes)
    assert ctx.frame.support == frozenset({res.output_modes[1]})


def test_resource_retry_limit():
    # most attempts are rejected at these rates
    raised = 0
    for seed in range(20):
        ctx = CircuitContext(noise=NoiseParams(0.15, 0.3), rng=np.random.default_rng(seed))
        try:
            effective_pp_entangled(ctx, tuple(ctx.fresh_modes(4)), "full", max_attempts=1)
        except ResourceRejected:
            raised += 1
    assert 10 <= raised < 20


def test_reduced_weight():
    assert [reduced_weight(m) for m in (0, 1, 3, 7, 15)] == [0, 1, 2, 1, 0]


def test_enumeration_counts_and_identity():
    poly = enumerate_distillation()
    assert poly.undetected_counts == (1, 0, 40, 64, 208)
    assert poly.harmful_counts == (0, 0, 32, 64, 128)
    num, den, p = closed_form_distillation_rate()
    assert poly.equals(num, den)
    assert sympy.simplify(poly.ratio() - num / den) == 0


def test_enumeration_at_half():
    # observation: the conditional rate is exactly one half at p_b = 1/2
    poly = enumerate_distillation()
    assert poly.exact(sympy.Rational(1, 2)) == sympy.Rational(1, 2)


def test_distilled_vector_matches_enumeration_without_charge_errors():
    v = distilled_pp_vector(NoiseParams(0.0, 0.1))
    assert v.eps_plus_2 == pytest.approx(enumerate_distillation(0.1), rel=1e-12)
    assert v.eps_minus_0 == 0 and v.eps_plus_1 == 0


def test_effect_distribution_is_normalised():
    dist = effect_distribution(NoiseParams(0.01, 0.05))
    assert dist.sum() == pytest.approx(1.0)
    assert np.all(dist >= -1e-15)


def test_failure_rate_near_four_pb():
    assert distillation_failure_rate(NoiseParams(0.0, 1e-3)) / 1e-3 == pytest.approx(4.0, rel=0.01)


def test_sampled_vector_agrees_with_exact():
    noise = NoiseParams(0.01, 0.08)
    exact = distilled_pp_vector(noise).as_array()
    s = sample_distilled_pp(noise, 4000, seed=5)
    err = np.abs(s.vector.as_array() - exact)
    sigma = np.sqrt(exact * (1 - exact) / 4000)
    assert np.all(err <= 5 * sigma + 1e-12)
    assert 0 < s.acceptance < 1


def test_distillation_rounds_guard():
    assert distilled_pp_vector(NoiseParams(0, 0.01), n_d=0).eps_plus_2 == 0.01
    with pytest.raises(ValueError):
        distilled_pp_vector(NoiseParams(0, 0.01), n_d=2)
