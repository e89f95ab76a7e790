import numpy as np
import pytest

from majoranaft.frame import (
    PP_CODE_FLIPS,
    PP_CODE_MASKS,
    PP_CODES,
    ErrorFrame,
    ModeRegistry,
    NoiseParams,
    PPErrorVector,
    apply_pp_code,
    chi_from_vector,
    derive_pp_vector,
    frame_flips_parity,
    reduce_qubit_frame,
    sample_pp,
    twirl_by_group,
    twirl_channel,
    twirl_mask,
)


def test_registry_allocates_disjoint_modes():
    reg = ModeRegistry()
    q = reg.allocate_qubit(0)
    a = reg.allocate_pair()
    assert len(set(q) | set(a)) == 6
    assert reg.qubit_modes(0) == q
    assert a[0] in reg


def test_frame_xor_and_parity():
    f = ErrorFrame.of([1, 2])
    g = f ^ [2, 3]
    assert g.support == frozenset({1, 3})
    assert frame_flips_parity(g, (0, 1, 2, 3)) == 0
    assert frame_flips_parity(g, (0, 1)) == 1
    assert not (f ^ f)


def test_noise_params_validation():
    NoiseParams(0.1, 0.6)
    with pytest.raises(ValueError):
        NoiseParams(0.2, 0.3)
    with pytest.raises(ValueError):
        NoiseParams(-0.1, 0.0)


def test_derived_vector_components():
    v = derive_pp_vector(NoiseParams(0.01, 0.02))
    np.testing.assert_allclose(v.as_array(), [1 - 0.06, 0.01, 0.02, 0.01, 0.01, 0.01])
    assert v.code_probabilities().sum() == pytest.approx(1.0)


def test_vector_rejects_bad_normalisation():
    with pytest.raises(ValueError):
        PPErrorVector(0.5, 0.1, 0.1, 0.0, 0.0, 0.0)


def test_scaled_vector_keeps_normalisation():
    v = derive_pp_vector(NoiseParams(1e-4, 1e-3)).scaled(30)
    assert v.as_array().sum() == pytest.approx(1.0)
    assert v.eps_plus_2 == pytest.approx(3e-2)
    with pytest.raises(ValueError):
        v.scaled(1e3)


def test_code_table_structure():
    assert len(PP_CODES) == 22
    assert PP_CODE_MASKS.shape == (22, 4)
    assert PP_CODE_FLIPS[:11].sum() == 0 and PP_CODE_FLIPS[11:].all()
    weights = PP_CODE_MASKS.sum(axis=1)
    assert list(weights[:11]) == [0, 1, 1, 1, 1, 2, 2, 2, 2, 2, 2]


def test_pp_reported_flip_uses_frame_before_insertion():
    f = ErrorFrame.of([0])
    modes = (0, 1, 2, 3)
    code_flip, g = apply_pp_code(f, modes, 1)  # single insertion on mode 0
    assert code_flip == 0
    assert frame_flips_parity(f, modes) ^ code_flip == 1
    assert g.support == frozenset()
    code_flip, _ = apply_pp_code(f, modes, 11)
    assert frame_flips_parity(f, modes) ^ code_flip == 0


def test_sample_pp_frequencies(rng):
    v = derive_pp_vector(NoiseParams(0.02, 0.1))
    counts = np.zeros(6)
    n = 20000
    for _ in range(n):
        flip, g = sample_pp(ErrorFrame(), (0, 1, 2, 3), v, rng)
        w = len(g.support)
        counts[3 * flip + min(w, 4 - w)] += 1
    se = np.sqrt(v.as_array() * (1 - v.as_array()) / n)
    assert np.all(np.abs(counts / n - v.as_array()) < 5 * se + 1e-12)


@pytest.mark.parametrize("modes,label,y_flip", [
    ((0,), "Y", 1), ((1,), "Z", 1), ((2,), "I", 1), ((3,), "X", 1),
    ((0, 1), "X", 0), ((0, 3), "Z", 0), ((0, 2), "Y", 0), ((0, 1, 2, 3), "I", 0),
])
def test_qubit_frame_reduction(modes, label, y_flip):
    pauli, flip = reduce_qubit_frame(ErrorFrame.of(modes), (0, 1, 2, 3))
    # pairs s,x and s,z carry sigma_x and sigma_z; single modes also change the qubit charge
    expected = {"X": (1, 0), "Z": (0, 1), "Y": (1, 1), "I": (0, 0)}[label]
    assert (pauli.x, pauli.z) == expected
    assert flip == y_flip


def test_twirl_round_trip():
    v = PPErrorVector(0.9, 0.02, 0.05, 0.01, 0.01, 0.01)
    out = twirl_channel(chi_from_vector(v))
    np.testing.assert_allclose(out.as_array(), v.as_array(), atol=1e-12)


def test_twirl_group_average_matches_mask(rng):
    chi = rng.normal(size=(2, 16, 16)) + 1j * rng.normal(size=(2, 16, 16))
    avg = twirl_by_group(chi)
    kept = np.abs(avg) > 1e-12
    assert np.all(twirl_mask()[None] | ~kept)


def test_twirl_rejects_non_trace_preserving():
    chi = chi_from_vector(derive_pp_vector(NoiseParams(0, 0.1))) * 1.5
    with pytest.raises(ValueError):
        twirl_channel(chi)
