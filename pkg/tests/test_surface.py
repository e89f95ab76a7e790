import json

import numpy as np
import pytest

from majoranaft.frame import NoiseParams, derive_pp_vector
from majoranaft.surface import (
    BatchFrameSimulator,
    ForcedErrors,
    RandomErrors,
    build_lattice,
    build_schedule,
    charge_defects,
    logical_failure,
    pauli_bits,
    run_round,
    simulate,
    stabiliser_records,
)

S, X, Y, Z = range(4)
QUIET = NoiseParams(0.0, 0.0)


def noiseless(lat, frames):
    src = RandomErrors(derive_pp_vector(QUIET), QUIET, np.random.default_rng(0))
    sim = BatchFrameSimulator(lat, src, len(frames))
    sim.frame[:] = frames
    return sim


@pytest.fixture(scope="module")
def lat3():
    return build_lattice(3)


@pytest.fixture(scope="module")
def lat5():
    return build_lattice(5)


@pytest.mark.parametrize("d", [1, 2, 4])
def test_rejects_bad_sizes(d):
    with pytest.raises(ValueError):
        build_lattice(d)


def test_counts(lat3):
    assert lat3.n_qubits == 18
    assert lat3.n_stabilisers == 9
    assert lat3.n_modes == 4 * 18 + 16 * 9
    assert lat3.x_data_modes.shape == (9, 8)


@pytest.mark.parametrize("d", [3, 5])
def test_lattice_invariants(d):
    lat = build_lattice(d)
    hx, hz = lat.check_matrix("X"), lat.check_matrix("Z")
    assert np.all(hx.sum(axis=0) == 2) and np.all(hz.sum(axis=0) == 2)
    assert np.all(hx.sum(axis=1) == 4) and np.all(hz.sum(axis=1) == 4)
    # sigma_x and sigma_z stabilisers commute; the product of all stabilisers of one kind is trivial
    assert not ((hx.astype(int) @ hz.T) % 2).any()
    assert not (hx.sum(axis=0) % 2).any() and not (hz.sum(axis=0) % 2).any()
    # every data mode appears in exactly one octagon of each kind
    for data in (lat.x_data_modes, lat.z_data_modes):
        assert len(np.unique(data)) == data.size
    # logical operators: Z-bar commutes with X stabilisers, X-bar with Z stabilisers, and they anticommute
    zbar = np.zeros(lat.n_qubits, dtype=int)
    zbar[lat.zbar_qubits] = 1
    xbar = np.zeros(lat.n_qubits, dtype=int)
    xbar[lat.xbar_qubits] = 1
    assert not ((hx @ zbar) % 2).any()
    assert not ((hz @ xbar) % 2).any()
    assert (zbar @ xbar) % 2 == 1


def test_stabiliser_mode_supports_commute(lat3):
    sx, sz = lat3.stabiliser_support("X"), lat3.stabiliser_support("Z")
    for a in sx:
        for b in sz:
            assert len(set(a) & set(b)) % 2 == 0


def test_octagon_pairs_are_pauli_operators(lat3):
    # each octagon lends the s,x / y,z pair (sigma_x) or s,z / x,y pair (sigma_z) of every neighbour
    qm = lat3.qubit_modes
    for o, nb in enumerate(lat3.x_neighbours):
        pairs = lat3.x_data_modes[o].reshape(4, 2)
        for q, pair in zip(nb, pairs):
            assert set(pair) in ({qm[q, S], qm[q, X]}, {qm[q, Y], qm[q, Z]})


def test_noiseless_round_is_quiet(lat3):
    rec = simulate(lat3, 2, 4, QUIET, rng=0)
    sx, sz = stabiliser_records(lat3, rec)
    assert not rec.qubit_charges.any() and not rec.x_flags.any() and not rec.z_flags.any()
    assert not sx.any() and not sz.any()
    assert not rec.final_frame.any()


def test_sigma_x_flips_two_z_stabilisers(lat5):
    q = 7
    frame = np.zeros((1, lat5.n_modes), dtype=np.uint8)
    frame[0, lat5.qubit_modes[q, [S, X]]] = 1
    rec = noiseless(lat5, frame).run(1)
    sx, sz = stabiliser_records(lat5, rec)
    assert not sx.any()
    assert set(np.flatnonzero(sz[0, 0])) == set(np.flatnonzero(lat5.check_matrix("Z")[:, q]))
    assert not rec.qubit_charges.any()


def test_single_mode_flips_qubit_charge(lat5):
    q = 11
    frame = np.zeros((1, lat5.n_modes), dtype=np.uint8)
    frame[0, lat5.qubit_modes[q, Y]] = 1
    rec = noiseless(lat5, frame).run(1)
    assert np.flatnonzero(rec.qubit_charges[0, 0]).tolist() == [q]


def test_exhaustive_single_errors_match_anticommutation(lat3):
    qm = lat3.qubit_modes
    frames = []
    for q in range(lat3.n_qubits):
        for r in range(4):
            frames.append([qm[q, r]])
        for a in range(4):
            for b in range(a + 1, 4):
                frames.append([qm[q, a], qm[q, b]])
    F = np.zeros((len(frames), lat3.n_modes), dtype=np.uint8)
    for i, modes in enumerate(frames):
        F[i, modes] = 1
    rec = noiseless(lat3, F).run(1)
    sx, sz = stabiliser_records(lat3, rec)
    exp_x = F[:, lat3.stabiliser_support("X")].sum(axis=2) % 2
    exp_z = F[:, lat3.stabiliser_support("Z")].sum(axis=2) % 2
    exp_q = F[:, qm].sum(axis=2) % 2
    np.testing.assert_array_equal(sx[:, 0], exp_x)
    np.testing.assert_array_equal(sz[:, 0], exp_z)
    np.testing.assert_array_equal(rec.qubit_charges[:, 0], exp_q)
    np.testing.assert_array_equal(rec.qubit_charges[:, 1], exp_q)
    assert not rec.x_flags.any() and not rec.z_flags.any()


def test_round_idempotence(lat3):
    F = np.zeros((3, lat3.n_modes), dtype=np.uint8)
    F[1, lat3.qubit_modes[2, [S, Z]]] = 1
    F[2, lat3.qubit_modes[5, [X]]] = 1
    rec = noiseless(lat3, F).run(2)
    sx, sz = stabiliser_records(lat3, rec)
    np.testing.assert_array_equal(sx[:, 0], sx[:, 1])
    np.testing.assert_array_equal(sz[:, 0], sz[:, 1])


def test_braiding_errors_never_misreport_unflagged(lat3):
    # every pair insertion inside an octagon ring leaves the outcome right or raises a flag
    mech = []
    for g in ("xp", "zp"):
        for loc in range(4 * lat3.n_stabilisers):
            for code in range(5, 11):
                mech.append((len(mech), 0, g, loc, code))
    sim = BatchFrameSimulator(lat3, ForcedErrors(mech), len(mech))
    rec = sim.run(1)
    # a residual data error may still show up in the other ring, so compare each ring's own report
    in_x = np.array([m[2] == "xp" for m in mech])
    bad_x = (rec.x_outcomes[:, 0] == 1) & (rec.x_flags[:, 0] == 0)
    bad_z = (rec.z_outcomes[:, 0] == 1) & (rec.z_flags[:, 0] == 0)
    assert not bad_x[in_x].any() and not bad_z[~in_x].any()


def test_charge_defects_are_differences(lat3):
    rec = simulate(lat3, 3, 50, NoiseParams(0.01, 0.01), rng=3)
    q = rec.qubit_charges
    cd = charge_defects(rec)
    np.testing.assert_array_equal(np.bitwise_xor.accumulate(cd, axis=1), q)


def test_run_round_single_frame(lat3):
    frame = np.zeros(lat3.n_modes, dtype=np.uint8)
    rec, out = run_round(lat3, frame, QUIET, rng=0)
    assert rec.x_outcomes.shape == (1, 1, 9)
    assert not out.any()


def test_logical_failure(lat5):
    n = lat5.n_qubits
    zero = np.zeros((1, n), dtype=np.uint8)
    assert logical_failure(lat5, zero, zero) == (0, 0)
    stab = lat5.check_matrix("X")[[3]]
    assert logical_failure(lat5, stab, zero) == (0, 0)
    # sigma_x along X-bar's column crosses Z-bar once
    cyc = np.zeros((1, n), dtype=np.uint8)
    cyc[0, lat5.xbar_qubits] = 1
    xf, zf = logical_failure(lat5, cyc, zero)
    assert (int(xf[0]), int(zf[0])) == (1, 0)
    cyc = np.zeros((1, n), dtype=np.uint8)
    cyc[0, lat5.zbar_qubits] = 1
    xf, zf = logical_failure(lat5, zero, cyc)
    assert (int(xf[0]), int(zf[0])) == (0, 1)
    single = np.zeros((1, n), dtype=np.uint8)
    single[0, 0] = 1
    with pytest.raises(ValueError):
        logical_failure(lat5, single, zero)


def test_pauli_bits_of_pairs(lat3):
    F = np.zeros((2, lat3.n_modes), dtype=np.uint8)
    F[0, lat3.qubit_modes[4, [S, X]]] = 1
    F[1, lat3.qubit_modes[4, [S, Z]]] = 1
    xb, zb = pauli_bits(lat3, F)
    assert xb[0, 4] == 1 and zb[0, 4] == 0
    assert xb[1, 4] == 0 and zb[1, 4] == 1


def test_schedule():
    assert build_schedule("dense") == 4
    assert build_schedule("sparse") == 6
    assert build_schedule("sparse", n_d=1) == 24
    with pytest.raises(ValueError):
        build_schedule("ring")


def test_json_dumps(lat3):
    rec = simulate(lat3, 1, 2, QUIET, rng=0)
    assert json.loads(rec.to_json())["x_flags"] == [[[0] * 9]] * 2
    assert json.loads(lat3.to_json())["d"] == 3
