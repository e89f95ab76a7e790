"""Dense state-vector simulator for small Majorana registers.

Majorana mode ``2k`` and ``2k + 1`` live on tensor slot ``k`` through a
Jordan-Wigner chain (``c_2k = Z..Z X_k``, ``c_2k+1 = Z..Z Y_k``).  The module
is used only to check circuit algebra: exchange-gate identities, encoded
qubit semantics, the eight-mode charge measurement feedback and the
parity-projection CNOT.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

MAX_MODES = 16
NORM_TOL = 1e-10

_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.diag([1.0 + 0j, -1.0])
_I = np.eye(2, dtype=complex)


def _kron_all(mats):
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def majorana_operators(n_modes: int) -> list[np.ndarray]:
    if n_modes % 2 or n_modes <= 0 or n_modes > MAX_MODES:
        raise ValueError(f"need an even number of modes in [2, {MAX_MODES}], got {n_modes}")
    n_slots = n_modes // 2
    ops = []
    for k in range(n_slots):
        for P in (_X, _Y):
            ops.append(_kron_all([_Z] * k + [P] + [_I] * (n_slots - k - 1)))
    return ops


@dataclass
class DenseState:
    """State vector over ``n_modes / 2`` fermionic slots."""

    n_modes: int
    amplitudes: np.ndarray
    ops: list[np.ndarray] = field(repr=False, default_factory=list)

    def __post_init__(self):
        if not self.ops:
            self.ops = majorana_operators(self.n_modes)
        if self.amplitudes.shape != (2 ** (self.n_modes // 2),):
            raise ValueError("amplitude vector has the wrong dimension")
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalised (norm {norm:.3g})")

    @classmethod
    def vacuum(cls, n_modes: int) -> "DenseState":
        amp = np.zeros(2 ** (n_modes // 2), dtype=complex)
        amp[0] = 1.0
        return cls(n_modes, amp)

    @classmethod
    def random(cls, n_modes: int, rng) -> "DenseState":
        rng = np.random.default_rng(rng)
        dim = 2 ** (n_modes // 2)
        amp = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        return cls(n_modes, amp / np.linalg.norm(amp))

    def copy(self) -> "DenseState":
        return DenseState(self.n_modes, self.amplitudes.copy(), self.ops)

    def _check(self, modes):
        for m in modes:
            if not 0 <= m < self.n_modes:
                raise ValueError(f"mode {m} is not allocated in a {self.n_modes}-mode register")

    def monomial(self, modes) -> np.ndarray:
        """Operator product ``c_m1 c_m2 ...`` in the given order."""
        self._check(modes)
        op = np.eye(len(self.amplitudes), dtype=complex)
        for m in modes:
            op = op @ self.ops[m]
        return op

    def parity_operator(self, modes) -> np.ndarray:
        """Hermitian parity ``(-i)^(n/2) c_1 ... c_n`` with eigenvalues +-1."""
        if len(modes) % 2:
            raise ValueError("parity operators need an even number of modes")
        return (-1j) ** (len(modes) // 2) * self.monomial(modes)

    def expectation(self, op: np.ndarray) -> complex:
        return complex(np.vdot(self.amplitudes, op @ self.amplitudes))

    def apply(self, op: np.ndarray) -> "DenseState":
        amp = op @ self.amplitudes
        return DenseState(self.n_modes, amp / np.linalg.norm(amp), self.ops)


def exchange_operator(st: DenseState, i: int, j: int) -> np.ndarray:
    if i == j:
        raise ValueError("an exchange needs two distinct modes")
    return (np.eye(len(st.amplitudes)) + st.monomial((i, j))) / np.sqrt(2)


def apply_exchange(st: DenseState, i: int, j: int) -> DenseState:
    return st.apply(exchange_operator(st, i, j))


def projector(st: DenseState, modes, mu: int) -> np.ndarray:
    """``(1 + mu P)/2`` with ``P = i c_a c_b`` for a pair and ``P = c_0 c_1 ... c_n-1`` otherwise.

    For ``n = 2 (mod 4)`` modes an extra ``i`` keeps ``P`` Hermitian.
    """
    if len(modes) % 2 or not modes:
        raise ValueError("parity projections act on a nonzero even number of modes")
    P = st.monomial(modes)
    if (len(modes) // 2) % 2:
        P = 1j * P
    return (np.eye(len(st.amplitudes)) + mu * P) / 2


class ImpossibleProjection(ValueError):
    """Raised when the requested outcome has zero probability."""


def apply_parity_projection(st: DenseState, modes, mu: int,
                            tol: float = 1e-12) -> tuple[float, DenseState]:
    proj = projector(st, modes, mu)
    out = proj @ st.amplitudes
    prob = float(np.real(np.vdot(out, out)))
    if prob <= tol:
        raise ImpossibleProjection(f"outcome {mu:+d} on modes {tuple(modes)} has probability {prob:.3g}")
    return prob, DenseState(st.n_modes, out / np.sqrt(prob), st.ops)


def outcome_probability(st: DenseState, modes, mu: int) -> float:
    out = projector(st, modes, mu) @ st.amplitudes
    return float(np.real(np.vdot(out, out)))


def measure(st: DenseState, modes, rng) -> tuple[int, float, DenseState]:
    """Born-rule sample of a parity measurement."""
    p_plus = outcome_probability(st, modes, +1)
    mu = +1 if rng.random() < p_plus else -1
    prob, out = apply_parity_projection(st, modes, mu)
    return mu, prob, out


def project_into(st: DenseState, constraints) -> DenseState:
    """Project onto a list of ``(modes, mu)`` parity constraints and renormalise."""
    for modes, mu in constraints:
        _, st = apply_parity_projection(st, modes, mu)
    return st


# --- encoded qubits -----------------------------------------------------------

def encoded_basis(st_modes: int, qubit_modes=(0, 1, 2, 3), sector: int = +1,
                  rng=None, base: DenseState | None = None) -> tuple[DenseState, DenseState]:
    """Logical ``|0>`` and ``|1>`` of one encoded qubit.

    ``|0>`` is the joint ``+1`` eigenstate of ``i s z`` and of ``s x y z = sector``;
    ``|1> = sigma_x |0>``.
    """
    s, x, y, z = qubit_modes
    # A generic seed state has support in every parity sector.
    st = base if base is not None else DenseState.random(st_modes, 12345 if rng is None else rng)
    zero = project_into(st, [((s, z), +1), ((s, x, y, z), sector)])
    one = zero.apply(encoded_pauli(zero, qubit_modes, "x"))
    return zero, one


def encoded_pauli(st: DenseState, qubit_modes, which: str) -> np.ndarray:
    s, x, y, z = qubit_modes
    pair = {"x": (s, x), "y": (x, z), "z": (s, z)}[which]
    return 1j * st.monomial(pair)


def encoded_gate_matrix(op: np.ndarray, zero: DenseState, one: DenseState) -> np.ndarray:
    basis = [zero.amplitudes, one.amplitudes]
    return np.array([[np.vdot(b, op @ k) for k in basis] for b in basis])


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, tol: float = 1e-10) -> bool:
    idx = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(b[idx]) < tol:
        return bool(np.allclose(a, b, atol=tol))
    phase = a[idx] / b[idx]
    if abs(abs(phase) - 1.0) > tol:
        return False
    return bool(np.allclose(a, phase * b, atol=tol))


def phase_gate_check(tol: float = 1e-10) -> bool:
    """``e^{i pi/4} R_sz`` acts as ``diag(1, i)`` on the encoded qubit."""
    zero, one = encoded_basis(4)
    op = np.exp(1j * np.pi / 4) * exchange_operator(zero, 0, 3)
    return equal_up_to_phase(encoded_gate_matrix(op, zero, one), np.diag([1, 1j]), tol)


def hadamard_check(tol: float = 1e-10) -> bool:
    """``i R_sx^2 R_xz`` acts as the Hadamard on the encoded qubit."""
    zero, one = encoded_basis(4)
    r_sx = exchange_operator(zero, 0, 1)
    r_xz = exchange_operator(zero, 1, 3)
    op = 1j * r_sx @ r_sx @ r_xz
    target = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    return equal_up_to_phase(encoded_gate_matrix(op, zero, one), target, tol)


# --- eight-mode charge measurement -------------------------------------------

TABLE_ROWS = (
    ((1, 1, 1, 1), ()),
    ((-1, -1, 1, 1), (0, 1)),
    ((1, -1, -1, 1), (2, 3)),
    ((1, 1, -1, -1), (4, 5)),
    ((-1, 1, 1, -1), (6, 7)),
    ((-1, 1, -1, 1), (0, 1, 2, 3)),
    ((1, -1, 1, -1), (2, 3, 4, 5)),
    ((-1, -1, -1, -1), (0, 1, 4, 5)),
)

# Conserved operators of the three physical "qubits" inside eight modes.
CONSERVED = ((0, 1), (1, 2), (0, 1, 2, 3), (3, 4), (0, 1, 2, 3, 4, 5), (5, 6))


@dataclass
class FeedbackReport:
    rows_checked: int
    failures: list = field(default_factory=list)
    max_deviation: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.failures


def _ring_modes(n_pp: int = 4):
    """Data modes ``0..2n-1``; ancilla ``a_2k`` at ``2n+2k`` and ``b_2k+1`` at ``2n+2k+1``."""
    data = list(range(2 * n_pp))
    a = {2 * k: 2 * n_pp + 2 * k for k in range(n_pp)}
    b = {2 * k + 1: 2 * n_pp + 2 * k + 1 for k in range(n_pp)}
    return data, a, b


def _hermitian_expectations(st: DenseState, ops) -> np.ndarray:
    return np.array([np.real(st.expectation(st.parity_operator(m))) for m in ops])


def _charge8_pair(k: int):
    """Ancilla pair ``k`` of the ring, created before and read after the projections.

    Pair 0 wraps around and is taken as ``i b_7 a_0`` so that, with every
    pair created at ``+1``, the product of the four readouts is ``+1``.
    """
    _, a, b = _ring_modes(4)
    return (b[7], a[0]) if k == 0 else (a[2 * k], b[2 * k - 1])


def prepare_charge8_input(rng, sector: int) -> DenseState:
    """Random data state of parity ``sector`` on modes 0-7, ancillas in their reference pairs."""
    data, _, _ = _ring_modes(4)
    st = DenseState.random(16, rng)
    # The four pair constraints fix the ancillas, so the state factorises.
    return project_into(st, [(_charge8_pair(k), +1) for k in range(4)] + [(tuple(data), sector)])


def run_charge8_dense(st: DenseState, mus, rng, feedback=None):
    """Run the eight-mode charge measurement with the ancilla readouts forced to ``mus``.

    ``st`` must come from :func:`prepare_charge8_input`.  Returns the final
    state and the four projection outcomes.  ``feedback`` lists the data
    modes of ``U``; by default the linear rule of the frame simulator is used.
    """
    data, a, b = _ring_modes(4)
    pp_out = []
    for k in range(4):
        modes = (a[2 * k], data[2 * k], data[2 * k + 1], b[2 * k + 1])
        mu, _, st = measure(st, modes, rng)
        pp_out.append(mu)
    for k in range(4):
        _, st = apply_parity_projection(st, _charge8_pair(k), mus[k])
    if feedback is None:
        from .circuits import ring_layout
        flips = [1 if m < 0 else 0 for m in mus]
        feedback = ring_layout(4).feedback_modes(flips)
    if feedback:
        st = st.apply(st.monomial(feedback))
    return st, pp_out


# Sign relating the product of the four projection outcomes to Q8 for the
# reference ancilla preparation above.
CHARGE8_SIGN = +1


def verify_feedback_table(n_inputs: int = 20, seed: int = 7, tol: float = 1e-8,
                          use_table: bool = True) -> FeedbackReport:
    """Check every row of the eight-mode feedback table on random inputs.

    Each input is a random 8-mode data state with definite total parity.
    After the circuit and the row's feedback, the six conserved operators
    must keep their input expectations, and the inferred ``Q8`` (product of
    projection outcomes times the fixed ancilla sign) must equal the input
    parity.
    """
    rng = np.random.default_rng(seed)
    report = FeedbackReport(rows_checked=0)
    for row_idx, (mus, table_u) in enumerate(TABLE_ROWS):
        for trial in range(n_inputs):
            sector = 1 if rng.random() < 0.5 else -1
            st = prepare_charge8_input(rng, sector)
            before = _hermitian_expectations(st, CONSERVED)
            fb = list(table_u) if use_table else None
            out, pp_out = run_charge8_dense(st, mus, rng, feedback=fb)
            after = _hermitian_expectations(out, CONSERVED)
            dev = float(np.max(np.abs(after - before)))
            q8 = int(np.prod(pp_out)) * CHARGE8_SIGN
            report.max_deviation = max(report.max_deviation, dev)
            if dev > tol or q8 != sector:
                report.failures.append((row_idx, trial, dev, q8, sector))
        report.rows_checked += 1
    return report


def feedback_equivalence_check(seed: int = 3, tol: float = 1e-8) -> bool:
    """``U`` and ``U Q8`` leave the same state up to a phase within the projected sector."""
    rng = np.random.default_rng(seed)
    data, _, _ = _ring_modes(4)
    for mus, table_u in TABLE_ROWS:
        st = prepare_charge8_input(rng, +1)
        seed_pp = int(rng.integers(1 << 30))
        out_u, _ = run_charge8_dense(st, mus, np.random.default_rng(seed_pp), list(table_u))
        complement = sorted(set(data) ^ set(table_u))
        out_uq, _ = run_charge8_dense(st, mus, np.random.default_rng(seed_pp), complement)
        overlap = abs(np.vdot(out_u.amplitudes, out_uq.amplitudes))
        if abs(overlap - 1.0) > tol:
            return False
    return True


# --- CNOT from parity projections -----------------------------------------------

def _three_qubit_modes():
    return (0, 1, 2, 3), (4, 5, 6, 7), (8, 9, 10, 11)


def encoded_register(amplitudes_ct, rng=None) -> tuple[DenseState, list[np.ndarray]]:
    """Embed a two-qubit state (control, target) with the ancilla in ``|+>``.

    Returns the 12-mode state and the eight basis vectors ``|c t a>``.
    """
    qc, qt, qa = _three_qubit_modes()
    st = DenseState.random(12, 12345)
    st = project_into(st, [((m[0], m[3]), +1) for m in (qc, qt, qa)]
                      + [(m, +1) for m in (qc, qt, qa)])
    basis = []
    for bits in itertools.product((0, 1), repeat=3):
        v = st
        for b, m in zip(bits, (qc, qt, qa)):
            if b:
                v = v.apply(encoded_pauli(v, m, "x"))
        basis.append(v.amplitudes)
    amp = np.asarray(amplitudes_ct, dtype=complex)
    plus = np.array([1, 1]) / np.sqrt(2)
    full = np.kron(amp, plus)
    vec = sum(c * b for c, b in zip(full, basis))
    return DenseState(12, vec / np.linalg.norm(vec)), basis


def cnot_via_pp(st: DenseState, rng, literal_step2: bool = False) -> DenseState:
    """Control, target and ancilla on modes 0-3, 4-7, 8-11; ancilla starts in ``|+>``.

    1. Project ``Z_c Z_a``; on ``-1`` apply ``X_a``.
    2. Project ``X_t X_a``; on ``-1`` apply ``Z_c``.
    3. Measure ``Z_a``; on ``-1`` apply ``X_t X_a``.

    With ``literal_step2`` the second correction is ``Z_c X_a``, which leaves
    an extra ``X_t`` on the output whenever step 2 reads ``-1``.
    """
    qc, qt, qa = _three_qubit_modes()
    sz_c, sz_a = (qc[0], qc[3]), (qa[0], qa[3])
    sx_t, sx_a = (qt[0], qt[1]), (qa[0], qa[1])

    def pauli(state, pair):
        return 1j * state.monomial(pair)

    # Z_c Z_a = -(s_c z_c s_a z_a), so the 4-mode outcome is negated.
    mu, _, st = measure(st, sz_c + sz_a, rng)
    if -mu == -1:
        st = st.apply(pauli(st, sx_a))
    mu, _, st = measure(st, sx_t + sx_a, rng)
    if -mu == -1:
        op = pauli(st, sz_c)
        if literal_step2:
            op = op @ pauli(st, sx_a)
        st = st.apply(op)
    mu, _, st = measure(st, sz_a, rng)
    if mu == -1:
        st = st.apply(pauli(st, sx_t) @ pauli(st, sx_a))
    return st


CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def random_state(dim: int, rng) -> np.ndarray:
    """Haar-like random normalised complex vector."""
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def cnot_fidelity(amplitudes_ct, rng, literal_step2: bool = False) -> float:
    """Fidelity of the projection-based CNOT with the matrix CNOT (ancilla back in ``|0>``).

    The test state is written in the computational basis; ``|+>``/``|->`` of
    the target enter only through the comparison matrix.
    """
    st, basis = encoded_register(amplitudes_ct)
    out = cnot_via_pp(st, rng, literal_step2)
    target = CNOT @ np.asarray(amplitudes_ct, dtype=complex)
    target = target / np.linalg.norm(target)
    expected = sum(c * basis[2 * i] for i, c in enumerate(target))  # ancilla bit 0
    return float(abs(np.vdot(expected, out.amplitudes)) ** 2)


# --- frame cross-check --------------------------------------------------------

def frame_prediction_check(n_sequences: int = 100, n_modes: int = 12, seed: int = 11,
                           tol: float = 1e-9) -> list:
    """Compare dense outcome statistics with frame-tracking predictions.

    A random sequence of 2- and 4-mode parity measurements is run once ideally
    and once with a random monomial error injected at a random point.  In the
    erroneous run the outcome predicted by the frame (ideal outcome flipped
    iff the monomial overlaps the measured set oddly) must have exactly the
    probability the ideal outcome had.  Returns the list of mismatches.
    """
    from .frame import ErrorFrame, frame_flips_parity

    rng = np.random.default_rng(seed)
    mismatches = []
    for seq in range(n_sequences):
        ops = []
        for _ in range(int(rng.integers(4, 10))):
            size = 2 if rng.random() < 0.5 else 4
            ops.append(tuple(int(m) for m in rng.choice(n_modes, size=size, replace=False)))
        err_at = int(rng.integers(0, len(ops)))
        weight = int(rng.integers(1, 4))
        err_modes = tuple(int(m) for m in rng.choice(n_modes, size=weight, replace=False))
        frame = ErrorFrame.of(err_modes)
        ideal = DenseState.random(n_modes, rng)
        noisy = None
        for k, modes in enumerate(ops):
            if k == err_at:
                noisy = ideal.apply(ideal.monomial(err_modes))
            mu, prob, ideal = measure(ideal, modes, rng)
            if noisy is None:
                continue
            flip = frame_flips_parity(frame, modes)
            predicted = mu * (-1 if flip else 1)
            p_noisy = outcome_probability(noisy, modes, predicted)
            if abs(p_noisy - prob) > tol:
                mismatches.append((seq, k, prob, p_noisy))
                break
            _, noisy = apply_parity_projection(noisy, modes, predicted)
    return mismatches
