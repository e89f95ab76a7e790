"""Majorana error frames, encoded-qubit reduction and the operation noise channels.

A frame records which Majorana modes have been hit by an odd number of
single-mode error factors relative to the ideal circuit.  Global phases and
operator-ordering signs are dropped: every observable the simulator reports
(measurement flips, syndromes, logical parities) depends only on whether an
error anticommutes with a measured operator, which is the overlap parity
with the operator's mode set.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

NORM_TOL = 1e-12

ROLES = ("s", "x", "y", "z")

# Branch codes for a single noisy parity projection.  Code 0 is the ideal
# branch; 1-4 insert one mode; 5-10 insert a pair; 11-21 repeat the same
# insertions with the reported outcome flipped.
SINGLES = tuple((i,) for i in range(4))
PAIRS = tuple(itertools.combinations(range(4), 2))
_INSERTIONS = ((),) + SINGLES + PAIRS
PP_CODES = tuple((0, ins) for ins in _INSERTIONS) + tuple((1, ins) for ins in _INSERTIONS)
PP_CODE_MASKS = np.array(
    [[1 if i in ins else 0 for i in range(4)] for _, ins in PP_CODES], dtype=np.uint8
)
PP_CODE_FLIPS = np.array([flip for flip, _ in PP_CODES], dtype=np.uint8)
# (category index, first code, number of codes) for eps_{+,0..2}, eps_{-,0..2}
PP_CATEGORY_CODES = ((0, 1), (1, 4), (5, 6), (11, 1), (12, 4), (16, 6))


@dataclass
class ModeRegistry:
    """Allocator for Majorana mode indices.

    Modes are always handed out in pairs, matching the physical creation of
    two Majorana modes in a definite parity state.
    """

    next_free: int = 0
    roles: dict[int, tuple[str, int]] = field(default_factory=dict)

    def allocate_pair(self, role: str = "ancilla", owner: int = -1) -> tuple[int, int]:
        a, b = self.next_free, self.next_free + 1
        self.next_free += 2
        self.roles[a] = (role, owner)
        self.roles[b] = (role, owner)
        return a, b

    def allocate_qubit(self, qubit: int) -> tuple[int, int, int, int]:
        """Allocate the four modes ``(s, x, y, z)`` of an encoded qubit."""
        s, x = self.allocate_pair("qubit", qubit)
        y, z = self.allocate_pair("qubit", qubit)
        for mode, role in zip((s, x, y, z), ROLES):
            self.roles[mode] = (f"qubit-{role}", qubit)
        return s, x, y, z

    def qubit_modes(self, qubit: int) -> tuple[int, int, int, int]:
        found = {role: m for m, (role, owner) in self.roles.items()
                 if owner == qubit and role.startswith("qubit-")}
        if len(found) != 4:
            raise KeyError(f"qubit {qubit} is not fully allocated")
        return tuple(found[f"qubit-{r}"] for r in ROLES)  # type: ignore[return-value]

    def __contains__(self, mode: int) -> bool:
        return 0 <= mode < self.next_free


@dataclass(frozen=True)
class ErrorFrame:
    """Set of modes carrying an odd number of error factors."""

    support: frozenset[int] = frozenset()

    @classmethod
    def of(cls, modes: Iterable[int]) -> "ErrorFrame":
        out: set[int] = set()
        for m in modes:
            out ^= {m}
        return cls(frozenset(out))

    def __xor__(self, other: "ErrorFrame | Iterable[int]") -> "ErrorFrame":
        if isinstance(other, ErrorFrame):
            return ErrorFrame(self.support ^ other.support)
        return ErrorFrame(self.support ^ ErrorFrame.of(other).support)

    def __bool__(self) -> bool:
        return bool(self.support)

    def __len__(self) -> int:
        return len(self.support)

    def restricted(self, modes: Iterable[int]) -> "ErrorFrame":
        return ErrorFrame(self.support & frozenset(modes))


@dataclass(frozen=True)
class NoiseParams:
    """Charge-error rate ``p_f`` and braiding-error rate ``p_b``."""

    p_f: float
    p_b: float

    def __post_init__(self):
        if not (0.0 <= self.p_f <= 1.0 and 0.0 <= self.p_b <= 1.0):
            raise ValueError(f"rates must lie in [0, 1], got {self}")
        if 4 * self.p_f + self.p_b > 1.0 + NORM_TOL:
            raise ValueError(f"4*p_f + p_b must not exceed 1, got {4 * self.p_f + self.p_b}")

    @property
    def p_create(self) -> float:
        return self.p_f

    @property
    def p_measure(self) -> float:
        return self.p_f

    def scaled(self, r: float) -> "NoiseParams":
        return NoiseParams(self.p_f * r, self.p_b * r)


@dataclass(frozen=True)
class PPErrorVector:
    """Branch probabilities of a noisy parity projection.

    ``eps_plus_k`` are branches with the correct reported outcome, ``eps_minus_k``
    with the flipped outcome; ``k`` counts the inserted modes (0, 1 or a pair).
    """

    eps_plus_0: float
    eps_plus_1: float
    eps_plus_2: float
    eps_minus_0: float
    eps_minus_1: float
    eps_minus_2: float

    def __post_init__(self):
        arr = self.as_array()
        if np.any(arr < -NORM_TOL):
            raise ValueError(f"negative probability in {self}")
        if abs(arr.sum() - 1.0) > NORM_TOL:
            raise ValueError(f"probabilities sum to {arr.sum()!r}, not 1")

    def as_array(self) -> np.ndarray:
        return np.array([self.eps_plus_0, self.eps_plus_1, self.eps_plus_2,
                         self.eps_minus_0, self.eps_minus_1, self.eps_minus_2])

    @classmethod
    def from_array(cls, arr) -> "PPErrorVector":
        arr = np.clip(np.asarray(arr, dtype=float), 0.0, None)
        return cls(*(float(a) for a in arr))

    def scaled(self, r: float) -> "PPErrorVector":
        """Multiply every error component by ``r`` and renormalise the fidelity."""
        arr = self.as_array().copy()
        arr[1:] *= r
        arr[0] = 1.0 - arr[1:].sum()
        if arr[0] < -NORM_TOL:
            raise ValueError(f"amplification {r} pushes the fidelity below zero")
        return PPErrorVector.from_array(arr)

    def code_probabilities(self) -> np.ndarray:
        """Probability of each of the 22 branch codes."""
        probs = np.zeros(len(PP_CODES))
        for eps, (start, n) in zip(self.as_array(), PP_CATEGORY_CODES):
            probs[start:start + n] = eps / n
        return np.clip(probs, 0.0, None)


@dataclass(frozen=True)
class PauliError:
    qubit: int
    x: int = 0
    z: int = 0

    def __mul__(self, other: "PauliError") -> "PauliError":
        if other.qubit != self.qubit:
            raise ValueError("cannot compose Pauli errors on different qubits")
        return PauliError(self.qubit, self.x ^ other.x, self.z ^ other.z)

    @property
    def label(self) -> str:
        return {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}[(self.x, self.z)]


def derive_pp_vector(noise: NoiseParams) -> PPErrorVector:
    """Raw parity-projection vector: every charge-type component is ``p_f``, braiding is ``p_b``."""
    p_f, p_b = noise.p_f, noise.p_b
    return PPErrorVector(1.0 - 4 * p_f - p_b, p_f, p_b, p_f, p_f, p_f)


def frame_flips_parity(f: ErrorFrame, modes: Iterable[int]) -> int:
    return len(f.support & frozenset(modes)) % 2


def _rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def sample_pp_code(v: PPErrorVector, rng) -> int:
    rng = _rng(rng)
    return int(rng.choice(len(PP_CODES), p=v.code_probabilities()))


def apply_pp_code(f: ErrorFrame, modes, code: int) -> tuple[int, ErrorFrame]:
    flip, ins = PP_CODES[code]
    return flip, f ^ [modes[i] for i in ins]


def sample_pp(f: ErrorFrame, modes, v: PPErrorVector, rng) -> tuple[int, ErrorFrame]:
    """Draw one branch of the noisy projection on ``modes``.

    Returns the reported-outcome flip and the updated frame.  The reported
    parity relative to the ideal circuit is ``frame_flips_parity(f, modes)``
    (taken *before* the insertion) XOR the returned flip.
    """
    if len(set(modes)) != 4:
        raise ValueError("a parity projection acts on four distinct modes")
    return apply_pp_code(f, modes, sample_pp_code(v, rng))


def sample_create(registry: ModeRegistry, noise: NoiseParams, rng) -> tuple[tuple[int, int], int]:
    """Allocate a fresh pair; the bit says whether it was created in the wrong parity.

    A wrong-parity creation is tracked by putting the pair's first mode in the frame.
    """
    pair = registry.allocate_pair()
    return pair, int(_rng(rng).random() < noise.p_create)


def sample_measure(f: ErrorFrame, pair, noise: NoiseParams, rng) -> int:
    """Reported flip of a two-mode parity readout relative to the ideal value."""
    return frame_flips_parity(f, pair) ^ int(_rng(rng).random() < noise.p_measure)


_REDUCE = {0: (1, 1), 1: (0, 1), 2: (0, 0), 3: (1, 0)}  # s->Y, x->Z, y->I, z->X


def reduce_roles(present: Iterable[int]) -> tuple[int, int, int]:
    """Reduce a set of role indices (0..3 for s, x, y, z) to ``(x, z, y_flip)``."""
    x = z = n = 0
    for r in present:
        dx, dz = _REDUCE[r]
        x ^= dx
        z ^= dz
        n ^= 1
    return x, z, n


def reduce_qubit_frame(f: ErrorFrame, qubit_modes, qubit: int = 0) -> tuple[PauliError, int]:
    """Split the frame on one qubit into a Pauli error and a qubit-charge flip.

    Uses ``[sxyz] = 1``, ``[s] = [y][Y]``, ``[x] = [y][Z]`` and ``[z] = [y][X]``.
    """
    present = [i for i, m in enumerate(qubit_modes) if m in f.support]
    x, z, y_flip = reduce_roles(present)
    return PauliError(qubit, x, z), y_flip


# --- twirling ---------------------------------------------------------------

def _majorana_matrices(n: int) -> list[np.ndarray]:
    X = np.array([[0, 1], [1, 0]], dtype=complex)
    Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
    Z = np.diag([1.0 + 0j, -1.0])
    I = np.eye(2, dtype=complex)
    ops = []
    for k in range(n // 2):
        for P in (X, Y):
            mats = [Z] * k + [P] + [I] * (n // 2 - k - 1)
            op = mats[0]
            for m in mats[1:]:
                op = np.kron(op, m)
            ops.append(op)
    return ops


_C4 = _majorana_matrices(4)
MONOMIALS4 = []
for _u in range(16):
    _op = np.eye(4, dtype=complex)
    for _i in range(4):
        if (_u >> _i) & 1:
            _op = _op @ _C4[_i]
    MONOMIALS4.append(_op)
_Q4 = MONOMIALS4[15]


def twirl_group_signs(measured_overlaps=((0, 1), (0, 3))) -> np.ndarray:
    """Signs ``s_g(u)`` picked up by monomial ``c^u`` under each of the 8 randomisations.

    The three known charges are the four measured modes themselves and two
    neighbouring octagon charges, which share the mode pairs given in
    ``measured_overlaps`` with the measured set.
    """
    funcs = [0b1111] + [sum(1 << i for i in pair) for pair in measured_overlaps]
    signs = np.empty((8, 16))
    for g in range(8):
        for u in range(16):
            par = 0
            for bit, mask in enumerate(funcs):
                if (g >> bit) & 1:
                    par ^= bin(u & mask).count("1") & 1
            signs[g, u] = -1.0 if par else 1.0
    return signs


def twirl_mask() -> np.ndarray:
    """Cross terms ``c^u rho c^v`` that survive: ``u ^ v`` is empty or all four modes."""
    u = np.arange(16)
    x = u[:, None] ^ u[None, :]
    return (x == 0) | (x == 15)


def _pair_phase(u: int, nu: int) -> complex:
    """Scalar ``lam`` with ``c^(u^15) pi_nu = lam c^u pi_nu``."""
    proj = (np.eye(4) + nu * _Q4) / 2
    a = MONOMIALS4[u] @ proj
    b = MONOMIALS4[u ^ 15] @ proj
    return complex(np.trace(a.conj().T @ b) / np.trace(a.conj().T @ a))


def twirl_channel(chi, tol: float = 1e-9) -> PPErrorVector:
    """Reduce a general noisy projection to the symmetric six-component form.

    Args:
        chi: complex array of shape ``(2, 16, 16)``.  ``chi[m, u, v]`` is the
            coefficient of ``c^u rho (c^v)^dagger`` in the (unnormalised)
            operation that reports outcome ``mu = +1`` (``m = 0``) or
            ``mu = -1`` (``m = 1``); ``u`` and ``v`` are 4-bit masks over the
            measured modes.
        tol: trace-preservation tolerance.

    Cross terms that acquire a random sign under the charge randomisations
    are removed, coherences between the two parity sectors are discarded,
    and the result is averaged over the true parity (outcome symmetrisation)
    and implicitly over mode permutations by lumping singles and pairs.
    """
    chi = np.asarray(chi, dtype=complex)
    if chi.shape != (2, 16, 16):
        raise ValueError("chi must have shape (2, 16, 16)")
    chi = chi * twirl_mask()[None]
    eps = np.zeros(6)
    for nu_idx, nu in enumerate((1, -1)):
        total = 0.0
        for m, mu in enumerate((1, -1)):
            for u in range(16):
                if u > (u ^ 15):
                    continue
                lam = _pair_phase(u, nu)
                ub = u ^ 15
                w = (chi[m, u, u] + chi[m, ub, ub] * abs(lam) ** 2
                     + chi[m, u, ub] * np.conj(lam) + chi[m, ub, u] * lam)
                w = float(np.real(w))
                weight = min(bin(u).count("1"), 4 - bin(u).count("1"))
                k = {0: 0, 1: 1, 2: 2}[weight]
                correct = mu == nu
                eps[(0 if correct else 3) + k] += w / 2
                total += w
        if abs(total - 1.0) > tol:
            raise ValueError(f"channel is not trace preserving (sector {nu:+d} sums to {total:.6g})")
    return PPErrorVector.from_array(eps / eps.sum())


def chi_from_vector(v: PPErrorVector) -> np.ndarray:
    """Process coefficients of the symmetric model, for round trips through ``twirl_channel``."""
    chi = np.zeros((2, 16, 16), dtype=complex)
    eps = v.as_array()
    groups = {0: [0], 1: [1 << i for i in range(4)],
              2: [(1 << i) | (1 << j) for i, j in PAIRS]}
    for m, mu in enumerate((1, -1)):
        for sign_idx, proj_sign in enumerate((mu, -mu)):
            for k in range(3):
                weight = eps[3 * sign_idx + k] / len(groups[k])
                for u in groups[k]:
                    # Kraus operator c^u pi = c^u (1 + s Q)/2 = (c^u + s c^u Q)/2
                    op_u = MONOMIALS4[u]
                    op_uq = op_u @ _Q4
                    # express c^u Q as phase * c^(u^15)
                    ub = u ^ 15
                    phase = np.trace(MONOMIALS4[ub].conj().T @ op_uq) / 4
                    alpha = {u: 0.5, ub: 0.5 * proj_sign * phase}
                    for a, ca in alpha.items():
                        for b, cb in alpha.items():
                            chi[m, a, b] += weight * ca * np.conj(cb)
    return chi


def twirl_by_group(chi, measured_overlaps=((0, 1), (0, 3))) -> np.ndarray:
    """Average ``chi`` explicitly over the 8-element randomisation group."""
    signs = twirl_group_signs(measured_overlaps)
    chi = np.asarray(chi, dtype=complex)
    out = np.zeros_like(chi)
    for g in range(8):
        s = signs[g]
        out += chi * (s[:, None] * s[None, :])[None]
    return out / 8
