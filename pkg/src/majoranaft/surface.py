"""Toric surface code of four-mode Majorana qubits and its stabiliser schedule.

Layout on a ``2d x 2d`` periodic grid: X octagons sit at ``(2i, 2j)``, Z
octagons at ``(2i+1, 2j+1)`` and qubits on the remaining sites, so there are
``2 d^2`` qubits, ``d^2`` X and ``d^2`` Z stabilisers.  Each qubit owns modes
``(s, x, y, z)``; each octagon owns eight ancilla slots reused every round.

One round of stabiliser measurement:

1. qubit-charge projection on every qubit,
2. eight-mode charge ring on every X octagon,
3. qubit-charge projection again,
4. eight-mode charge ring on every Z octagon.

``S_X = Q_oct Q_e Q_s`` uses the step-1 qubit charges and
``S_Z = Q_oct Q_n Q_e`` the step-3 ones.

The simulator tracks a batch of error frames (``uint8`` arrays of shape
``(shots, modes)``).  All operations of one step act on disjoint modes, so
every step is a handful of fancy-indexed XORs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .circuits import ring_layout
from .frame import PP_CODE_FLIPS, PP_CODE_MASKS, NoiseParams, PPErrorVector, derive_pp_vector

S, X, Y, Z = range(4)
NEIGHBOURS = {"n": (-1, 0), "e": (0, 1), "s": (1, 0), "w": (0, -1)}
# Neighbour order around each octagon and the two modes each neighbour lends.
X_OCTAGON_ORDER = (("w", (S, X)), ("n", (S, X)), ("e", (Y, Z)), ("s", (Y, Z)))
Z_OCTAGON_ORDER = (("s", (S, Z)), ("w", (S, Z)), ("n", (X, Y)), ("e", (X, Y)))
RING = ring_layout(4)
READOUT_PAIRS = np.array(RING.readout_pairs())  # crossed pairs, also used for creation
PP_ANC = np.array([[2 * k, 2 * k + 1] for k in range(4)])
FEEDBACK = RING.feedback_matrix


@dataclass
class CodeLattice:
    """Periodic ``d x d`` Majorana surface code.

    Attributes:
        d: lattice size.
        qubit_sites: ``(n_qubits, 2)`` grid coordinates.
        qubit_modes: ``(n_qubits, 4)`` mode indices of ``s, x, y, z``.
        x_neighbours, z_neighbours: ``(d^2, 4)`` qubit ids in octagon order.
        x_data_modes, z_data_modes: ``(d^2, 8)`` octagon modes ``c_0..c_7``.
        x_anc_modes, z_anc_modes: ``(d^2, 8)`` ancilla slots.
    """

    d: int
    periodic: bool
    qubit_sites: np.ndarray
    qubit_modes: np.ndarray
    x_sites: np.ndarray
    z_sites: np.ndarray
    x_neighbours: np.ndarray
    z_neighbours: np.ndarray
    x_compass: dict
    z_compass: dict
    x_data_modes: np.ndarray
    z_data_modes: np.ndarray
    x_anc_modes: np.ndarray
    z_anc_modes: np.ndarray
    n_modes: int
    zbar_qubits: np.ndarray
    xbar_qubits: np.ndarray
    site_index: dict = field(repr=False, default_factory=dict)

    @property
    def n_qubits(self) -> int:
        return len(self.qubit_sites)

    @property
    def n_stabilisers(self) -> int:
        return self.d * self.d

    def stabiliser_support(self, kind: str) -> np.ndarray:
        """``(d^2, 8)`` modes of the stabiliser operators (``s,x`` for X and ``s,z`` for Z per neighbour)."""
        roles = (S, X) if kind == "X" else (S, Z)
        nb = self.x_neighbours if kind == "X" else self.z_neighbours
        return self.qubit_modes[nb][:, :, list(roles)].reshape(len(nb), 8)

    def check_matrix(self, kind: str) -> np.ndarray:
        """``(d^2, n_qubits)`` incidence of stabilisers on qubits."""
        nb = self.x_neighbours if kind == "X" else self.z_neighbours
        H = np.zeros((len(nb), self.n_qubits), dtype=np.uint8)
        for s, qs in enumerate(nb):
            H[s, qs] = 1
        return H

    def to_json(self) -> str:
        return json.dumps({
            "d": self.d,
            "periodic": self.periodic,
            "qubit_sites": self.qubit_sites.tolist(),
            "qubit_modes": self.qubit_modes.tolist(),
            "x_neighbours": self.x_neighbours.tolist(),
            "z_neighbours": self.z_neighbours.tolist(),
            "zbar_qubits": self.zbar_qubits.tolist(),
            "xbar_qubits": self.xbar_qubits.tolist(),
        })


def build_lattice(d: int, periodic: bool = True) -> CodeLattice:
    if d < 3 or d % 2 == 0:
        raise ValueError(f"lattice size must be odd and at least 3, got {d}")
    if not periodic:
        raise NotImplementedError("only periodic boundaries are supported")
    size = 2 * d
    qubit_sites = [(r, c) for r in range(size) for c in range(size) if (r + c) % 2 == 1]
    site_index = {site: i for i, site in enumerate(qubit_sites)}
    n_q = len(qubit_sites)
    qubit_modes = np.arange(4 * n_q).reshape(n_q, 4)
    x_sites = [(2 * i, 2 * j) for i in range(d) for j in range(d)]
    z_sites = [(2 * i + 1, 2 * j + 1) for i in range(d) for j in range(d)]

    def neighbours(site, order):
        r, c = site
        out, compass = [], {}
        for name, _ in order:
            dr, dc = NEIGHBOURS[name]
            q = site_index[((r + dr) % size, (c + dc) % size)]
            out.append(q)
            compass[name] = q
        return out, compass

    def octagon(sites, order):
        nbs, compasses, data = [], [], []
        for site in sites:
            nb, compass = neighbours(site, order)
            nbs.append(nb)
            compasses.append(compass)
            data.append([qubit_modes[q, role] for q, (_, roles) in zip(nb, order) for role in roles])
        return np.array(nbs), compasses, np.array(data)

    x_nb, x_comp, x_data = octagon(x_sites, X_OCTAGON_ORDER)
    z_nb, z_comp, z_data = octagon(z_sites, Z_OCTAGON_ORDER)
    base = 4 * n_q
    n_st = d * d
    x_anc = base + np.arange(8 * n_st).reshape(n_st, 8)
    z_anc = base + 8 * n_st + np.arange(8 * n_st).reshape(n_st, 8)
    compass_arr = lambda comps: {k: np.array([c[k] for c in comps]) for k in NEIGHBOURS}
    # Z-bar: sigma_z on the horizontal qubits of row 0; X-bar: sigma_x down column 1.
    zbar = np.array([site_index[(0, 2 * j + 1)] for j in range(d)])
    xbar = np.array([site_index[(2 * i, 1)] for i in range(d)])
    return CodeLattice(
        d=d, periodic=True,
        qubit_sites=np.array(qubit_sites), qubit_modes=qubit_modes,
        x_sites=np.array(x_sites), z_sites=np.array(z_sites),
        x_neighbours=x_nb, z_neighbours=z_nb,
        x_compass=compass_arr(x_comp), z_compass=compass_arr(z_comp),
        x_data_modes=x_data, z_data_modes=z_data,
        x_anc_modes=x_anc, z_anc_modes=z_anc,
        n_modes=base + 16 * n_st,
        zbar_qubits=zbar, xbar_qubits=xbar, site_index=site_index,
    )


# --- error sources ------------------------------------------------------------------

# Location groups of one round: name -> (operation kind, per-stabiliser arity or None for qubits)
LOCATION_GROUPS = (
    ("q1", "pp"), ("xc", "create"), ("xp", "pp"), ("xm", "measure"),
    ("q3", "pp"), ("zc", "create"), ("zp", "pp"), ("zm", "measure"),
)


class RandomErrors:
    """Independent noise draws for every location."""

    def __init__(self, pp_vector: PPErrorVector, noise: NoiseParams, rng: np.random.Generator):
        self.cum = np.cumsum(pp_vector.code_probabilities())
        self.cum[-1] = 1.0
        self.noise = noise
        self.rng = rng

    def pp_codes(self, tag, shape) -> np.ndarray:
        u = self.rng.random(shape)
        return np.searchsorted(self.cum, u, side="right").astype(np.intp)

    def bits(self, tag, shape) -> np.ndarray:
        p = self.noise.p_create if tag[0][1] == "c" else self.noise.p_measure
        if p == 0.0:
            return np.zeros(shape, dtype=np.uint8)
        return (self.rng.random(shape) < p).astype(np.uint8)


class ForcedErrors:
    """Exactly the listed branches: ``[(row, round, group, flat_location, value), ...]``."""

    def __init__(self, mechanisms):
        self.table: dict = {}
        for row, rnd, group, loc, value in mechanisms:
            self.table.setdefault((rnd, group), []).append((row, loc, value))

    def _fill(self, tag, shape, dtype):
        out = np.zeros(shape, dtype=dtype)
        flat = out.reshape(shape[0], -1)
        for row, loc, value in self.table.get((tag[1], tag[0]), ()):
            flat[row, loc] = value
        return out

    def pp_codes(self, tag, shape) -> np.ndarray:
        return self._fill(tag, shape, np.intp)

    def bits(self, tag, shape) -> np.ndarray:
        return self._fill(tag, shape, np.uint8)


# --- simulator --------------------------------------------------------------------------

@dataclass
class SyndromeRecord:
    """Raw flips relative to the noiseless run for a batch of shots.

    Attributes:
        qubit_charges: ``(B, 2T+1, n_qubits)``; entry ``2t`` is step 1 and
            ``2t+1`` step 3 of round ``t``; entry ``2T`` is a perfect final readout.
        x_outcomes, x_flags, z_outcomes, z_flags: ``(B, T, d^2)`` octagon
            charge flips and ancilla-check flags.
        final_frame: ``(B, n_modes)`` error frame after the last round.
    """

    qubit_charges: np.ndarray
    x_outcomes: np.ndarray
    x_flags: np.ndarray
    z_outcomes: np.ndarray
    z_flags: np.ndarray
    final_frame: np.ndarray

    @property
    def rounds(self) -> int:
        return self.x_outcomes.shape[1]

    def to_json(self) -> str:
        return json.dumps({k: getattr(self, k).tolist() for k in
                           ("qubit_charges", "x_outcomes", "x_flags", "z_outcomes", "z_flags")})


class BatchFrameSimulator:
    """Runs rounds of the stabiliser schedule on a batch of error frames."""

    def __init__(self, lattice: CodeLattice, source, batch: int):
        self.lat = lattice
        self.source = source
        self.batch = batch
        self.frame = np.zeros((batch, lattice.n_modes), dtype=np.uint8)
        lat = lattice
        self._qubit_pp = lat.qubit_modes
        self._rings = {}
        for kind, data, anc in (("x", lat.x_data_modes, lat.x_anc_modes),
                                ("z", lat.z_data_modes, lat.z_anc_modes)):
            pp = np.empty((len(data), 4, 4), dtype=np.intp)
            for k in range(4):
                pp[:, k] = np.stack([anc[:, 2 * k], data[:, 2 * k], data[:, 2 * k + 1], anc[:, 2 * k + 1]], axis=1)
            pairs = anc[:, READOUT_PAIRS]  # (n_oct, 4, 2)
            self._rings[kind] = (data, anc, pp, pairs)

    def qubit_step(self, tag) -> np.ndarray:
        modes = self._qubit_pp
        codes = self.source.pp_codes(tag, (self.batch, len(modes)))
        flips = (self.frame[:, modes].sum(axis=2) & 1).astype(np.uint8) ^ PP_CODE_FLIPS[codes]
        self.frame[:, modes] ^= PP_CODE_MASKS[codes]
        return flips

    def octagon_step(self, kind: str, t: int) -> tuple[np.ndarray, np.ndarray]:
        data, anc, pp, pairs = self._rings[kind]
        B, n_oct = self.batch, len(data)
        create = self.source.bits((kind + "c", t), (B, n_oct, 4))
        self.frame[:, pairs[:, :, 0]] ^= create
        codes = self.source.pp_codes((kind + "p", t), (B, n_oct, 4))
        pp_flips = (self.frame[:, pp].sum(axis=3) & 1).astype(np.uint8) ^ PP_CODE_FLIPS[codes]
        self.frame[:, pp] ^= PP_CODE_MASKS[codes]
        readout_err = self.source.bits((kind + "m", t), (B, n_oct, 4))
        readout = (self.frame[:, pairs].sum(axis=3) & 1).astype(np.uint8) ^ readout_err
        self.frame[:, anc] = 0
        feedback = (readout.astype(np.int32) @ FEEDBACK) & 1
        self.frame[:, data] ^= feedback.astype(np.uint8)
        outcome = np.bitwise_xor.reduce(pp_flips, axis=2)
        flag = np.bitwise_xor.reduce(readout, axis=2)
        return outcome, flag

    def run(self, rounds: int) -> SyndromeRecord:
        B, T, lat = self.batch, rounds, self.lat
        n_st = lat.n_stabilisers
        q = np.zeros((B, 2 * T + 1, lat.n_qubits), dtype=np.uint8)
        ox, fx, oz, fz = (np.zeros((B, T, n_st), dtype=np.uint8) for _ in range(4))
        for t in range(T):
            q[:, 2 * t] = self.qubit_step(("q1", t))
            ox[:, t], fx[:, t] = self.octagon_step("x", t)
            q[:, 2 * t + 1] = self.qubit_step(("q3", t))
            oz[:, t], fz[:, t] = self.octagon_step("z", t)
        q[:, 2 * T] = self.frame[:, lat.qubit_modes].sum(axis=2) & 1
        return SyndromeRecord(q, ox, fx, oz, fz, self.frame.copy())


# --- derived quantities ----------------------------------------------------------

def stabiliser_records(lat: CodeLattice, rec: SyndromeRecord) -> tuple[np.ndarray, np.ndarray]:
    """Reported stabiliser flips ``(B, T+1, d^2)`` for X and Z; the last layer is the perfect final syndrome."""
    T = rec.rounds
    q = rec.qubit_charges
    B = q.shape[0]
    sx = np.zeros((B, T + 1, lat.n_stabilisers), dtype=np.uint8)
    sz = np.zeros_like(sx)
    e_x, s_x = lat.x_compass["e"], lat.x_compass["s"]
    n_z, e_z = lat.z_compass["n"], lat.z_compass["e"]
    sx[:, :T] = rec.x_outcomes ^ q[:, 0:2 * T:2][:, :, e_x] ^ q[:, 0:2 * T:2][:, :, s_x]
    sz[:, :T] = rec.z_outcomes ^ q[:, 1:2 * T:2][:, :, n_z] ^ q[:, 1:2 * T:2][:, :, e_z]
    f = rec.final_frame
    sx[:, T] = f[:, lat.stabiliser_support("X")].sum(axis=2) & 1
    sz[:, T] = f[:, lat.stabiliser_support("Z")].sum(axis=2) & 1
    return sx, sz


def detection_events(records: np.ndarray) -> np.ndarray:
    """Differences of consecutive stabiliser records (the initial code state is +1)."""
    out = records.copy()
    out[:, 1:] ^= records[:, :-1]
    return out


def charge_defects(rec: SyndromeRecord) -> np.ndarray:
    """Qubit-charge changes between consecutive readouts, ``(B, 2T+1, n_qubits)``."""
    return detection_events(rec.qubit_charges)


def pauli_bits(lat: CodeLattice, frame: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """X and Z components of the residual Pauli error on every qubit.

    The X bit is the overlap with ``{s, z}`` (anticommutation with ``sigma_z``)
    and the Z bit the overlap with ``{s, x}``.
    """
    qm = lat.qubit_modes
    xb = (frame[:, qm[:, S]] ^ frame[:, qm[:, Z]]).astype(np.uint8)
    zb = (frame[:, qm[:, S]] ^ frame[:, qm[:, X]]).astype(np.uint8)
    return xb, zb


def logical_failure(lat: CodeLattice, x_bits: np.ndarray, z_bits: np.ndarray,
                    check: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Logical flips of residual Pauli errors: X errors crossing Z-bar, Z errors crossing X-bar.

    Args:
        x_bits, z_bits: ``(B, n_qubits)`` residual Pauli components after correction.
        check: raise if the residual is not in the stabiliser sector, which
            signals an unresolved charge or decoding mismatch.
    """
    x_bits = np.atleast_2d(x_bits)
    z_bits = np.atleast_2d(z_bits)
    if check:
        syn_z = (x_bits.astype(np.int32) @ lat.check_matrix("Z").T) & 1
        syn_x = (z_bits.astype(np.int32) @ lat.check_matrix("X").T) & 1
        if syn_z.any() or syn_x.any():
            raise ValueError("residual error has a nonzero syndrome")
    x_fail = x_bits[:, lat.zbar_qubits].sum(axis=1) & 1
    z_fail = z_bits[:, lat.xbar_qubits].sum(axis=1) & 1
    return x_fail.astype(np.uint8), z_fail.astype(np.uint8)


def simulate(lat: CodeLattice, rounds: int, batch: int, noise: NoiseParams,
             pp_vector: Optional[PPErrorVector] = None, rng=None) -> SyndromeRecord:
    rng = np.random.default_rng(rng)
    source = RandomErrors(pp_vector or derive_pp_vector(noise), noise, rng)
    return BatchFrameSimulator(lat, source, batch).run(rounds)


def run_round(lat: CodeLattice, frame: np.ndarray, noise: NoiseParams,
              pp_vector: Optional[PPErrorVector] = None, rng=None) -> tuple[SyndromeRecord, np.ndarray]:
    """One noisy round on a single frame (vector over modes); returns the record and the new frame."""
    rng = np.random.default_rng(rng)
    source = RandomErrors(pp_vector or derive_pp_vector(noise), noise, rng)
    sim = BatchFrameSimulator(lat, source, 1)
    sim.frame[0] = frame
    rec = sim.run(1)
    return rec, sim.frame[0].copy()


# --- schedule ----------------------------------------------------------------------

STEPS_PER_ROUND = {"dense": 4, "sparse": 6}
RAW_PPS_PER_DISTILLED = 4


def build_schedule(layout: str = "dense", n_d: int = 0) -> int:
    """Steps per round of stabiliser measurement.

    ``dense`` has five projection devices per qubit (4 steps); ``sparse`` has one
    (6 steps).  With one distillation round each projection costs four raw ones.
    """
    if layout not in STEPS_PER_ROUND:
        raise ValueError(f"unknown layout {layout!r}")
    if n_d not in (0, 1):
        raise ValueError("only zero or one distillation round is supported")
    return STEPS_PER_ROUND[layout] * (RAW_PPS_PER_DISTILLED if n_d else 1)
