"""Charge-measurement and parity-projection distillation circuits.

All circuits here are rings of four-mode projections: ``n`` ancilla pairs
are created on the crossed pairs ``(a_2k, b_2k-1)``, projection ``k`` acts on
``(a_2k, c_2k, c_2k+1, b_2k+1)`` and the same crossed pairs are read out.  The product of the projection outcomes gives the parity of the
``2n`` data modes; the crossed readouts check that the ancilla charge was
conserved and select the feedback.

Circuits are run on a single shot through :class:`CircuitContext`, which
holds the error frame and draws (or is told) the noise branch of every
operation in order of occurrence.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Optional

import numpy as np
import sympy

from .frame import (
    PP_CODE_FLIPS,
    PP_CODE_MASKS,
    PP_CODES,
    ErrorFrame,
    ModeRegistry,
    NoiseParams,
    PPErrorVector,
    derive_pp_vector,
    frame_flips_parity,
)

# Codes 5..10 are the six charge-conserving pair insertions with a correct outcome.
BRAIDING_CODES = tuple(range(5, 11))


@dataclass(frozen=True)
class RingLayout:
    """Index bookkeeping for a ring of ``n_pp`` projections on ``2 n_pp`` data modes.

    Ancilla slot ``2k`` is ``a_2k`` and slot ``2k + 1`` is ``b_2k+1``.
    """

    n_pp: int

    def pp_slots(self, k: int):
        """``(("anc", 2k), ("data", 2k), ("data", 2k+1), ("anc", 2k+1))``."""
        return (("anc", 2 * k), ("data", 2 * k), ("data", 2 * k + 1), ("anc", 2 * k + 1))

    def creation_pairs(self):
        """Ancilla pairs are created on the same crossed pairs they are read out on."""
        return self.readout_pairs()

    def readout_pairs(self):
        """Crossed pairs ``(a_2k, b_2k-1)``; pair 0 is ``(a_0, b_2n-1)``."""
        m = 2 * self.n_pp
        return [(2 * k, (2 * k - 1) % m) for k in range(self.n_pp)]

    @cached_property
    def feedback_matrix(self) -> np.ndarray:
        """GF(2) map from readout flips (rows) to inserted data modes (columns).

        An odd flip pattern is first made even by toggling readout 0; the
        even pattern is then integrated around the ring: data pair
        ``(c_2k, c_2k+1)`` is inserted when an odd number of readouts
        ``0..k`` flipped.
        """
        n = self.n_pp
        mat = np.zeros((n, 2 * n), dtype=np.uint8)
        for j in range(n):
            f = np.zeros(n, dtype=np.uint8)
            f[j] = 1
            f[0] ^= 1  # every single flip is odd
            g = np.cumsum(f) % 2
            for k in range(n):
                if g[k]:
                    mat[j, 2 * k] = mat[j, 2 * k + 1] = 1
        mat.flags.writeable = False
        return mat

    def feedback_modes(self, flips) -> list[int]:
        return list(_feedback_modes(self, tuple(int(x) for x in flips)))


@lru_cache(maxsize=None)
def _feedback_modes(layout: RingLayout, flips: tuple) -> tuple:
    ins = (np.array(flips, dtype=np.uint8) @ layout.feedback_matrix) % 2
    return tuple(int(i) for i in np.flatnonzero(ins))


@lru_cache(maxsize=None)
def ring_layout(n_pp: int) -> RingLayout:
    if n_pp < 2:
        raise ValueError("a ring needs at least two projections")
    return RingLayout(n_pp)


@dataclass
class CircuitContext:
    """Per-shot state: error frame, mode allocator and noise source.

    Args:
        noise: creation/readout error rates; ``None`` makes those noiseless.
        pp_vector: branch probabilities of raw projections; derived from
            ``noise`` when omitted.
        forced: ``{(kind, index): value}`` overriding the noise draw of the
            ``index``-th operation of ``kind`` (``"pp"`` takes a branch code,
            ``"create"`` and ``"measure"`` take a flip bit).
    """

    frame: ErrorFrame = field(default_factory=ErrorFrame)
    registry: ModeRegistry = field(default_factory=ModeRegistry)
    rng: Optional[np.random.Generator] = None
    noise: Optional[NoiseParams] = None
    pp_vector: Optional[PPErrorVector] = None
    forced: dict = field(default_factory=dict)
    counters: Counter = field(default_factory=Counter)

    def __post_init__(self):
        if self.pp_vector is None and self.noise is not None:
            self.pp_vector = derive_pp_vector(self.noise)
        if self.rng is None and (self.noise is not None or self.pp_vector is not None):
            self.rng = np.random.default_rng(0)
        self._code_probs = None if self.pp_vector is None else self.pp_vector.code_probabilities()

    def _next(self, kind: str) -> int:
        idx = self.counters[kind]
        self.counters[kind] += 1
        return idx

    def fresh_modes(self, n: int) -> list[int]:
        out = []
        for _ in range(n // 2):
            out.extend(self.registry.allocate_pair())
        return out

    def create(self) -> tuple[int, int]:
        """Create a pair in its reference parity; a creation error marks the first mode."""
        idx = self._next("create")
        pair = self.registry.allocate_pair()
        if ("create", idx) in self.forced:
            err = self.forced[("create", idx)]
        else:
            err = int(self.noise is not None and self.rng.random() < self.noise.p_create)
        if err:
            self.frame = self.frame ^ [pair[0]]
        return pair

    def pp(self, modes) -> int:
        """Raw noisy four-mode projection; returns the reported-outcome flip."""
        idx = self._next("pp")
        if ("pp", idx) in self.forced:
            code = self.forced[("pp", idx)]
        elif self._code_probs is not None:
            code = int(self.rng.choice(len(PP_CODES), p=self._code_probs))
        else:
            code = 0
        flip = frame_flips_parity(self.frame, modes) ^ int(PP_CODE_FLIPS[code])
        ins = [m for m, bit in zip(modes, PP_CODE_MASKS[code]) if bit]
        self.frame = self.frame ^ ins
        return flip

    def measure(self, pair) -> int:
        """Read out ``i a b``; the pair is retired afterwards."""
        idx = self._next("measure")
        if ("measure", idx) in self.forced:
            err = self.forced[("measure", idx)]
        else:
            err = int(self.noise is not None and self.rng.random() < self.noise.p_measure)
        flip = frame_flips_parity(self.frame, pair) ^ err
        self.discard(pair)
        return flip

    def insert(self, modes) -> None:
        self.frame = self.frame ^ list(modes)

    def discard(self, modes) -> None:
        self.frame = ErrorFrame(self.frame.support - frozenset(modes))


@dataclass
class ChargeCircuitResult:
    """Outcome of a (possibly effective) parity measurement relative to the noiseless run.

    ``inferred_flip`` is 1 when the reported parity differs from the parity
    the noiseless circuit would report for the same input.  ``flags`` holds
    one ancilla-charge check per box; ``detection_flag`` is their OR.
    """

    inferred_flip: int
    flags: tuple = ()
    consumed_pairs: list = field(default_factory=list)
    output_modes: tuple = ()
    attempts: int = 1

    @property
    def detection_flag(self) -> int:
        return int(any(self.flags))

    @property
    def inferred_parity(self) -> int:
        return -1 if self.inferred_flip else 1


PPImpl = Callable[[CircuitContext, tuple], ChargeCircuitResult]


def raw_pp(ctx: CircuitContext, modes) -> ChargeCircuitResult:
    return ChargeCircuitResult(ctx.pp(modes), (), [], tuple(modes))


def run_ring(ctx: CircuitContext, data_modes, pp_impl: PPImpl = raw_pp) -> ChargeCircuitResult:
    """Measure the parity of ``data_modes`` with a ring of projections."""
    n = len(data_modes) // 2
    if len(data_modes) != 2 * n or len(set(data_modes)) != len(data_modes):
        raise ValueError("a ring needs an even number of distinct data modes")
    layout = ring_layout(n)
    anc = [None] * (2 * n)
    for a_slot, b_slot in layout.creation_pairs():
        anc[a_slot], anc[b_slot] = ctx.create()
    pairs = [(anc[i], anc[j]) for i, j in layout.creation_pairs()]

    def resolve(slot):
        kind, i = slot
        return anc[i] if kind == "anc" else data_modes[i]

    flip, sub_flags = 0, []
    for k in range(n):
        res = pp_impl(ctx, tuple(resolve(s) for s in layout.pp_slots(k)))
        flip ^= res.inferred_flip
        sub_flags.extend(res.flags)
        pairs.extend(res.consumed_pairs)
    readout = [ctx.measure((anc[i], anc[j])) for i, j in layout.readout_pairs()]
    ctx.insert(data_modes[i] for i in layout.feedback_modes(readout))
    own_flag = int(sum(readout) % 2)
    return ChargeCircuitResult(flip, (own_flag, *sub_flags), pairs, tuple(data_modes))


def measure_charge8(ctx: CircuitContext, modes) -> ChargeCircuitResult:
    if len(modes) != 8:
        raise ValueError("the charge measurement acts on eight modes")
    return run_ring(ctx, modes)


def effective_pp_partial(ctx: CircuitContext, modes) -> ChargeCircuitResult:
    """Two raw projections and two ancilla pairs; detects charge moved onto ancillas."""
    if len(modes) != 4:
        raise ValueError("an effective projection acts on four modes")
    return run_ring(ctx, modes)


def effective_pp_full(ctx: CircuitContext, modes) -> ChargeCircuitResult:
    """Second-generation ring: each of the two projections is itself a partial effective one."""
    if len(modes) != 4:
        raise ValueError("an effective projection acts on four modes")
    return run_ring(ctx, modes, pp_impl=effective_pp_partial)


PP_SOURCES = {"raw": raw_pp, "partial": effective_pp_partial, "full": effective_pp_full}


class ResourceRejected(RuntimeError):
    """The entangled resource failed its ancilla checks on every allowed attempt."""


def effective_pp_entangled(ctx: CircuitContext, modes, pp_source: str = "full",
                           max_attempts: Optional[int] = 100,
                           keep_rejected: bool = False) -> ChargeCircuitResult:
    """Projection by teleportation through an entangled eight-mode resource.

    Four pairs ``(c_k', c_k'')`` are created and ``pp_source`` projects the
    ``c''`` modes.  The resource is only used when that projection raised no
    flag; otherwise it is discarded and rebuilt.  Reading ``i c_k c_k''``
    then moves the data onto the ``c'`` modes (returned as
    ``output_modes``), and the parity is the source outcome times the four
    readouts.

    With ``keep_rejected`` a flagged resource is consumed anyway and the
    flags are returned, which is what the exact enumeration needs.
    """
    if len(modes) != 4:
        raise ValueError("an effective projection acts on four modes")
    source = PP_SOURCES[pp_source]
    attempt = 0
    while True:
        attempt += 1
        pairs = [ctx.create() for _ in range(4)]
        primed = tuple(p[0] for p in pairs)
        doubled = tuple(p[1] for p in pairs)
        res = source(ctx, doubled)
        if not res.detection_flag or keep_rejected:
            break
        ctx.discard(primed + doubled)
        if max_attempts is not None and attempt >= max_attempts:
            raise ResourceRejected(f"no accepted resource after {attempt} attempts")
    flip = res.inferred_flip
    for k in range(4):
        mu = ctx.measure((modes[k], doubled[k]))
        flip ^= mu
        if mu:
            ctx.insert([primed[k]])
    return ChargeCircuitResult(flip, res.flags, res.consumed_pairs, primed, attempt)


# --- effect enumeration -----------------------------------------------------------

def reduced_weight(mask: int) -> int:
    """Weight of a 4-mode insertion modulo the measured parity operator."""
    w = bin(mask).count("1")
    return min(w, 4 - w)


@dataclass(frozen=True)
class ShotEffect:
    """Net effect of one forced noise configuration on a four-mode effective projection."""

    outcome_flip: int
    residual_mask: int  # bit k: output mode k carries an error
    flags: tuple

    @property
    def detected(self) -> bool:
        return any(self.flags)

    @property
    def category(self) -> int:
        """Index into ``(eps_+0, eps_+1, eps_+2, eps_-0, eps_-1, eps_-2)``."""
        return 3 * self.outcome_flip + reduced_weight(self.residual_mask)

    def key(self) -> int:
        bits = self.outcome_flip | (self.residual_mask << 1)
        for i, f in enumerate(self.flags):
            bits |= f << (5 + i)
        return bits


def run_forced(circuit: str, forced: dict) -> ShotEffect:
    """Run ``full`` / ``partial`` / ``entangled-<source>`` with the given forced branches only."""
    ctx = CircuitContext(forced=dict(forced))
    modes = tuple(ctx.fresh_modes(4))
    if circuit.startswith("entangled"):
        source = circuit.split("-", 1)[1]
        res = effective_pp_entangled(ctx, modes, pp_source=source, keep_rejected=True)
    else:
        res = PP_SOURCES[circuit](ctx, modes)
    out = res.output_modes
    mask = sum(1 << k for k, m in enumerate(out) if m in ctx.frame.support)
    stray = ctx.frame.support - frozenset(out)
    if stray:
        raise AssertionError(f"error left on retired modes {sorted(stray)}")
    return ShotEffect(res.inferred_flip, mask, tuple(res.flags))


@lru_cache(maxsize=None)
def circuit_locations(circuit: str) -> dict:
    """Number of projections, creations and readouts the circuit performs."""
    ctx = CircuitContext()
    modes = tuple(ctx.fresh_modes(4))
    if circuit.startswith("entangled"):
        effective_pp_entangled(ctx, modes, pp_source=circuit.split("-", 1)[1], keep_rejected=True)
    else:
        PP_SOURCES[circuit](ctx, modes)
    return {k: ctx.counters[k] for k in ("pp", "create", "measure")}


@dataclass(frozen=True)
class DistillationPolynomial:
    """Conditional harmful-error rate ``numerator / denominator`` as exact polynomials in ``p_b``."""

    numerator: sympy.Expr
    denominator: sympy.Expr
    symbol: sympy.Symbol
    undetected_counts: tuple = ()
    harmful_counts: tuple = ()

    def ratio(self) -> sympy.Expr:
        return sympy.cancel(self.numerator / self.denominator)

    def __call__(self, p_b) -> float:
        num = self.numerator.subs(self.symbol, p_b)
        den = self.denominator.subs(self.symbol, p_b)
        return float(num / den)

    def exact(self, p_b) -> sympy.Expr:
        return sympy.nsimplify(self.numerator.subs(self.symbol, p_b) / self.denominator.subs(self.symbol, p_b))

    def equals(self, numerator, denominator) -> bool:
        """Identity of rational functions, checked by cross multiplication."""
        diff = sympy.expand(self.numerator * denominator - numerator * self.denominator)
        return diff == 0


def enumerate_distillation(p_b=None) -> DistillationPolynomial | float:
    """Exact post-selected error rate of the full-detection projection with braiding errors only.

    Every raw projection is either ideal (probability ``1 - p_b``) or applies one
    of the six pair insertions (``p_b / 6`` each).  All ``7^4`` joint
    configurations are run through the circuit.  Undetected configurations
    whose effect is anything other than the ideal projection (a residual
    error or a flipped outcome) count as harmful.

    Args:
        p_b: ``None`` returns the symbolic result; a number evaluates it.
    """
    n_pp = circuit_locations("full")["pp"]
    undetected = [0] * (n_pp + 1)
    harmful = [0] * (n_pp + 1)
    for combo in itertools.product((0,) + BRAIDING_CODES, repeat=n_pp):
        forced = {("pp", i): c for i, c in enumerate(combo) if c}
        eff = run_forced("full", forced)
        if eff.detected:
            continue
        k = len(forced)
        undetected[k] += 1
        if eff.category != 0:
            harmful[k] += 1
    p = sympy.Symbol("p_b", nonnegative=True)

    def poly(counts):
        return sympy.expand(sum(sympy.Integer(c) * (1 - p) ** (n_pp - k) * (p / 6) ** k
                                for k, c in enumerate(counts)))

    result = DistillationPolynomial(poly(harmful), poly(undetected), p,
                                    tuple(undetected), tuple(harmful))
    return result if p_b is None else result(p_b)


def closed_form_distillation_rate():
    """Closed form of the post-selected rate, as ``(numerator, denominator, symbol)``."""
    p = sympy.Symbol("p_b", nonnegative=True)
    r = sympy.Rational
    num = r(8, 9) * p ** 2 * (1 - r(5, 3) * p + r(7, 9) * p ** 2)
    den = 1 - 4 * p + r(32, 9) * p ** 2 * (2 - r(5, 3) * p + r(5, 9) * p ** 2)
    return sympy.expand(num), sympy.expand(den), p


# --- distilled projection vector ------------------------------------------------

@lru_cache(maxsize=None)
def single_error_effects(circuit: str = "entangled-full") -> dict:
    """Effect key of every single forced branch, per location.

    Returns ``{(kind, index): {value: key}}`` with keys from :meth:`ShotEffect.key`.
    """
    locs = circuit_locations(circuit)
    effects = {}
    for i in range(locs["pp"]):
        effects[("pp", i)] = {c: run_forced(circuit, {("pp", i): c}).key() for c in range(1, len(PP_CODES))}
    for kind in ("create", "measure"):
        for i in range(locs[kind]):
            effects[(kind, i)] = {1: run_forced(circuit, {(kind, i): 1}).key()}
    return effects


def _xor_convolve(dist: np.ndarray, effects: dict, probs: dict) -> np.ndarray:
    idx = np.arange(len(dist))
    out = dist * (1.0 - sum(probs.values()))
    for value, key in effects.items():
        out = out + probs[value] * dist[idx ^ key]
    return out


def effect_distribution(noise: NoiseParams, circuit: str = "entangled-full",
                        pp_vector: Optional[PPErrorVector] = None) -> np.ndarray:
    """Exact distribution over effect keys, using linearity of the frame map."""
    v = pp_vector or derive_pp_vector(noise)
    code_probs = v.code_probabilities()
    effects = single_error_effects(circuit)
    dist = np.zeros(256)
    dist[0] = 1.0
    for (kind, _), eff in effects.items():
        if kind == "pp":
            probs = {c: code_probs[c] for c in eff}
        elif kind == "create":
            probs = {1: noise.p_create}
        else:
            probs = {1: noise.p_measure}
        dist = _xor_convolve(dist, eff, probs)
    return dist


def _split_key(key: int):
    return key & 1, (key >> 1) & 0xF, key >> 5


def distillation_acceptance(noise: NoiseParams) -> float:
    dist = effect_distribution(noise)
    return float(sum(dist[k] for k in range(256) if _split_key(k)[2] == 0))


def distillation_failure_rate(noise: NoiseParams) -> float:
    """Probability that the full-detection resource is rejected on one attempt."""
    return 1.0 - distillation_acceptance(noise)


def distilled_pp_vector(noise: NoiseParams, n_d: int = 1) -> PPErrorVector:
    """Branch probabilities of the projection after ``n_d`` rounds of distillation.

    ``n_d = 0`` is the raw projection.  ``n_d = 1`` is the teleported
    projection with a full-detection resource, conditioned on acceptance,
    computed exactly by convolving the single-error effects of every noisy
    location (the frame map is linear, so joint effects are XORs).
    """
    if n_d == 0:
        return derive_pp_vector(noise)
    if n_d != 1:
        raise ValueError(f"only zero or one distillation round is supported, got {n_d}")
    dist = effect_distribution(noise)
    eps = np.zeros(6)
    for key, prob in enumerate(dist):
        o, mask, flags = _split_key(key)
        if flags == 0:
            eps[3 * o + reduced_weight(mask)] += prob
    return PPErrorVector.from_array(eps / eps.sum())


@dataclass
class SampledVector:
    vector: PPErrorVector
    stderr: np.ndarray
    accepted: int
    attempts: int

    @property
    def acceptance(self) -> float:
        return self.accepted / self.attempts


def sample_distilled_pp(noise: NoiseParams, samples: int, seed: int = 0,
                        pp_source: str = "full") -> SampledVector:
    """Monte Carlo estimate of the distilled vector by running the circuit shot by shot."""
    rng = np.random.default_rng(seed)
    counts = np.zeros(6)
    attempts = 0
    for _ in range(samples):
        ctx = CircuitContext(rng=rng, noise=noise)
        modes = tuple(ctx.fresh_modes(4))
        res = effective_pp_entangled(ctx, modes, pp_source=pp_source, max_attempts=None)
        attempts += res.attempts
        mask = sum(1 << k for k, m in enumerate(res.output_modes) if m in ctx.frame.support)
        counts[3 * res.inferred_flip + reduced_weight(mask)] += 1
    freq = counts / samples
    stderr = np.sqrt(freq * (1 - freq) / samples)
    return SampledVector(PPErrorVector.from_array(freq), stderr, samples, attempts)
