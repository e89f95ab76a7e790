"""Monte Carlo logical error rates, threshold location, scaling fit and cost models."""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from decimal import Decimal
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
import pymatching

from .circuits import distilled_pp_vector
from .decoder import MODES, _charge_edges, _decode, build_decoder, decode_batch
from .frame import NoiseParams, PPErrorVector, derive_pp_vector
from .surface import (
    BatchFrameSimulator,
    RandomErrors,
    build_lattice,
    logical_failure,
    pauli_bits,
    build_schedule,
)

CHUNK_SHOTS = 1000


@dataclass(frozen=True)
class RunConfig:
    """One Monte Carlo point.

    ``amplification`` multiplies every noise component (creation, readout and
    the projection error vector) after distillation.
    """

    d: int
    rounds: int
    samples: int
    p_f: float
    p_b: float
    n_d: int = 0
    mode: str = "with_charge_detection"
    seed: int = 0
    amplification: float = 1.0

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be at least 1")
        if self.rounds < self.d:
            raise ValueError("rounds must be at least d")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.n_d not in (0, 1):
            raise ValueError("n_d must be 0 or 1")
        NoiseParams(self.p_f, self.p_b)

    def noise_model(self) -> tuple[NoiseParams, PPErrorVector]:
        base = NoiseParams(self.p_f, self.p_b)
        vec = distilled_pp_vector(base) if self.n_d else derive_pp_vector(base)
        r = self.amplification
        if r == 1.0:
            return base, vec
        return base.scaled(r), vec.scaled(r)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RateResult:
    """Aggregated failures of one configuration.

    Each logical parity is treated as flipping independently with a fixed
    probability ``q`` per round, so after ``T`` rounds it is wrong with
    probability ``(1 - (1 - 2q)^T) / 2``.  Inverting this for the X and Z
    failure fractions and combining them gives ``p_l``, the per-round rate of
    either failure.  For small rates it equals ``1 - (1 - P)^(1/T)`` with
    ``P`` the shot failure probability, and unlike that form it does not
    shrink with ``T`` once the logical state is fully scrambled.
    """

    config: RunConfig
    failures: int
    x_failures: int
    z_failures: int
    samples: int
    p_shot: float
    p_l: float
    stderr: float

    def row(self) -> dict:
        c = self.config
        return {"d": c.d, "rounds": c.rounds, "p_f": c.p_f, "p_b": c.p_b, "n_d": c.n_d, "mode": c.mode,
                "r": c.amplification, "samples": self.samples, "failures": self.failures,
                "x_failures": self.x_failures, "z_failures": self.z_failures,
                "p_shot": self.p_shot, "p_l": self.p_l, "stderr": self.stderr, "seed": c.seed}


def per_round_rate(p_shot: float, rounds: int) -> float:
    """Linearised per-round rate ``1 - (1 - P)^(1/T)``."""
    return 1.0 - (1.0 - p_shot) ** (1.0 / rounds)


def channel_rate(p_fail: float, rounds: int) -> float:
    """Per-round flip probability of one logical parity from its failure fraction after ``rounds``."""
    base = max(1.0 - 2.0 * p_fail, 0.0)
    return 0.5 * (1.0 - base ** (1.0 / rounds))


def _channel_rate_slope(p_fail: float, rounds: int) -> float:
    base = 1.0 - 2.0 * p_fail
    if base <= 0.0:
        return np.inf
    return base ** (1.0 / rounds - 1.0) / rounds


def combined_rate(px: float, pz: float, n: int, rounds: int) -> tuple[float, float]:
    """Per-round rate of either logical failure and its standard error (delta method)."""
    qx, qz = channel_rate(px, rounds), channel_rate(pz, rounds)
    q = qx + qz - qx * qz
    gx = (1 - qz) * _channel_rate_slope(px, rounds)
    gz = (1 - qx) * _channel_rate_slope(pz, rounds)
    var = (gx ** 2 * px * (1 - px) + gz ** 2 * pz * (1 - pz)) / n
    return q, float(np.sqrt(var)) if np.isfinite(var) else float("inf")


@lru_cache(maxsize=8)
def _decoder_for(cfg_key: tuple):
    d, rounds, p_f, p_b, n_d, mode, r = cfg_key
    cfg = RunConfig(d, rounds, 1, p_f, p_b, n_d, mode, 0, r)
    noise, vec = cfg.noise_model()
    lat = build_lattice(d)
    return lat, noise, vec, build_decoder(lat, rounds, noise, vec, mode)


def _cfg_key(cfg: RunConfig) -> tuple:
    return (cfg.d, cfg.rounds, cfg.p_f, cfg.p_b, cfg.n_d, cfg.mode, cfg.amplification)


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    """Independent stream per chunk, fixed by (master seed, chunk index)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk,)))


def run_chunk(cfg: RunConfig, chunk: int) -> tuple[int, int, int, int]:
    """Failures in one chunk of shots: ``(n, either, x, z)``."""
    lat, noise, vec, dec = _decoder_for(_cfg_key(cfg))
    n = min(CHUNK_SHOTS, cfg.samples - chunk * CHUNK_SHOTS)
    sim = BatchFrameSimulator(lat, RandomErrors(vec, noise, chunk_rng(cfg.seed, chunk)), n)
    rec = sim.run(cfg.rounds)
    corr = decode_batch(dec, rec)
    xf, zf = logical_failure(lat, corr.residual_x, corr.residual_z)
    return n, int((xf | zf).sum()), int(xf.sum()), int(zf.sum())


def _run_chunk_args(args):
    return run_chunk(*args)


def estimate_logical_rate(cfg: RunConfig, workers: int = 1) -> RateResult:
    """Logical failure rate per round with a binomial standard error.

    Shots are split into fixed-size chunks with their own random streams, so
    the result does not depend on ``workers``.
    """
    n_chunks = -(-cfg.samples // CHUNK_SHOTS)
    jobs = [(cfg, k) for k in range(n_chunks)]
    if workers > 1 and n_chunks > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk_args, jobs))
    else:
        parts = [run_chunk(*j) for j in jobs]
    n, fail, xf, zf = (sum(col) for col in zip(*parts))
    p_l, se = combined_rate(xf / n, zf / n, n, cfg.rounds)
    return RateResult(cfg, fail, xf, zf, n, fail / n, p_l, se)


# --- residual Pauli rates --------------------------------------------------------------------

@dataclass
class ResidualRates:
    """Per-qubit per-round Pauli flip rates in units of ``p_b``, counted modulo stabilisers."""

    raw_x: float
    raw_z: float
    corrected_x: float
    corrected_z: float


def _min_weight(bits: np.ndarray, H: np.ndarray) -> np.ndarray:
    """Weight of the lightest error with the same syndrome (matching on the 2D lattice)."""
    m = pymatching.Matching(H)
    syn = (bits.astype(np.int32) @ H.T) & 1
    return m.decode_batch(syn.astype(np.uint8)).sum(axis=1)


def residual_pauli_rates(d: int, p_b: float, samples: int, seed: int = 0) -> ResidualRates:
    """Monte Carlo route at ``p_F = 0``: one round, charge-stage correction only.

    Stabiliser outcomes are exact at ``p_F = 0``, so the residual's weight
    modulo stabilisers is the weight of the lightest error with its syndrome.
    """
    lat = build_lattice(d)
    noise = NoiseParams(0.0, p_b)
    vec = derive_pp_vector(noise)
    dec = build_decoder(lat, 1, noise, vec, "with_charge_detection")
    idx = dec.index
    sums = np.zeros(4)
    done = 0
    for k in range(-(-samples // CHUNK_SHOTS)):
        n = min(CHUNK_SHOTS, samples - done)
        rec = BatchFrameSimulator(lat, RandomErrors(vec, noise, chunk_rng(seed, k)), n).run(1)
        xb, zb = pauli_bits(lat, rec.final_frame)
        pred = _decode(dec.charge, idx.charge_vector(rec), idx.n_payload)
        cx = xb ^ pred[:, idx.n_detection:idx.n_detection + idx.n_q]
        cz = zb ^ pred[:, idx.n_detection + idx.n_q:]
        Hz, Hx = lat.check_matrix("Z"), lat.check_matrix("X")
        sums += [_min_weight(xb, Hz).sum(), _min_weight(zb, Hx).sum(),
                 _min_weight(cx, Hz).sum(), _min_weight(cz, Hx).sum()]
        done += n
    r = sums / (done * lat.n_qubits * p_b)
    return ResidualRates(*map(float, r))


def _local_min_weight(bits: np.ndarray, H: np.ndarray) -> int:
    if not bits.any():
        return 0
    touched = [s for s in range(len(H)) if (H[s] & bits).any()]
    best = int(bits.sum())
    for r in range(1, len(touched) + 1):
        for sub in itertools.combinations(touched, r):
            v = bits ^ (H[list(sub)].sum(axis=0) & 1).astype(np.uint8)
            best = min(best, int(v.sum()))
    return best


def expected_residual_pauli_rates(d: int, p_b: float) -> ResidualRates:
    """Enumeration route: first-order rates from every single fault of one round."""
    lat = build_lattice(d)
    noise = NoiseParams(0.0, p_b)
    vec = derive_pp_vector(noise)
    edges, occurrences, idx = _charge_edges(lat, 1, noise, vec)
    Hz, Hx = lat.check_matrix("Z"), lat.check_matrix("X")
    nd, nq = idx.n_detection, idx.n_q
    sums = np.zeros(4)
    for p, sig, eff in occurrences:
        resid = eff ^ edges[sig].payload if sig else eff
        for j, e in enumerate((eff, resid)):
            x = np.zeros(nq, dtype=np.uint8)
            z = np.zeros(nq, dtype=np.uint8)
            for b in e:
                if nd <= b < nd + nq:
                    x[b - nd] = 1
                elif b >= nd + nq:
                    z[b - nd - nq] = 1
            # X errors are defined up to X stabilisers, Z errors up to Z stabilisers
            sums[2 * j] += p * _local_min_weight(x, Hx)
            sums[2 * j + 1] += p * _local_min_weight(z, Hz)
    r = sums / (nq * p_b)
    return ResidualRates(*map(float, r))


# --- threshold ------------------------------------------------------------------------------

class NoCrossing(RuntimeError):
    """The p_L(d) curves do not intersect inside the scanned window."""


@dataclass
class ThresholdResult:
    estimate: float
    ci: tuple
    pair_crossings: dict
    rows: list = field(default_factory=list)


def locate_crossing(table: dict, deg: int = 2) -> tuple[float, dict]:
    """Crossing of ``ln p_L`` versus ``ln p_B`` curves.

    Args:
        table: ``{d: (p_b array, p_l array, stderr array)}``.
        deg: polynomial degree of each local fit.

    Returns:
        Mean crossing over all pairs of sizes and the per-pair crossings.
    """
    fits = {}
    lo, hi = np.inf, -np.inf
    for d, (pb, pl, se) in table.items():
        pb, pl, se = map(np.asarray, (pb, pl, se))
        ok = pl > 0
        if ok.sum() <= deg:
            raise NoCrossing(f"too few nonzero points for d={d}")
        x = np.log(pb[ok])
        y = np.log(pl[ok])
        w = pl[ok] / np.maximum(se[ok], 1e-300)
        fits[d] = np.polyfit(x, y, min(deg, ok.sum() - 1), w=w)
        lo, hi = min(lo, x.min()), max(hi, x.max())
    crossings = {}
    for d1, d2 in itertools.combinations(sorted(fits), 2):
        diff = np.polysub(fits[d2], fits[d1])
        roots = [r.real for r in np.roots(diff) if abs(r.imag) < 1e-12 and lo <= r.real <= hi]
        if not roots:
            continue
        # the physical crossing has the larger code improving below it
        good = [r for r in roots if np.polyval(np.polyder(diff), r) > 0] or roots
        crossings[(d1, d2)] = float(np.exp(min(good, key=lambda r: abs(r - (lo + hi) / 2))))
    if not crossings:
        raise NoCrossing("no crossing in range")
    return float(np.exp(np.mean(np.log(list(crossings.values()))))), crossings


def find_threshold(ratio: float, d_list: Sequence[int], mode: str, n_d: int = 0, p_grid=None,
                   samples: int = 20000, seed: int = 0, rounds: Optional[int] = None,
                   n_boot: int = 200, workers: int = 1, progress=None) -> ThresholdResult:
    """Scan ``p_B`` (with ``p_F = ratio * p_B``) and locate the crossing of the p_L(d) curves.

    The confidence interval is the 16-84% band of crossings recomputed from
    binomially resampled failure counts.
    """
    if len(d_list) < 2:
        raise ValueError("need at least two lattice sizes")
    if p_grid is None:
        raise ValueError("p_grid is required")
    rows, table, counts = [], {}, {}
    for d in d_list:
        T = rounds or d
        res = []
        for k, pb in enumerate(p_grid):
            cfg = RunConfig(d, T, samples, ratio * pb, pb, n_d, mode, seed + 1000 * d + k)
            r = estimate_logical_rate(cfg, workers)
            res.append(r)
            rows.append(r.row())
            if progress:
                progress(r)
        table[d] = (np.array(p_grid), np.array([r.p_l for r in res]), np.array([r.stderr for r in res]))
        counts[d] = (np.array([r.x_failures for r in res]), np.array([r.z_failures for r in res]), samples, T)
    try:
        est, pairs = locate_crossing(table)
    except NoCrossing as exc:
        exc.rows = rows
        raise
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(10 ** 6,)))
    boot = []
    for _ in range(n_boot):
        t = {}
        for d, (xf, zf, n, T) in counts.items():
            px = rng.binomial(n, xf / n) / n
            pz = rng.binomial(n, zf / n) / n
            pairs_ = [combined_rate(a, b, n, T) for a, b in zip(px, pz)]
            pl = np.array([q for q, _ in pairs_])
            se = np.array([max(e, 1.0 / (n * T)) for _, e in pairs_])
            t[d] = (np.array(p_grid), pl, se)
        try:
            boot.append(locate_crossing(t)[0])
        except NoCrossing:
            pass
    ci = (float(np.quantile(boot, 0.16)), float(np.quantile(boot, 0.84))) if boot else (np.nan, np.nan)
    return ThresholdResult(est, ci, {f"{a}-{b}": v for (a, b), v in pairs.items()}, rows)


# --- scaling fit ------------------------------------------------------------------------------

@dataclass
class FitResult:
    """``p_L = exp(-kappa d - nu ln d - eta)`` at ``r = 1``."""

    kappa: float
    nu: float
    eta: float
    sigma_kappa: float
    sigma_nu: float
    sigma_eta: float
    alpha0: float
    alpha1: float
    alpha2: float
    beta0: float
    sigma_beta0: float = 0.0
    chi2_dof: float = float("nan")

    def p_l(self, d) -> np.ndarray:
        d = np.asarray(d, dtype=float)
        return np.exp(-self.kappa * d - self.nu * np.log(d) - self.eta)

    def shifted(self) -> "FitResult":
        """Pessimistic parameters ``kappa - sigma``, ``nu - sigma``, ``eta - sigma``."""
        return FitResult(self.kappa - self.sigma_kappa, self.nu - self.sigma_nu, self.eta - self.sigma_eta,
                         0, 0, 0, -(self.kappa - self.sigma_kappa), -(self.nu - self.sigma_nu),
                         -(self.eta - self.sigma_eta), self.beta0)


def fit_scaling(data) -> FitResult:
    """Weighted least squares of ``ln p_L = (a0 + b0 ln r) d + a1 ln d + a2``.

    Args:
        data: iterable of ``(d, r, p_L, stderr)`` with ``p_L > 0``.
    """
    arr = np.array([tuple(map(float, row)) for row in data])
    if arr.ndim != 2 or arr.shape[1] != 4:
        raise ValueError("data rows must be (d, r, p_L, stderr)")
    arr = arr[arr[:, 2] > 0]
    d, r, pl, se = arr.T
    if len(np.unique(d)) < 3 or len(np.unique(r)) < 3:
        raise ValueError("need at least three distinct d and three distinct r")
    A = np.column_stack([d, d * np.log(r), np.log(d), np.ones_like(d)])
    y = np.log(pl)
    sigma = se / pl
    if np.linalg.matrix_rank(A) < 4:
        raise ValueError("design matrix is rank deficient")
    w = 1.0 / sigma
    coef, *_ = np.linalg.lstsq(A * w[:, None], y * w, rcond=None)
    cov = np.linalg.inv((A * (w ** 2)[:, None]).T @ A)
    dof = len(y) - 4
    chi2 = float((((A @ coef - y) * w) ** 2).sum())
    chi2_dof = chi2 / dof if dof > 0 else float("nan")
    a0, b0, a1, a2 = coef
    sd = np.sqrt(np.diag(cov))
    return FitResult(-a0, -a1, -a2, sd[0], sd[2], sd[3], a0, a1, a2, b0, sd[1], chi2_dof)


# --- cost models --------------------------------------------------------------------------------

QUBIT_COUNT_MODELS = {
    "torus": lambda d: 2 * d * d,
    "square": lambda d: d * d,
    # each distilled projection needs an 8-mode resource, i.e. two extra 4-mode qubits per data qubit
    "torus+distill": lambda d: 2 * d * d * 3,
}


def resource_cost(fit: FitResult, target_p_l: float, qubit_count_model: str = "torus",
                  d_max: int = 1001) -> tuple[int, int]:
    """Smallest odd ``d`` whose fitted ``p_L`` reaches the target, and its qubit count."""
    if fit.kappa <= 0:
        raise ValueError("target unreachable: kappa must be positive")
    count = QUBIT_COUNT_MODELS[qubit_count_model]
    for d in range(3, d_max + 1, 2):
        if fit.p_l(d) <= target_p_l:
            return d, count(d)
    raise ValueError("target unreachable below d_max")


def normal_qubit_rate(d: int) -> Fraction:
    return Fraction(3, 100) * Fraction(1, 10) ** ((d + 1) // 2)


def normal_qubit_baseline(target_p_l: float) -> tuple[int, int]:
    """Smallest odd ``d`` with ``0.03 * 0.1^((d+1)/2) <= target`` (exact decimal comparison) and ``(2d-1)^2`` qubits."""
    target = Fraction(Decimal(str(target_p_l)))
    if target >= Fraction(3, 100):
        raise ValueError("target must be below 0.03")
    d = 3
    while normal_qubit_rate(d) > target:
        d += 2
    return d, (2 * d - 1) ** 2


@dataclass
class TimeCost:
    steps_per_round: int
    failure_rate: float


def time_cost(layout: str, n_d: int, failure_policy: str = "none", p_b: float = 1e-3) -> TimeCost:
    """Steps per round and the failure rate of one distilled projection.

    A distilled projection fails (detects an error) with rate ``~4 p_B``;
    repeating the resource preparation once squares it and doubles the steps.
    """
    if failure_policy not in ("none", "repeat_once"):
        raise ValueError(f"unknown failure policy {failure_policy!r}")
    steps = build_schedule(layout, n_d)
    if n_d == 0:
        return TimeCost(steps, 0.0)
    if failure_policy == "repeat_once":
        return TimeCost(2 * steps, (4 * p_b) ** 2)
    return TimeCost(steps, 4 * p_b)
