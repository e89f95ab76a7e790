"""Two-stage matching decoder for the Majorana surface code.

Stage one pairs charge defects (qubit-charge changes and octagon ancilla
flags) and applies the Pauli error that accompanies each matched correlated
ancilla/qubit event.  Stage two decodes the remaining Pauli errors on two
space-time cubic lattices, one per species.

Edge probabilities come from enumerating every single-fault branch of one
round through the frame simulator and translating it in time.  A fault's
*effect* is its charge signature, the stabiliser detection events it causes
and the Pauli error it leaves behind.  Faults with the same charge signature
form one charge edge; its payload is the whole effect of the edge's most
probable fault (ties go to the lightest Pauli part, then to the lowest bits).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import networkx as nx
import numpy as np
import pymatching
from scipy.sparse.csgraph import dijkstra
from scipy.sparse import csr_matrix

from .frame import NoiseParams, PPErrorVector, derive_pp_vector
from .surface import (
    LOCATION_GROUPS,
    BatchFrameSimulator,
    CodeLattice,
    ForcedErrors,
    SyndromeRecord,
    charge_defects,
    detection_events,
    pauli_bits,
    stabiliser_records,
)

MODES = ("pauli_only", "with_charge_detection")
BOUNDARY = -1


# --- generic graph + exact matching --------------------------------------------------

@dataclass
class DecodingGraph:
    """Weighted syndrome graph.

    ``edges`` holds ``(u, v, p, fault_ids, label)`` with ``v = BOUNDARY`` for
    edges to the boundary vertex.  Weights are ``ln((1 - p) / p)``.
    """

    n_nodes: int
    edges: list = field(default_factory=list)
    n_faults: int = 0
    has_boundary: bool = False

    def add_edge(self, u: int, v: int, p: float, fault_ids=(), label: str = "") -> None:
        if not 0.0 < p <= 0.5:
            raise ValueError(f"edge probability must be in (0, 0.5], got {p}")
        self.edges.append((u, v, p, tuple(sorted(fault_ids)), label))
        if v == BOUNDARY:
            self.has_boundary = True

    @staticmethod
    def weight(p: float) -> float:
        return float(np.log((1 - p) / p))

    def weights(self) -> np.ndarray:
        return np.array([self.weight(e[2]) for e in self.edges])

    def to_pymatching(self) -> pymatching.Matching:
        m = pymatching.Matching()
        for u, v, p, faults, _ in self.edges:
            if v == BOUNDARY:
                m.add_boundary_edge(u, fault_ids=set(faults), weight=self.weight(p), error_probability=p,
                                    merge_strategy="independent")
            else:
                m.add_edge(u, v, fault_ids=set(faults), weight=self.weight(p), error_probability=p,
                           merge_strategy="independent")
        if m.num_detectors < self.n_nodes:
            for u in range(m.num_detectors, self.n_nodes):
                m.add_boundary_edge(u, weight=1e6, merge_strategy="disallow")  # isolated node padding
        return m

    def to_json(self) -> str:
        return json.dumps({"n_nodes": self.n_nodes, "edges": [
            {"u": u, "v": v, "p": p, "weight": self.weight(p), "faults": list(f), "label": lab}
            for u, v, p, f, lab in self.edges]})


@dataclass
class Matching:
    """Pairs of defects (``BOUNDARY`` for a boundary match) and their total weight."""

    pairs: list
    weight: float
    fault_ids: frozenset = frozenset()


def _distance_tables(graph: DecodingGraph):
    """All-pairs shortest paths; the boundary vertex is node ``n_nodes``."""
    n = graph.n_nodes + 1
    best: dict = {}
    for idx, (u, v, p, _, _) in enumerate(graph.edges):
        v = graph.n_nodes if v == BOUNDARY else v
        key = (min(u, v), max(u, v))
        w = graph.weight(p)
        if key not in best or w < best[key][0]:
            best[key] = (w, idx)
    rows, cols, data = [], [], []
    for (u, v), (w, _) in best.items():
        # tiny offset keeps zero-weight edges in the sparse structure
        rows += [u, v]; cols += [v, u]; data += [w + 1e-300, w + 1e-300]
    mat = csr_matrix((data, (rows, cols)), shape=(n, n))
    return mat, best


def mwpm(graph: DecodingGraph, defects) -> Matching:
    """Exact minimum-weight perfect matching of ``defects``.

    Builds the complete defect graph with Dijkstra distances, adds one boundary
    copy per defect (copies are joined to each other at zero cost) and solves
    it with the blossom algorithm.  Ties resolve deterministically by vertex order.
    """
    defects = sorted(int(x) for x in defects)
    if not defects:
        return Matching([], 0.0)
    mat, best = _distance_tables(graph)
    dist, pred = dijkstra(mat, directed=False, indices=defects + [graph.n_nodes], return_predecessors=True)
    bidx = len(defects)
    G = nx.Graph()
    big = 1.0 + 2 * sum(abs(w) for w, _ in best.values())
    n = len(defects)
    for i, j in itertools.combinations(range(n), 2):
        d = dist[i, defects[j]]
        if np.isfinite(d):
            G.add_edge(i, j, weight=big - d)
    if graph.has_boundary:
        for i in range(n):
            d = dist[bidx, defects[i]]
            if np.isfinite(d):
                G.add_edge(i, n + i, weight=big - d)
        for i, j in itertools.combinations(range(n), 2):
            G.add_edge(n + i, n + j, weight=big)
    mate = nx.max_weight_matching(G, maxcardinality=True)
    pairs, total, faults = [], 0.0, set()
    for a, b in sorted(tuple(sorted(e)) for e in mate):
        if a >= n:
            continue
        if b >= n:
            pairs.append((defects[a], BOUNDARY))
            total += dist[bidx, defects[a]]
            faults ^= _path_faults(graph, pred[bidx], graph.n_nodes, defects[a], best)
        else:
            pairs.append((defects[a], defects[b]))
            total += dist[a, defects[b]]
            faults ^= _path_faults(graph, pred[a], defects[a], defects[b], best)
    if 2 * len([p for p in pairs if p[1] != BOUNDARY]) + len([p for p in pairs if p[1] == BOUNDARY]) != n:
        raise ValueError("no perfect matching exists for these defects")
    return Matching(pairs, float(total), frozenset(faults))


def _path_faults(graph, pred_row, src, dst, best) -> set:
    faults: set = set()
    node = dst
    while node != src:
        prev = pred_row[node]
        if prev < 0:
            raise ValueError("defects are disconnected")
        _, idx = best[(min(prev, node), max(prev, node))]
        faults ^= set(graph.edges[idx][3])
        node = prev
    return faults


def brute_force_matching_weight(graph: DecodingGraph, defects) -> float:
    """Minimum matching weight by exhaustive search over pairings and boundary choices."""
    defects = sorted(int(x) for x in defects)
    if not defects:
        return 0.0
    bnode = graph.n_nodes
    # Floyd-Warshall straight from the edge list, independent of the shortest-path code in mwpm
    dist = np.full((bnode + 1, bnode + 1), np.inf)
    np.fill_diagonal(dist, 0.0)
    for u, v, p, _, _ in graph.edges:
        v = bnode if v == BOUNDARY else v
        w = graph.weight(p)
        dist[u, v] = dist[v, u] = min(dist[u, v], w)
    for k in range(bnode + 1):
        dist = np.minimum(dist, dist[:, k:k + 1] + dist[k:k + 1, :])

    @lru_cache(maxsize=None)
    def solve(remaining: tuple) -> float:
        if not remaining:
            return 0.0
        first, rest = remaining[0], remaining[1:]
        best = np.inf
        if graph.has_boundary:
            best = dist[first, bnode] + solve(rest)
        for k, other in enumerate(rest):
            best = min(best, dist[first, other] + solve(rest[:k] + rest[k + 1:]))
        return best

    return float(solve(tuple(defects)))


# --- single-fault enumeration ----------------------------------------------------------

@dataclass
class FaultTable:
    """Effects of every single fault of one round (round 0 of a two-round run).

    Charge events use relative indices: qubit layer ``k`` in ``0..2`` as
    ``k * n_q + q``, X flags at ``3 n_q + o`` and Z flags at ``3 n_q + n_s + o``.
    Detection events use ``l * n_s + s`` (X) and ``2 n_s + l * n_s + s`` (Z)
    with layer ``l`` in ``0..1``.  Pauli bits are ``q`` (X part) and ``n_q + q``.
    """

    d: int
    group: np.ndarray
    loc: np.ndarray
    value: np.ndarray
    charge: list
    detections: list
    paulis: list


def _fault_list(lat: CodeLattice):
    n_q, n_s = lat.n_qubits, lat.n_stabilisers
    out = []
    for g, (name, kind) in enumerate(LOCATION_GROUPS):
        n_loc = n_q if name[0] == "q" else 4 * n_s
        values = range(1, 22) if kind == "pp" else (1,)
        out.extend((g, loc, v) for loc in range(n_loc) for v in values)
    return np.array(out, dtype=np.intp)


@lru_cache(maxsize=16)
def fault_table(lat_d: int, chunk: int = 4096) -> FaultTable:
    from .surface import build_lattice
    lat = build_lattice(lat_d)
    faults = _fault_list(lat)
    n_q, n_s = lat.n_qubits, lat.n_stabilisers
    charge, det, pau = [], [], []
    for start in range(0, len(faults), chunk):
        block = faults[start:start + chunk]
        mech = [(row, 0, LOCATION_GROUPS[g][0], loc, v) for row, (g, loc, v) in enumerate(block)]
        sim = BatchFrameSimulator(lat, ForcedErrors(mech), len(block))
        rec = sim.run(2)
        q = charge_defects(rec)
        if q[:, 3:].any() or rec.x_flags[:, 1].any() or rec.z_flags[:, 1].any():
            raise AssertionError("a single fault reached beyond the next round")
        ch = np.concatenate([q[:, :3].reshape(len(block), -1), rec.x_flags[:, 0], rec.z_flags[:, 0]], axis=1)
        sx, sz = stabiliser_records(lat, rec)
        dx, dz = detection_events(sx), detection_events(sz)
        if dx[:, 2].any() or dz[:, 2].any():
            raise AssertionError("a single fault reached beyond the next round")
        dd = np.concatenate([dx[:, :2].reshape(len(block), -1), dz[:, :2].reshape(len(block), -1)], axis=1)
        xb, zb = pauli_bits(lat, rec.final_frame)
        pb = np.concatenate([xb, zb], axis=1)
        for arr, sink in ((ch, charge), (dd, det), (pb, pau)):
            rows, cols = np.nonzero(arr)
            splits = np.searchsorted(rows, np.arange(1, len(block)))
            sink.extend(tuple(c) for c in np.split(cols, splits))
    return FaultTable(lat_d, faults[:, 0], faults[:, 1], faults[:, 2], charge, det, pau)


def fault_probabilities(table: FaultTable, noise: NoiseParams, pp_vector: PPErrorVector) -> np.ndarray:
    code_p = pp_vector.code_probabilities()
    p = np.empty(len(table.group))
    for g, (name, kind) in enumerate(LOCATION_GROUPS):
        sel = table.group == g
        if kind == "pp":
            p[sel] = code_p[table.value[sel]]
        elif kind == "create":
            p[sel] = noise.p_create
        else:
            p[sel] = noise.p_measure
    return p


# --- index maps -------------------------------------------------------------------------

@dataclass(frozen=True)
class Indexing:
    """Absolute detector and fault-id numbering for ``rounds`` rounds."""

    n_q: int
    n_s: int
    rounds: int

    @property
    def n_charge(self) -> int:
        return (2 * self.rounds + 1) * self.n_q + 2 * self.rounds * self.n_s

    @property
    def n_detection(self) -> int:
        return 2 * (self.rounds + 1) * self.n_s

    @property
    def n_payload(self) -> int:
        return self.n_detection + 2 * self.n_q

    def charge(self, rel: int, t: int) -> int:
        n_q, n_s, T = self.n_q, self.n_s, self.rounds
        if rel < 3 * n_q:
            return rel + 2 * t * n_q
        rel -= 3 * n_q
        flag_base = (2 * T + 1) * n_q
        if rel < n_s:
            return flag_base + t * n_s + rel
        return flag_base + T * n_s + t * n_s + rel - n_s

    def detection(self, rel: int, t: int) -> int:
        n_s, T = self.n_s, self.rounds
        if rel < 2 * n_s:
            return rel + t * n_s
        return (T + 1) * n_s + rel - 2 * n_s + t * n_s

    def pauli(self, rel: int) -> int:
        return self.n_detection + rel

    def charge_vector(self, rec: SyndromeRecord) -> np.ndarray:
        B = rec.qubit_charges.shape[0]
        return np.concatenate([charge_defects(rec).reshape(B, -1),
                               rec.x_flags.reshape(B, -1), rec.z_flags.reshape(B, -1)], axis=1)


def _xor_prob(a: float, b: float) -> float:
    return a + b - 2 * a * b


# --- charge graph -----------------------------------------------------------------------

@dataclass
class ChargeEdge:
    detectors: tuple
    p: float
    payload: frozenset
    label: str


def _charge_edges(lat: CodeLattice, rounds: int, noise: NoiseParams, pp_vector: PPErrorVector):
    """Charge edges plus, per fault occurrence, its absolute effect and edge key."""
    table = fault_table(lat.d)
    probs = fault_probabilities(table, noise, pp_vector)
    idx = Indexing(lat.n_qubits, lat.n_stabilisers, rounds)
    acc: dict = {}
    occurrences = []
    for t in range(rounds):
        for m in np.flatnonzero(probs > 0):
            p = probs[m]
            sig = tuple(sorted(idx.charge(c, t) for c in table.charge[m]))
            eff = frozenset([idx.detection(c, t) for c in table.detections[m]] +
                            [idx.pauli(c) for c in table.paulis[m]])
            occurrences.append((p, sig, eff))
            if not sig:
                continue
            if len(sig) > 2:
                raise AssertionError(f"fault with {len(sig)} charge events")
            n_pauli = sum(1 for b in eff if b >= idx.n_detection)
            rank = (-p, n_pauli, len(eff), tuple(sorted(eff)))
            entry = acc.setdefault(sig, [0.0, None, None])
            entry[0] = _xor_prob(entry[0], p)
            if entry[1] is None or rank < entry[1]:
                entry[1], entry[2] = rank, eff
    edges = {}
    for sig, (p, _, payload) in acc.items():
        edges[sig] = ChargeEdge(sig, p, payload, _charge_label(sig, idx))
    return edges, occurrences, idx


def _charge_label(sig, idx: Indexing) -> str:
    kinds = ["a" if c >= (2 * idx.rounds + 1) * idx.n_q else "y" for c in sig]
    if len(sig) == 1:
        return f"[{kinds[0]}]"
    return "[" + "".join(sorted(kinds)) + "]"


def build_charge_graph(lattice: CodeLattice, rounds: int, noise: NoiseParams,
                       pp_vector: Optional[PPErrorVector] = None) -> DecodingGraph:
    """Space-time charge lattice: qubit-charge and octagon-flag vertices plus one boundary vertex.

    Fault ids of an edge are its payload: detection-event flips followed by
    Pauli bits (see :class:`Indexing`).
    """
    pp_vector = pp_vector or derive_pp_vector(noise)
    edges, _, idx = _charge_edges(lattice, rounds, noise, pp_vector)
    g = DecodingGraph(idx.n_charge, n_faults=idx.n_payload)
    for sig in sorted(edges):
        e = edges[sig]
        v = sig[1] if len(sig) == 2 else BOUNDARY
        g.add_edge(sig[0], v, min(e.p, 0.5), e.payload, e.label)
    return g


# Correction tables for a matched [ay] edge on neighbour i (octagon order).
AY_SAME = {0: 0, 1: 1, 2: None, 3: None}
AY_OTHER = {0: None, 1: 0, 2: 3, 3: None}


def apply_ay_corrections(lattice: CodeLattice, matched_ay_edges) -> tuple[np.ndarray, np.ndarray]:
    """Pauli correction for matched ``[ay]`` edges given as ``(kind, octagon, neighbour_index)``.

    X octagons apply ``[Z~_i][X-_i]`` and Z octagons ``[X~_i][Z-_i]``, where
    ``~`` picks neighbour ``0, 1, -, -`` and ``-`` picks ``-, 0, 3, -``.
    Returns ``(x_bits, z_bits)`` over qubits.
    """
    xb = np.zeros(lattice.n_qubits, dtype=np.uint8)
    zb = np.zeros(lattice.n_qubits, dtype=np.uint8)
    for kind, octagon, i in matched_ay_edges:
        nb = (lattice.x_neighbours if kind == "X" else lattice.z_neighbours)[octagon]
        same, other = (zb, xb) if kind == "X" else (xb, zb)
        if AY_SAME[i] is not None:
            same[nb[AY_SAME[i]]] ^= 1
        if AY_OTHER[i] is not None:
            other[nb[AY_OTHER[i]]] ^= 1
    return xb, zb


# --- Pauli graphs ---------------------------------------------------------------------

@dataclass
class PauliEdgeRates:
    """Per-edge flip probabilities of the two cubic lattices.

    ``space[sp]`` has shape ``(T+1, n_q)`` (Pauli on qubit q seen first in layer l)
    and ``time[sp]`` shape ``(T, n_s)`` (stabiliser record error between layers l and l+1);
    ``sp`` is ``"x"`` (X errors, Z stabilisers) or ``"z"``.
    """

    space: dict
    time: dict


def _species_adjacency(lat: CodeLattice):
    """For each species, the two stabilisers adjacent to every qubit."""
    adj = {}
    for sp, kind in (("x", "Z"), ("z", "X")):
        H = lat.check_matrix(kind)
        adj[sp] = [tuple(np.flatnonzero(H[:, q])) for q in range(lat.n_qubits)]
    return adj


def _decompose(dets: set, paulis: set, adj, n_s: int):
    """Split a detection pattern of one species into space and time edges."""
    dets = set(dets)
    space, time = [], []
    for q in sorted(paulis):
        s1, s2 = adj[q]
        layers = sorted({l for (l, s) in dets if s in (s1, s2)})
        both = [l for l in layers if (l, s1) in dets and (l, s2) in dets]
        if both:
            l = both[0]
        elif layers:
            l = layers[0]
        else:
            continue  # a stabiliser-equivalent part of the residual; no detection footprint
        space.append((l, q))
        dets ^= {(l, s1), (l, s2)}
    by_stab: dict = {}
    for l, s in dets:
        by_stab.setdefault(s, []).append(l)
    for s, layers in by_stab.items():
        layers.sort()
        for a, b in zip(layers[0::2], layers[1::2]):
            time.extend((l, s) for l in range(a, b))
    return space, time


def pauli_edge_rates(lattice: CodeLattice, rounds: int, noise: NoiseParams,
                     pp_vector: Optional[PPErrorVector] = None,
                     mode: str = "with_charge_detection") -> PauliEdgeRates:
    """Edge probabilities of the cubic lattices from the residual of every fault.

    In ``with_charge_detection`` mode a fault with a charge signature leaves the
    residual of its own effect and the payload of its charge edge.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    pp_vector = pp_vector or derive_pp_vector(noise)
    edges, occurrences, idx = _charge_edges(lattice, rounds, noise, pp_vector)
    n_q, n_s, T = idx.n_q, idx.n_s, rounds
    adj = _species_adjacency(lattice)
    space = {sp: np.zeros((T + 1, n_q)) for sp in "xz"}
    time = {sp: np.zeros((T, n_s)) for sp in "xz"}
    dz_base = (T + 1) * n_s
    cache: dict = {}
    for p, sig, eff in occurrences:
        resid = eff ^ edges[sig].payload if (sig and mode == "with_charge_detection") else eff
        if not resid:
            continue
        key = resid
        if key not in cache:
            parts = {}
            dx = {(b // n_s, b % n_s) for b in resid if b < dz_base}
            dz = {((b - dz_base) // n_s, (b - dz_base) % n_s) for b in resid if dz_base <= b < idx.n_detection}
            xq = {b - idx.n_detection for b in resid if idx.n_detection <= b < idx.n_detection + n_q}
            zq = {b - idx.n_detection - n_q for b in resid if b >= idx.n_detection + n_q}
            parts["x"] = _decompose(dz, xq, adj["x"], n_s)
            parts["z"] = _decompose(dx, zq, adj["z"], n_s)
            cache[key] = parts
        for sp, (sp_edges, t_edges) in cache[key].items():
            for l, q in sp_edges:
                space[sp][l, q] = _xor_prob(space[sp][l, q], p)
            for l, s in t_edges:
                time[sp][l, s] = _xor_prob(time[sp][l, s], p)
    return PauliEdgeRates(space, time)


def build_pauli_graph(lattice: CodeLattice, rounds: int, effective_pauli_probs) -> dict:
    """Cubic space-time lattices for both species.

    Args:
        effective_pauli_probs: a :class:`PauliEdgeRates`, or a dict with scalar
            or array entries ``space_x, space_z, time_x, time_z``.

    Returns:
        ``{"x": DecodingGraph, "z": DecodingGraph}``; vertex ``l * n_s + s`` is
        the detection event of stabiliser ``s`` in layer ``l`` and the fault id of
        a space edge is its qubit.
    """
    T, n_q, n_s = rounds, lattice.n_qubits, lattice.n_stabilisers
    if isinstance(effective_pauli_probs, PauliEdgeRates):
        rates = effective_pauli_probs
    else:
        rates = PauliEdgeRates(
            {sp: np.broadcast_to(effective_pauli_probs[f"space_{sp}"], (T + 1, n_q)) for sp in "xz"},
            {sp: np.broadcast_to(effective_pauli_probs[f"time_{sp}"], (T, n_s)) for sp in "xz"})
    adj = _species_adjacency(lattice)
    graphs = {}
    for sp in "xz":
        g = DecodingGraph((T + 1) * n_s, n_faults=n_q)
        for l in range(T + 1):
            for q in range(n_q):
                p = float(rates.space[sp][l, q])
                if p > 0:
                    s1, s2 = adj[sp][q]
                    g.add_edge(l * n_s + s1, l * n_s + s2, min(p, 0.5), (q,), "space")
        for l in range(T):
            for s in range(n_s):
                p = float(rates.time[sp][l, s])
                if p > 0:
                    g.add_edge(l * n_s + s, (l + 1) * n_s + s, min(p, 0.5), (), "time")
        graphs[sp] = g
    return graphs


# --- full pipeline ---------------------------------------------------------------------

@dataclass
class Decoder:
    """Matchers and index maps for one (lattice, rounds, noise, mode)."""

    lattice: CodeLattice
    rounds: int
    mode: str
    index: Indexing
    charge: Optional[pymatching.Matching]
    pauli: dict
    charge_graph: Optional[DecodingGraph] = None
    pauli_graphs: Optional[dict] = None


def build_decoder(lattice: CodeLattice, rounds: int, noise: NoiseParams,
                  pp_vector: Optional[PPErrorVector] = None,
                  mode: str = "with_charge_detection") -> Decoder:
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    pp_vector = pp_vector or derive_pp_vector(noise)
    idx = Indexing(lattice.n_qubits, lattice.n_stabilisers, rounds)
    cg = None
    charge = None
    if mode == "with_charge_detection":
        cg = build_charge_graph(lattice, rounds, noise, pp_vector)
        if cg.edges:
            charge = cg.to_pymatching()
    rates = pauli_edge_rates(lattice, rounds, noise, pp_vector, mode)
    pg = build_pauli_graph(lattice, rounds, rates)
    pauli = {sp: (g.to_pymatching() if g.edges else None) for sp, g in pg.items()}
    return Decoder(lattice, rounds, mode, idx, charge, pauli, cg, pg)


@dataclass
class Corrections:
    """Total Pauli correction per shot and the residual it leaves."""

    x: np.ndarray
    z: np.ndarray
    residual_x: np.ndarray
    residual_z: np.ndarray


def decode_batch(dec: Decoder, rec: SyndromeRecord) -> Corrections:
    """Decode a batch of shots; the residual always has an empty syndrome."""
    lat, idx = dec.lattice, dec.index
    B = rec.qubit_charges.shape[0]
    n_q, n_s = idx.n_q, idx.n_s
    sx, sz = stabiliser_records(lat, rec)
    dets = np.concatenate([detection_events(sx).reshape(B, -1), detection_events(sz).reshape(B, -1)], axis=1)
    xb, zb = pauli_bits(lat, rec.final_frame)
    corr_x = np.zeros((B, n_q), dtype=np.uint8)
    corr_z = np.zeros((B, n_q), dtype=np.uint8)
    if dec.charge is not None:
        syn = idx.charge_vector(rec)
        pred = _decode(dec.charge, syn, idx.n_payload)
        dets ^= pred[:, :idx.n_detection]
        corr_x ^= pred[:, idx.n_detection:idx.n_detection + n_q]
        corr_z ^= pred[:, idx.n_detection + n_q:]
    half = idx.n_detection // 2
    for sp, d_part, corr in (("x", dets[:, half:], corr_x), ("z", dets[:, :half], corr_z)):
        if dec.pauli[sp] is not None:
            corr ^= _decode(dec.pauli[sp], d_part, n_q)
        elif d_part.any():
            raise ValueError("detection events but no Pauli edges")
    return Corrections(corr_x, corr_z, xb ^ corr_x, zb ^ corr_z)


def _decode(matcher: pymatching.Matching, syndrome: np.ndarray, n_obs: int) -> np.ndarray:
    syn = np.zeros((syndrome.shape[0], matcher.num_detectors), dtype=np.uint8)
    syn[:, :syndrome.shape[1]] = syndrome
    pred = matcher.decode_batch(syn)
    out = np.zeros((syndrome.shape[0], n_obs), dtype=np.uint8)
    out[:, :pred.shape[1]] = pred
    return out


def decode_shot(dec: Decoder, rec: SyndromeRecord, shot: int = 0) -> Corrections:
    """Decode one shot of a record batch."""
    sl = slice(shot, shot + 1)
    one = SyndromeRecord(rec.qubit_charges[sl], rec.x_outcomes[sl], rec.x_flags[sl],
                         rec.z_outcomes[sl], rec.z_flags[sl], rec.final_frame[sl])
    return decode_batch(dec, one)
