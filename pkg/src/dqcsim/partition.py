"""Qubit-to-node assignment minimizing the number of remote two-qubit gates."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .circuit import Circuit


class PartitionError(ValueError):
    pass


@dataclass(frozen=True)
class InteractionGraph:
    n_vertices: int
    weights: dict[tuple[int, int], int]  # keys (i, j) with i < j

    def weight_matrix(self) -> np.ndarray:
        w = np.zeros((self.n_vertices, self.n_vertices), dtype=np.int64)
        for (i, j), c in self.weights.items():
            w[i, j] = w[j, i] = c
        return w


@dataclass(frozen=True)
class Assignment:
    node_of: tuple[int, ...]
    capacities: tuple[int, ...]

    def __post_init__(self):
        counts = Counter(self.node_of)
        for node in counts:
            if not 0 <= node < len(self.capacities):
                raise PartitionError(f"node id {node} outside 0..{len(self.capacities) - 1}")
        for node, cap in enumerate(self.capacities):
            if counts[node] > cap:
                raise PartitionError(f"node {node} holds {counts[node]} qubits, capacity {cap}")

    @property
    def n_nodes(self) -> int:
        return len(self.capacities)

    def nodes(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in self.capacities]
        for q, node in enumerate(self.node_of):
            out[node].append(q)
        return out


@dataclass(frozen=True)
class DistributedCircuit:
    circuit: Circuit
    assignment: Assignment
    remote: tuple[bool, ...]  # per gate

    @property
    def n_remote(self) -> int:
        return sum(self.remote)

    @property
    def n_local_2q(self) -> int:
        return self.circuit.count_2q() - self.n_remote


def interaction_graph(circuit: Circuit) -> InteractionGraph:
    weights: Counter = Counter()
    for g in circuit.gates:
        if g.is_two_qubit:
            a, b = sorted(g.qubits)
            weights[(a, b)] += 1
    return InteractionGraph(circuit.n_qubits, dict(weights))


def cut_weight(graph: InteractionGraph, node_of) -> int:
    return sum(w for (i, j), w in graph.weights.items() if node_of[i] != node_of[j])


def _refine(w: np.ndarray, side: np.ndarray, caps: tuple[int, int]) -> np.ndarray:
    """Gain-driven pass refinement of a two-way split (FM bookkeeping, KL-style swaps).

    Each pass tentatively applies the best move among single-vertex transfers
    (when the destination has room) and vertex-pair swaps, locks the touched
    vertices, and finally keeps the best prefix of the move sequence. Passes
    repeat until one yields no improvement. Ties go to the lower qubit index.
    """
    n = len(side)
    side = side.copy()
    while True:
        cur = side.copy()
        locked = np.zeros(n, dtype=bool)
        sizes = [int(np.sum(cur == 0)), int(np.sum(cur == 1))]
        total, best_total, best_len = 0, 0, 0
        history = []
        while True:
            same = cur[:, None] == cur[None, :]
            d = np.where(same, -w, w).sum(axis=1)  # cut reduction from moving v alone
            free = np.flatnonzero(~locked)
            cands = []
            for v in free:
                if sizes[1 - cur[v]] < caps[1 - cur[v]]:
                    cands.append((-int(d[v]), (int(v),)))
            a_side = free[cur[free] == 0]
            b_side = free[cur[free] == 1]
            if len(a_side) and len(b_side):
                gains = d[a_side][:, None] + d[b_side][None, :] - 2 * w[np.ix_(a_side, b_side)]
                top = gains.max()
                for ia, ib in zip(*np.nonzero(gains == top)):
                    a, b = int(a_side[ia]), int(b_side[ib])
                    cands.append((-int(top), (min(a, b), max(a, b))))
            if not cands:
                break
            neg_gain, moved = min(cands)
            for v in moved:
                sizes[cur[v]] -= 1
                cur[v] = 1 - cur[v]
                sizes[cur[v]] += 1
                locked[v] = True
            total -= neg_gain
            history.append(moved)
            if total > best_total:
                best_total, best_len = total, len(history)
        if best_total <= 0:
            return side
        for moved in history[:best_len]:
            for v in moved:
                side[v] = 1 - side[v]


def bipartition(graph: InteractionGraph, capacities, seed: int = 0, n_starts: int = 16) -> Assignment:
    caps = tuple(int(c) for c in capacities)
    n = graph.n_vertices
    if len(caps) != 2:
        raise PartitionError("bipartition needs exactly two capacities")
    if min(caps) < 0 or sum(caps) < n:
        raise PartitionError(f"capacities {caps} cannot hold {n} qubits")
    w = graph.weight_matrix()
    rng = np.random.default_rng(seed)
    # balanced start: fill proportionally to capacity
    n0 = min(caps[0], max(n - caps[1], round(n * caps[0] / sum(caps)))) if sum(caps) else 0
    best_side, best_cut = None, None
    for _ in range(n_starts):
        side = np.ones(n, dtype=np.int64)
        side[rng.permutation(n)[:n0]] = 0
        side = _refine(w, side, caps)
        c = cut_weight(graph, side)
        if best_cut is None or c < best_cut:
            best_side, best_cut = side, c
    return Assignment(tuple(int(s) for s in best_side), caps)


def annotate_remote(circuit: Circuit, assignment: Assignment) -> DistributedCircuit:
    if len(assignment.node_of) < circuit.n_qubits:
        raise PartitionError("assignment does not cover every qubit")
    node = assignment.node_of
    remote = tuple(g.is_two_qubit and node[g.qubits[0]] != node[g.qubits[1]] for g in circuit.gates)
    return DistributedCircuit(circuit, assignment, remote)


def contiguous_assignment(n_qubits: int, capacities) -> Assignment:
    node_of = []
    for node, cap in enumerate(capacities):
        node_of.extend([node] * cap)
    if len(node_of) < n_qubits:
        raise PartitionError(f"capacities {tuple(capacities)} cannot hold {n_qubits} qubits")
    return Assignment(tuple(node_of[:n_qubits]), tuple(capacities))


def load_assignment(path, capacities, n_qubits: int | None = None) -> Assignment:
    """Read ``qubit node`` lines (``#`` comments allowed) and validate them."""
    found: dict[int, int] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2 or not all(p.lstrip("-").isdigit() for p in parts):
            raise PartitionError(f"line {lineno}: expected 'qubit node', got {raw!r}")
        q, node = int(parts[0]), int(parts[1])
        if q < 0:
            raise PartitionError(f"line {lineno}: negative qubit {q}")
        if q in found:
            raise PartitionError(f"line {lineno}: duplicate qubit {q}")
        if not 0 <= node < len(capacities):
            raise PartitionError(f"line {lineno}: node {node} outside 0..{len(capacities) - 1}")
        found[q] = node
    n = n_qubits if n_qubits is not None else len(found)
    missing = [q for q in range(n) if q not in found]
    if missing or len(found) != n:
        raise PartitionError(f"assignment must list qubits 0..{n - 1} exactly once (missing {missing[:5]})")
    return Assignment(tuple(found[q] for q in range(n)), tuple(int(c) for c in capacities))


def write_assignment(assignment: Assignment, path) -> None:
    Path(path).write_text("".join(f"{q} {node}\n" for q, node in enumerate(assignment.node_of)))
