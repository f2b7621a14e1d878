"""Gate-level circuit IR, dependency DAG, commutation checks and a small unitary simulator."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from math import cos, sin, sqrt

import networkx as nx
import numpy as np


class GateKind(str, Enum):
    H = "h"
    X = "x"
    RX = "rx"
    RZ = "rz"
    RZZ = "rzz"
    CNOT = "cx"
    CPHASE = "cp"
    SWAP = "swap"
    MEASURE = "measure"

    @property
    def arity(self) -> int:
        return 2 if self in _TWO_QUBIT else 1

    @property
    def parametric(self) -> bool:
        return self in _PARAMETRIC


_TWO_QUBIT = frozenset({GateKind.RZZ, GateKind.CNOT, GateKind.CPHASE, GateKind.SWAP})
_PARAMETRIC = frozenset({GateKind.RX, GateKind.RZ, GateKind.RZZ, GateKind.CPHASE})


class CircuitError(ValueError):
    pass


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    qubits: tuple[int, ...]
    theta: float | None = None

    def __post_init__(self):
        if not isinstance(self.kind, GateKind):
            object.__setattr__(self, "kind", GateKind(self.kind))
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if len(self.qubits) != self.kind.arity:
            raise CircuitError(f"{self.kind.name} acts on {self.kind.arity} qubit(s), got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise CircuitError(f"repeated qubit in {self.kind.name}{self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise CircuitError(f"negative qubit index in {self.qubits}")
        if self.kind.parametric:
            if self.theta is None:
                raise CircuitError(f"{self.kind.name} needs an angle")
            object.__setattr__(self, "theta", float(self.theta))
        elif self.theta is not None:
            raise CircuitError(f"{self.kind.name} takes no angle")

    @property
    def is_two_qubit(self) -> bool:
        return self.kind.arity == 2

    def __repr__(self) -> str:
        arg = "" if self.theta is None else f"({self.theta:.6g})"
        return f"{self.kind.name}{arg}{list(self.qubits)}"


# convenience constructors
def H(q): return Gate(GateKind.H, (q,))
def X(q): return Gate(GateKind.X, (q,))
def RX(theta, q): return Gate(GateKind.RX, (q,), theta)
def RZ(theta, q): return Gate(GateKind.RZ, (q,), theta)
def RZZ(theta, a, b): return Gate(GateKind.RZZ, (a, b), theta)
def CNOT(c, t): return Gate(GateKind.CNOT, (c, t))
def CPHASE(theta, a, b): return Gate(GateKind.CPHASE, (a, b), theta)
def SWAP(a, b): return Gate(GateKind.SWAP, (a, b))
def MEASURE(q): return Gate(GateKind.MEASURE, (q,))


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.n_qubits < 1:
            raise CircuitError("a circuit needs at least one qubit")
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if max(g.qubits) >= self.n_qubits:
                raise CircuitError(f"{g!r} out of range for {self.n_qubits} qubits")

    def __len__(self) -> int:
        return len(self.gates)

    def count_1q(self) -> int:
        return sum(1 for g in self.gates if not g.is_two_qubit and g.kind is not GateKind.MEASURE)

    def count_2q(self) -> int:
        return sum(1 for g in self.gates if g.is_two_qubit)

    def with_gates(self, gates) -> Circuit:
        return Circuit(self.n_qubits, tuple(gates))


# ---------------------------------------------------------------------------
# dependency DAG

@dataclass(frozen=True)
class GateDAG:
    n_nodes: int
    edges: frozenset[tuple[int, int]]

    def graph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(range(self.n_nodes))
        g.add_edges_from(self.edges)
        return g

    def predecessors(self) -> list[list[int]]:
        preds: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for u, v in sorted(self.edges):
            preds[v].append(u)
        return preds

    def longest_path_layers(self) -> int:
        """Number of gates on the longest dependency chain."""
        level = [0] * self.n_nodes
        preds = self.predecessors()
        for v in range(self.n_nodes):  # gate index order is topological
            level[v] = 1 + max((level[u] for u in preds[v]), default=0)
        return max(level, default=0)

    def random_topological_order(self, rng: np.random.Generator) -> list[int]:
        """One random topological order (Kahn's algorithm with random tie-breaks)."""
        preds = self.predecessors()
        succs: list[list[int]] = [[] for _ in range(self.n_nodes)]
        for u, v in self.edges:
            succs[u].append(v)
        indeg = [len(p) for p in preds]
        ready = [v for v in range(self.n_nodes) if indeg[v] == 0]
        order = []
        while ready:
            v = ready.pop(int(rng.integers(len(ready))))
            order.append(v)
            for w in succs[v]:
                indeg[w] -= 1
                if indeg[w] == 0:
                    ready.append(w)
        return order


def build_dag(circuit: Circuit) -> GateDAG:
    last: dict[int, int] = {}
    g = nx.DiGraph()
    g.add_nodes_from(range(len(circuit.gates)))
    for j, gate in enumerate(circuit.gates):
        for q in gate.qubits:
            if q in last:
                g.add_edge(last[q], j)
            last[q] = j
    reduced = nx.transitive_reduction(g)
    return GateDAG(len(circuit.gates), frozenset(reduced.edges()))


# ---------------------------------------------------------------------------
# gate matrices (qubit listed first is the most significant bit)

_H = np.array([[1, 1], [1, -1]], dtype=complex) / sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)


def gate_matrix(gate: Gate) -> np.ndarray:
    k, t = gate.kind, gate.theta
    if k is GateKind.H:
        return _H
    if k is GateKind.X:
        return _X
    if k is GateKind.RX:
        return np.array([[cos(t / 2), -1j * sin(t / 2)], [-1j * sin(t / 2), cos(t / 2)]], dtype=complex)
    if k is GateKind.RZ:
        return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])
    if k is GateKind.RZZ:
        a, b = np.exp(-0.5j * t), np.exp(0.5j * t)
        return np.diag([a, b, b, a])
    if k is GateKind.CNOT:
        return np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
    if k is GateKind.CPHASE:
        return np.diag([1, 1, 1, np.exp(1j * t)])
    if k is GateKind.SWAP:
        return np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)
    raise CircuitError(f"{k.name} has no unitary")


def _apply(state: np.ndarray, mat: np.ndarray, qubits: tuple[int, ...], n: int) -> np.ndarray:
    """Apply a 1- or 2-qubit matrix to a tensor whose first n axes are qubits."""
    k = len(qubits)
    m = mat.reshape((2,) * (2 * k))
    out = np.tensordot(m, state, axes=(list(range(k, 2 * k)), list(qubits)))
    # tensordot puts the gate's output axes first; move them back
    return np.moveaxis(out, list(range(k)), list(qubits))


MAX_UNITARY_QUBITS = 12


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    n = circuit.n_qubits
    if n > MAX_UNITARY_QUBITS:
        raise CircuitError(f"unitary limited to {MAX_UNITARY_QUBITS} qubits, got {n}")
    if any(g.kind is GateKind.MEASURE for g in circuit.gates):
        raise CircuitError("circuit contains measurements")
    dim = 2**n
    u = np.eye(dim, dtype=complex).reshape((2,) * n + (dim,))
    for g in circuit.gates:
        u = _apply(u, gate_matrix(g), g.qubits, n)
    return u.reshape(dim, dim)


def equivalent_up_to_phase(u: np.ndarray, v: np.ndarray, atol: float = 1e-8) -> bool:
    u, v = np.asarray(u), np.asarray(v)
    if u.shape != v.shape:
        raise CircuitError(f"dimension mismatch {u.shape} vs {v.shape}")
    idx = np.unravel_index(np.argmax(np.abs(u)), u.shape)
    if abs(v[idx]) < atol:
        return False
    phase = v[idx] / u[idx]
    phase /= abs(phase)
    return bool(np.max(np.abs(v - phase * u)) <= atol)


# ---------------------------------------------------------------------------
# commutation

def commutes(a: Gate, b: Gate) -> bool:
    shared = set(a.qubits) & set(b.qubits)
    if not shared:
        return True
    if a.kind is GateKind.MEASURE or b.kind is GateKind.MEASURE:
        return False
    # relabel onto the union of qubits, keeping the key canonical for memoization
    union = sorted(set(a.qubits) | set(b.qubits))
    pos = {q: i for i, q in enumerate(union)}
    key_a = (a.kind, a.theta, tuple(pos[q] for q in a.qubits))
    key_b = (b.kind, b.theta, tuple(pos[q] for q in b.qubits))
    return _commutes_local(key_a, key_b, len(union))


@lru_cache(maxsize=65536)
def _commutes_local(key_a, key_b, n: int) -> bool:
    ma = _embed(key_a, n)
    mb = _embed(key_b, n)
    return bool(np.max(np.abs(ma @ mb - mb @ ma)) <= 1e-10)


def _embed(key, n: int) -> np.ndarray:
    kind, theta, qubits = key
    dim = 2**n
    u = np.eye(dim, dtype=complex).reshape((2,) * n + (dim,))
    u = _apply(u, gate_matrix(Gate(kind, qubits, theta)), qubits, n)
    return u.reshape(dim, dim)
