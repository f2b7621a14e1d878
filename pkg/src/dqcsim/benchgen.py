"""Deterministic generators for the TLIM, QAOA-MaxCut and QFT benchmark circuits."""
from __future__ import annotations

import math

import numpy as np

from .circuit import Circuit, CPHASE, H, RX, RZ, RZZ

# Trotter angles for the transverse-longitudinal Ising chain (J=1, hx=0.8, hz=0.5, dt=0.1)
TLIM_ZZ = 0.2
TLIM_Z = 0.1
TLIM_X = 0.16

QAOA_GAMMA = 0.4
QAOA_BETA = 0.8


class BenchmarkError(ValueError):
    pass


def gen_tlim(n: int, steps: int) -> Circuit:
    if n < 2 or steps < 1:
        raise BenchmarkError(f"TLIM needs n >= 2 and steps >= 1, got n={n}, steps={steps}")
    gates = []
    for _ in range(steps):
        for start in (0, 1):
            gates.extend(RZZ(TLIM_ZZ, i, i + 1) for i in range(start, n - 1, 2))
        gates.extend(RZ(TLIM_Z, q) for q in range(n))
        gates.extend(RX(TLIM_X, q) for q in range(n))
    return Circuit(n, tuple(gates))


def random_regular_graph(n: int, d: int, rng: np.random.Generator, max_tries: int = 1000) -> list[tuple[int, int]]:
    """Uniform-ish simple d-regular graph by stub pairing.

    Stubs are paired one at a time; a pairing that would create a self-loop or a
    repeated edge is rejected and redrawn. If no legal pair is left the whole
    attempt restarts, up to ``max_tries`` times.
    """
    if d < 0 or d >= n or (n * d) % 2:
        raise BenchmarkError(f"no simple {d}-regular graph on {n} vertices")
    if d == 0:
        return []
    for _ in range(max_tries):
        stubs = [v for v in range(n) for _ in range(d)]
        edges: set[tuple[int, int]] = set()
        misses = 0
        while stubs:
            i, j = (int(x) for x in rng.choice(len(stubs), size=2, replace=False))
            u, v = stubs[i], stubs[j]
            if u == v or (min(u, v), max(u, v)) in edges:
                misses += 1
                if misses < 50:
                    continue
                legal = [
                    (a, b)
                    for a in range(len(stubs))
                    for b in range(a + 1, len(stubs))
                    if stubs[a] != stubs[b] and (min(stubs[a], stubs[b]), max(stubs[a], stubs[b])) not in edges
                ]
                if not legal:
                    break
                i, j = legal[int(rng.integers(len(legal)))]
                u, v = stubs[i], stubs[j]
            misses = 0
            edges.add((min(u, v), max(u, v)))
            for k in sorted((i, j), reverse=True):
                stubs.pop(k)
        if not stubs:
            return sorted(edges)
    raise BenchmarkError(f"failed to draw a {d}-regular graph on {n} vertices in {max_tries} tries")


def gen_qaoa_maxcut(n: int, degree: int, layers: int, seed: int) -> Circuit:
    if layers < 1:
        raise BenchmarkError("QAOA needs at least one layer")
    edges = random_regular_graph(n, degree, np.random.default_rng(seed))
    gates = [H(q) for q in range(n)]
    for _ in range(layers):
        gates.extend(RZZ(QAOA_GAMMA, u, v) for u, v in edges)
        gates.extend(RX(QAOA_BETA, q) for q in range(n))
    return Circuit(n, tuple(gates))


def gen_qft(n: int) -> Circuit:
    if n < 1:
        raise BenchmarkError("QFT needs at least one qubit")
    gates = []
    for i in range(n):
        gates.append(H(i))
        gates.extend(CPHASE(math.pi / 2 ** (j - i), i, j) for j in range(i + 1, n))
    return Circuit(n, tuple(gates))


def qaoa_graph(circuit: Circuit) -> list[tuple[int, int]]:
    """Recover the MaxCut graph edges from the first QAOA layer."""
    edges = []
    for g in circuit.gates:
        if g.is_two_qubit:
            e = tuple(sorted(g.qubits))
            if edges and e in edges:
                break
            edges.append(e)
        elif edges:
            break
    return edges


BENCHMARKS = ("tlim", "qaoa", "qft")


def generate(bench: str, n: int, *, steps: int = 10, degree: int = 4, layers: int = 1, seed: int = 0) -> Circuit:
    if bench == "tlim":
        return gen_tlim(n, steps)
    if bench == "qaoa":
        return gen_qaoa_maxcut(n, degree, layers, seed)
    if bench == "qft":
        return gen_qft(n)
    raise BenchmarkError(f"unknown benchmark {bench!r}")
