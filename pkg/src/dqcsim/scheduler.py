"""Segmenting a distributed circuit and precompiling ASAP/ALAP remote-gate variants."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .circuit import Circuit, Gate, GateKind, circuit_unitary, commutes, equivalent_up_to_phase
from .partition import DistributedCircuit


class Policy(str, Enum):
    ORIGINAL = "ORIGINAL"
    ASAP = "ASAP"
    ALAP = "ALAP"


@dataclass(frozen=True)
class Segment:
    indices: tuple[int, ...]  # positions in the full circuit, original order
    gates: tuple[Gate, ...]
    remote: tuple[bool, ...]

    @property
    def remote_count(self) -> int:
        return sum(self.remote)


def segment_size(n_comm_pairs: int, p_succ: float) -> int:
    return max(1, math.floor(n_comm_pairs * p_succ + 0.5))


def segment_circuit(dcirc: DistributedCircuit, m: int) -> list[Segment]:
    """Cut after every m-th remote gate; a remote-free tail joins the last segment."""
    if m < 1:
        raise ValueError("segment size m must be >= 1")
    gates, remote = dcirc.circuit.gates, dcirc.remote
    bounds = []
    start, seen = 0, 0
    for i, r in enumerate(remote):
        if r:
            seen += 1
            if seen % m == 0:
                bounds.append((start, i + 1))
                start = i + 1
    if start < len(gates) or not bounds:
        if bounds and not any(remote[start:]):
            bounds[-1] = (bounds[-1][0], len(gates))
        else:
            bounds.append((start, len(gates)))
    return [
        Segment(tuple(range(a, b)), tuple(gates[a:b]), tuple(remote[a:b]))
        for a, b in bounds
    ]


def compile_variant(segment: Segment, policy: Policy | str) -> list[int]:
    """Gate order for one segment under ``policy``, as full-circuit indices.

    Remote gates bubble toward the segment start (ASAP) or end (ALAP) through
    adjacent commuting non-remote gates. Remote gates never pass one another,
    so the lower original index keeps priority.
    """
    policy = Policy(policy)
    order = list(range(len(segment.gates)))
    if policy is Policy.ORIGINAL:
        return [segment.indices[i] for i in order]
    g, rem = segment.gates, segment.remote
    budget = len(order) ** 2
    remotes = [i for i in order if rem[i]]
    if policy is Policy.ALAP:
        remotes.reverse()
    step = -1 if policy is Policy.ASAP else 1
    for r in remotes:
        p = order.index(r)
        while budget > 0:
            nxt = p + step
            if not 0 <= nxt < len(order):
                break
            other = order[nxt]
            if rem[other] or not commutes(g[other], g[r]):
                break
            order[p], order[nxt] = other, r
            p = nxt
            budget -= 1
    return [segment.indices[i] for i in order]


def select_policy(e: int, m: int) -> Policy:
    if e > m:
        return Policy.ASAP
    if e == 0:
        return Policy.ALAP
    return Policy.ORIGINAL


@dataclass(frozen=True)
class VariantTable:
    m: int
    segments: tuple[Segment, ...]
    variants: tuple[dict, ...]  # per segment: Policy -> list of gate indices

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "segments": [
                {
                    "index": k,
                    "remote_count": seg.remote_count,
                    "variants": {p.value: list(v[p]) for p in Policy},
                }
                for k, (seg, v) in enumerate(zip(self.segments, self.variants))
            ],
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1) + "\n")


def build_variant_table(dcirc: DistributedCircuit, m: int) -> VariantTable:
    segs = segment_circuit(dcirc, m)
    variants = tuple({p: compile_variant(s, p) for p in Policy} for s in segs)
    return VariantTable(m, tuple(segs), variants)


def load_variant_table(path) -> dict:
    data = json.loads(Path(path).read_text())
    for seg in data["segments"]:
        ref = sorted(seg["variants"]["ORIGINAL"])
        for name, order in seg["variants"].items():
            Policy(name)
            if sorted(order) != ref:
                raise ValueError(f"segment {seg['index']}: variant {name} is not a permutation of ORIGINAL")
    return data


# ---------------------------------------------------------------------------
# equivalence checking on random segments

_KINDS = [GateKind.H, GateKind.X, GateKind.RX, GateKind.RZ, GateKind.RZZ, GateKind.CNOT,
          GateKind.CPHASE, GateKind.SWAP]


def random_gate(rng: np.random.Generator, n: int) -> Gate:
    kind = _KINDS[int(rng.integers(len(_KINDS)))] if n > 1 else _KINDS[int(rng.integers(4))]
    qubits = tuple(int(q) for q in rng.choice(n, size=kind.arity, replace=False))
    theta = float(rng.uniform(-math.pi, math.pi)) if kind.parametric else None
    return Gate(kind, qubits, theta)


def random_segment(rng: np.random.Generator, n: int, length: int) -> tuple[Circuit, Segment]:
    """Random circuit plus a segment view with remote flags from a random bipartition."""
    circ = Circuit(n, tuple(random_gate(rng, n) for _ in range(length)))
    side = rng.integers(2, size=n)
    remote = tuple(g.is_two_qubit and side[g.qubits[0]] != side[g.qubits[1]] for g in circ.gates)
    return circ, Segment(tuple(range(length)), circ.gates, remote)


def verify_variants(n_max: int = 8, n_segments: int = 100, seed: int = 7, atol: float = 1e-8) -> dict:
    """Check ASAP/ALAP variants against the original unitary on random segments."""
    rng = np.random.default_rng(seed)
    passed = {Policy.ASAP: 0, Policy.ALAP: 0}
    for _ in range(n_segments):
        n = int(rng.integers(2, n_max + 1))
        circ, seg = random_segment(rng, n, int(rng.integers(4, 25)))
        ref = circuit_unitary(circ)
        for pol in passed:
            order = compile_variant(seg, pol)
            u = circuit_unitary(circ.with_gates(circ.gates[i] for i in order))
            passed[pol] += equivalent_up_to_phase(ref, u, atol)
    return {"segments": n_segments, "asap": passed[Policy.ASAP], "alap": passed[Policy.ALAP]}
