"""Fidelity models: Werner-pair idling, teleported-gate fidelity and circuit-level accumulation."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, NamedTuple

import numpy as np

from .circuit import CNOT, H, X, Gate, GateKind, _apply, gate_matrix


@dataclass(frozen=True)
class NoiseParams:
    kappa: float = 0.002  # 1/kappa = 150 us at 300 ns per local CNOT
    f_1q: float = 0.9999
    f_cnot: float = 0.999
    f_meas: float = 0.998
    f_epr: float = 0.99
    idle_mode: str = "per_qubit"  # or "circuit"

    def __post_init__(self):
        for name in ("f_1q", "f_cnot", "f_meas", "f_epr"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValueError(f"{name} must be in (0, 1], got {v}")
        if self.kappa < 0:
            raise ValueError("kappa must be non-negative")
        if self.idle_mode not in ("per_qubit", "circuit"):
            raise ValueError(f"unknown idle_mode {self.idle_mode!r}")


def werner_fidelity(f0: float, kappa: float, t: float) -> float:
    decay = math.exp(-2.0 * kappa * t)
    return f0 * decay + (1.0 - decay) / 4.0


def idle_factor(kappa: float, t: float) -> float:
    return math.exp(-kappa * t)


_PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)


def bell_density_matrix(f: float) -> np.ndarray:
    """Werner state with fidelity ``f`` to |Phi+>, in the computational basis."""
    if not 0.25 <= f <= 1.0:
        raise ValueError(f"Werner fidelity must be in [0.25, 1], got {f}")
    lam = (4.0 * f - 1.0) / 3.0
    return lam * np.outer(_PHI_PLUS, _PHI_PLUS.conj()) + (1.0 - lam) * np.eye(4) / 4.0


# ---------------------------------------------------------------------------
# CNOT teleportation, density-matrix evaluation
#
# qubit layout: 0,1 reference; 2 control c (node A); 3 target t (node B);
# 4 Bell half a (node A); 5 Bell half b (node B)

_N = 6
_DIM = 2**_N
_PAULIS = [np.eye(2, dtype=complex), gate_matrix(X(0)),
           np.array([[0, -1j], [1j, 0]]), np.diag([1.0 + 0j, -1.0])]


def _full(mat: np.ndarray, qubits: tuple[int, ...]) -> np.ndarray:
    u = np.eye(_DIM, dtype=complex).reshape((2,) * _N + (_DIM,))
    return _apply(u, mat, qubits, _N).reshape(_DIM, _DIM)


def _projector(qubit: int, outcome: int) -> np.ndarray:
    p = np.zeros((2, 2), dtype=complex)
    p[outcome, outcome] = 1.0
    return _full(p, (qubit,))


@lru_cache(maxsize=None)
def _ops():
    pauli2 = {}
    for pair in ((2, 4), (5, 3)):
        pauli2[pair] = [_full(np.kron(p, q), pair) for p in _PAULIS for q in _PAULIS]
    return {
        "cnot_ca": _full(gate_matrix(CNOT(0, 1)), (2, 4)),
        "cnot_bt": _full(gate_matrix(CNOT(0, 1)), (5, 3)),
        "h_b": _full(gate_matrix(H(0)), (5,)),
        "x_t": _full(_PAULIS[1], (3,)),
        "z_c": _full(_PAULIS[3], (2,)),
        "proj": {(q, m): _projector(q, m) for q in (4, 5) for m in (0, 1)},
        "pauli2": pauli2,
    }


def _depolarize(rho: np.ndarray, pair: tuple[int, int], p: float) -> np.ndarray:
    if p == 0.0:
        return rho
    twirl = sum(P @ rho @ P.conj().T for P in _ops()["pauli2"][pair]) / 16.0
    return (1.0 - p) * rho + p * twirl


def _ptrace_last_two(rho: np.ndarray) -> np.ndarray:
    r = rho.reshape(16, 4, 16, 4)
    return np.einsum("aibi->ab", r)


def _teleported_choi(f_bell: float, f_cnot: float, f_meas: float) -> np.ndarray:
    ops = _ops()
    phi = np.zeros(16, dtype=complex)
    for i in range(4):
        phi[i * 4 + i] = 0.5  # |i>_ref |i>_(c,t)
    data = np.outer(phi, phi.conj())
    rho = np.kron(data, bell_density_matrix(f_bell))

    # depolarizing strength with the requested average gate fidelity (d = 4)
    p = 4.0 / 3.0 * (1.0 - f_cnot)
    rho = ops["cnot_ca"] @ rho @ ops["cnot_ca"].conj().T
    rho = _depolarize(rho, (2, 4), p)
    rho = ops["cnot_bt"] @ rho @ ops["cnot_bt"].conj().T
    rho = _depolarize(rho, (5, 3), p)
    # X-basis readout of b
    rho = ops["h_b"] @ rho @ ops["h_b"].conj().T

    out = np.zeros_like(rho)
    flip = 1.0 - f_meas
    for m1 in (0, 1):
        for m2 in (0, 1):
            proj = ops["proj"][(4, m1)] @ ops["proj"][(5, m2)]
            branch = proj @ rho @ proj
            for r1 in (0, 1):
                for r2 in (0, 1):
                    w = (f_meas if r1 == m1 else flip) * (f_meas if r2 == m2 else flip)
                    c = np.eye(_DIM, dtype=complex)
                    if r1:
                        c = ops["x_t"] @ c
                    if r2:
                        c = ops["z_c"] @ c
                    out += w * (c @ branch @ c.conj().T)
    return _ptrace_last_two(out)


def teleported_gate_fidelity(f_bell: float, params: NoiseParams | None = None, *,
                             f_cnot: float | None = None, f_meas: float | None = None) -> float:
    """Average gate fidelity of a CNOT teleported through a Werner pair of fidelity ``f_bell``."""
    params = params or NoiseParams()
    f_cnot = params.f_cnot if f_cnot is None else f_cnot
    f_meas = params.f_meas if f_meas is None else f_meas
    choi = _teleported_choi(f_bell, f_cnot, f_meas)
    ideal = np.kron(np.eye(4), gate_matrix(CNOT(0, 1)))
    phi = np.zeros(16, dtype=complex)
    for i in range(4):
        phi[i * 4 + i] = 0.5
    target = ideal @ phi
    f_ent = float(np.real(target.conj() @ choi @ target))
    return (4.0 * f_ent + 1.0) / 5.0


class TeleportTable:
    """Teleported-gate fidelity tabulated against Bell-pair fidelity.

    The teleported channel is linear in the resource state and the Werner
    family is affine in F, so linear interpolation on the grid is exact up to
    rounding.
    """

    def __init__(self, params: NoiseParams, points: int = 64):
        self.params = params
        self.grid = np.linspace(0.25, 1.0, points)
        self.values = np.array([teleported_gate_fidelity(f, params) for f in self.grid])

    def __call__(self, f_bell: float) -> float:
        return float(np.interp(f_bell, self.grid, self.values))

    def at_age(self, f0: float, age: float) -> float:
        return self(werner_fidelity(f0, self.params.kappa, age))


@lru_cache(maxsize=32)
def teleport_table(params: NoiseParams) -> TeleportTable:
    return TeleportTable(params)


# ---------------------------------------------------------------------------
# circuit-level accumulation

class GateRecord(NamedTuple):
    gate: int
    qubits: tuple[int, ...]
    start: float
    end: float
    fidelity: float


def local_gate_fidelity(gate: Gate, params: NoiseParams) -> float:
    if gate.kind is GateKind.MEASURE:
        return params.f_meas
    if gate.kind is GateKind.SWAP:
        return params.f_cnot**3
    return params.f_cnot if gate.is_two_qubit else params.f_1q


def idle_times(records: Iterable[GateRecord]) -> dict[int, float]:
    """Per-qubit idle time between its first gate start and its last gate end."""
    first: dict[int, float] = {}
    last: dict[int, float] = {}
    busy: dict[int, float] = {}
    for r in records:
        for q in r.qubits:
            first[q] = min(first.get(q, r.start), r.start)
            last[q] = max(last.get(q, r.end), r.end)
            busy[q] = busy.get(q, 0.0) + (r.end - r.start)
    return {q: max(0.0, last[q] - first[q] - busy[q]) for q in first}


def accumulate_fidelity(records: Iterable[GateRecord], kappa: float, idle_mode: str = "per_qubit") -> float:
    records = list(records)
    log_f = math.fsum(math.log(r.fidelity) for r in records)
    idle = idle_times(records)
    if idle:
        if idle_mode == "per_qubit":
            log_f -= kappa * math.fsum(idle.values())
        elif idle_mode == "circuit":
            log_f -= kappa * math.fsum(idle.values()) / len(idle)
        else:
            raise ValueError(f"unknown idle_mode {idle_mode!r}")
    return math.exp(log_f)
