"""Discrete-event executor for distributed circuits under the six architecture designs."""
from __future__ import annotations

import heapq
import io
import json
import math
import os
import statistics
from collections import Counter, deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .circuit import Circuit, GateKind
from .entnet import BufferPool, EntanglementService, EntParams, acquire, attempt_success_prob
from .noise import GateRecord, NoiseParams, accumulate_fidelity, local_gate_fidelity, teleport_table
from .partition import Assignment, DistributedCircuit, annotate_remote
from .scheduler import Policy, VariantTable, build_variant_table, segment_size, select_policy

DESIGNS = ("original", "sync_buf", "async_buf", "adapt_buf", "init_buf", "ideal")


class DeadlockError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimConfig:
    design: str = "async_buf"
    ent: EntParams = field(default_factory=EntParams)
    noise: NoiseParams = field(default_factory=NoiseParams)
    t_1q: float = 0.1
    t_cnot: float = 1.0
    t_meas: float = 5.0
    t_remote_overhead: float | None = None  # default t_cnot + t_meas + t_1q
    seed: int = 0
    runs: int = 50
    m: int | None = None  # segment size; default from comm pairs x p_succ
    record_log: bool = False

    def __post_init__(self):
        if self.design not in DESIGNS:
            raise ValueError(f"unknown design {self.design!r}; expected one of {DESIGNS}")
        for name in ("t_1q", "t_cnot", "t_meas"):
            if getattr(self, name) <= 0:
                raise ValueError(f"latency {name} must be positive")
        if self.t_remote_overhead is not None and self.t_remote_overhead <= 0:
            raise ValueError("t_remote_overhead must be positive")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")

    @property
    def remote_latency(self) -> float:
        if self.t_remote_overhead is not None:
            return self.t_remote_overhead
        return self.t_cnot + self.t_meas + self.t_1q

    @property
    def segment_m(self) -> int:
        if self.m is not None:
            return self.m
        return segment_size(self.ent.n_comm_pairs, attempt_success_prob(self.ent))

    def latency(self, kind: GateKind) -> float:
        if kind is GateKind.MEASURE:
            return self.t_meas
        if kind is GateKind.SWAP:
            return 3 * self.t_cnot
        return self.t_cnot if kind.arity == 2 else self.t_1q


@dataclass
class SimResult:
    design: str
    seed: int
    depth: float
    fidelity: float
    stats: dict
    log: list | None = None

    def to_json(self) -> dict:
        return {"design": self.design, "seed": self.seed, "depth": self.depth,
             "fidelity": self.fidelity, "stats": self.stats}


# ---------------------------------------------------------------------------

def ideal_depth(circuit: Circuit, config: SimConfig | None = None) -> float:
    """ASAP list-scheduling makespan with every gate local."""
    config = config or SimConfig()
    avail = [0.0] * circuit.n_qubits
    end = 0.0
    for g in circuit.gates:
        t = max(avail[q] for q in g.qubits)
        t = round(t + config.latency(g.kind), 9)
        for q in g.qubits:
            avail[q] = t
        end = max(end, t)
    return end


def _ideal_records(circuit: Circuit, config: SimConfig) -> list[GateRecord]:
    avail = [0.0] * circuit.n_qubits
    out = []
    for i, g in enumerate(circuit.gates):
        s = max(avail[q] for q in g.qubits)
        e = round(s + config.latency(g.kind), 9)
        for q in g.qubits:
            avail[q] = e
        out.append(GateRecord(i, g.qubits, s, e, local_gate_fidelity(g, config.noise)))
    return out


@dataclass
class Prepared:
    """Per-(circuit, assignment, config) data shared by every seed of a sweep."""
    dcirc: DistributedCircuit
    table: VariantTable
    latency: list[float]
    base_fid: list[float]
    # A segment's front gate can start once each of its qubits has finished all
    # gates of earlier segments. watch[q] lists (count needed on q, condition id)
    # sorted by count; cond_seg/cond_size give each condition's segment and arity.
    watch: list[list[tuple[int, int]]]
    cond_seg: list[int]
    cond_size: list[int]


def prepare(circuit: Circuit, assignment: Assignment, config: SimConfig) -> Prepared:
    dcirc = annotate_remote(circuit, assignment)
    for g, r in zip(circuit.gates, dcirc.remote):
        if r and g.kind is GateKind.SWAP:
            raise ValueError("remote SWAP is not supported; decompose it into CNOTs first")
    table = build_variant_table(dcirc, config.segment_m)
    latency = [config.remote_latency if r else config.latency(g.kind) for g, r in zip(circuit.gates, dcirc.remote)]
    base_fid = [local_gate_fidelity(g, config.noise) for g in circuit.gates]
    before = Counter()
    watch: list[list[tuple[int, int]]] = [[] for _ in range(circuit.n_qubits)]
    cond_seg, cond_size = [], []
    for k, seg in enumerate(table.segments):
        seen: set[int] = set()
        for g in seg.gates:
            if not seen.intersection(g.qubits):
                cid = len(cond_seg)
                cond_seg.append(k)
                cond_size.append(len(g.qubits))
                for q in g.qubits:
                    watch[q].append((before[q], cid))
            seen.update(g.qubits)
        for g in seg.gates:
            for q in g.qubits:
                before[q] += 1
    for w in watch:
        w.sort()
    return Prepared(dcirc, table, latency, base_fid, watch, cond_seg, cond_size)


class _SlotDraws:
    """Per-pair uniform streams indexed by attempt slot."""

    def __init__(self, seed: int, n_pairs: int):
        self._gens = [np.random.default_rng([seed, pair]) for pair in range(n_pairs)]
        self._buf = [np.empty(0) for _ in range(n_pairs)]

    def __call__(self, pair: int, slot: int) -> float:
        buf = self._buf[pair]
        if slot >= len(buf):
            extra = self._gens[pair].random(max(256, slot + 1 - len(buf), len(buf)))
            buf = self._buf[pair] = np.concatenate([buf, extra])
        return float(buf[slot])


def run(circuit: Circuit, assignment: Assignment, config: SimConfig, prepared: Prepared | None = None) -> SimResult:
    if config.design == "ideal":
        records = _ideal_records(circuit, config)
        depth = max((r.end for r in records), default=0.0)
        fid = accumulate_fidelity(records, config.noise.kappa, config.noise.idle_mode)
        log = [(r.end, "gate", r.gate, r.start, r.fidelity, *r.qubits) for r in records] if config.record_log else None
        stats = {"links_generated": 0, "links_consumed": 0, "links_discarded": 0, "links_blocked": 0,
                 "links_in_buffer": 0, "n_remote": 0, "policies": {}, "remote_wait_hist": {}}
        return SimResult(config.design, config.seed, depth, fid, stats, log)
    prepared = prepared or prepare(circuit, assignment, config)
    return _Run(circuit, config, prepared).execute()


class _Run:
    def __init__(self, circuit: Circuit, config: SimConfig, prep: Prepared):
        self.circuit = circuit
        self.config = config
        self.prep = prep
        design = config.design
        ent = config.ent
        if design == "sync_buf" or design == "original":
            ent = replace(ent, mode="sync")
        else:
            ent = replace(ent, mode="async")
        self.hold = design == "original"
        self.adaptive = design in ("adapt_buf", "init_buf")
        capacity = ent.n_comm_pairs if self.hold else ent.n_buffer_pairs
        self.pool = BufferPool(capacity)
        noise = config.noise
        swap_lat = 3 * config.t_cnot if ent.swap_cnots == 3 and not self.hold else 0.0
        swap_fid = noise.f_cnot ** 6 if swap_lat else 1.0
        self.service = EntanglementService(ent, self.pool, _SlotDraws(config.seed, ent.n_comm_pairs),
                                           noise.f_epr, hold_on_comm=self.hold,
                                           swap_latency=swap_lat, swap_fidelity=swap_fid)
        if design == "init_buf":
            self.service.prefill(0.0, noise.f_epr)
        self.ent = ent
        self.teleport = teleport_table(noise)
        self.log: list | None = [] if config.record_log else None

    def execute(self) -> SimResult:
        cfg, prep = self.config, self.prep
        gates = self.circuit.gates
        remote = prep.dcirc.remote
        latency = prep.latency
        n_gates = len(gates)
        queues = [deque() for _ in range(self.circuit.n_qubits)]
        started = [False] * n_gates
        ready_at = [0.0] * n_gates
        completed_on = [0] * self.circuit.n_qubits
        records: list[GateRecord] = []
        waiting: deque[int] = deque()
        running: list[tuple[float, int]] = []
        rec_of: dict[int, GateRecord] = {}
        waits: list[float] = []
        policies: Counter = Counter()
        log = self.log
        table = prep.table
        n_segs = len(table.segments)
        next_seg = 0
        pool, service = self.pool, self.service
        kappa = cfg.noise.kappa

        def load(upto: int, t: float) -> list[int]:
            nonlocal next_seg
            touched = []
            e = len(pool)
            while next_seg <= upto:
                pol = select_policy(e, table.m) if self.adaptive else Policy.ORIGINAL
                policies[pol.value] += 1
                if log is not None:
                    log.append((t, "segment", next_seg, pol.value, e))
                for gi in table.variants[next_seg][pol]:
                    for q in gates[gi].qubits:
                        queues[q].append(gi)
                    touched.append(gi)
                next_seg += 1
            return touched

        cond_left = list(prep.cond_size)
        watch_ptr = [0] * self.circuit.n_qubits
        ready_seg = -1

        def advance_watch(q: int) -> None:
            nonlocal ready_seg
            w, i, done = prep.watch[q], watch_ptr[q], completed_on[q]
            while i < len(w) and w[i][0] <= done:
                cid = w[i][1]
                cond_left[cid] -= 1
                if cond_left[cid] == 0 and prep.cond_seg[cid] > ready_seg:
                    ready_seg = prep.cond_seg[cid]
                i += 1
            watch_ptr[q] = i

        def try_load(t: float) -> list[int]:
            return load(ready_seg, t) if ready_seg >= next_seg else []

        def is_ready(gi: int) -> bool:
            if started[gi]:
                return False
            for q in gates[gi].qubits:
                qq = queues[q]
                if not qq or qq[0] != gi:
                    return False
            return True

        def start(gi: int, t: float, fid: float) -> None:
            started[gi] = True
            end = round(t + latency[gi], 9)
            heapq.heappush(running, (end, gi))
            rec = GateRecord(gi, gates[gi].qubits, t, end, fid)
            records.append(rec)
            rec_of[gi] = rec

        def dispatch(cands, t: float) -> None:
            for gi in cands:
                if not is_ready(gi):
                    continue
                if remote[gi]:
                    started[gi] = True  # claimed; waits for a link
                    ready_at[gi] = t
                    waiting.append(gi)
                else:
                    start(gi, t, prep.base_fid[gi])
            while waiting and pool.links:
                gi = waiting.popleft()
                link = acquire(pool, t)
                age = t - link.created_at
                fid = self.teleport.at_age(link.f0, age)
                started[gi] = False
                start(gi, t, fid)
                waits.append(t - ready_at[gi])
                if self.hold:
                    service.release(link.pair, round(t + latency[gi], 9))
                if log is not None:
                    log.append((t, "link_consume", link.id, gi, age))

        # t = 0
        t = 0.0
        if self.adaptive:
            for q in range(self.circuit.n_qubits):
                advance_watch(q)
            touched = load(0, t) + try_load(t)
        else:
            touched = load(n_segs - 1, t)
        self._log_links(service.advance(t))
        dispatch(touched, t)

        remaining = n_gates
        p_succ = service.p
        while remaining:
            t_gate = running[0][0] if running else math.inf
            t_link = service.next_event_time()
            t = min(t_gate, t_link)
            if t == math.inf or (not running and waiting and (p_succ == 0 or self.ent.n_comm_pairs == 0)
                                 and not pool.links):
                raise DeadlockError(
                    f"no progress possible at t={t}: {len(waiting)} remote gate(s) waiting, "
                    f"p_succ={p_succ}, comm pairs={self.ent.n_comm_pairs}")
            cands: list[int] = []
            while running and running[0][0] == t:
                _, gi = heapq.heappop(running)
                remaining -= 1
                for q in gates[gi].qubits:
                    queues[q].popleft()
                    completed_on[q] += 1
                    if self.adaptive:
                        advance_watch(q)
                    if queues[q]:
                        cands.append(queues[q][0])
                if log is not None:
                    r = rec_of[gi]
                    log.append((t, "gate", gi, r.start, r.fidelity, *r.qubits))
            self._log_links(service.advance(t))
            if self.adaptive and next_seg < n_segs:
                cands.extend(try_load(t))
            if next_seg < n_segs and not running and not waiting and not cands:
                cands.extend(load(next_seg, t))
            dispatch(cands, t)

        depth = max((r.end for r in records), default=0.0)
        fid = accumulate_fidelity(records, kappa, cfg.noise.idle_mode)
        hist = Counter(int(w // 5) * 5 for w in waits)
        stats = {
            "links_generated": pool.generated,
            "links_consumed": pool.consumed,
            "links_discarded": pool.discarded,
            "links_blocked": pool.blocked,
            "links_in_buffer": len(pool),
            "n_remote": prep.dcirc.n_remote,
            "policies": dict(policies),
            "remote_wait_hist": {str(k): v for k, v in sorted(hist.items())},
            "mean_remote_wait": statistics.fmean(waits) if waits else 0.0,
        }
        return SimResult(cfg.design, cfg.seed, depth, fid, stats, log)

    def _log_links(self, events) -> None:
        if self.log is not None:
            self.log.extend(events)


# ---------------------------------------------------------------------------
# event log

def format_log(log: list) -> str:
    """One ``t,kind,fields...`` line per event; floats use repr so replay is exact."""
    out = io.StringIO()
    for ev in log:
        out.write(",".join(repr(x) if isinstance(x, float) else str(x) for x in ev))
        out.write("\n")
    return out.getvalue()


def parse_log(text: str) -> list[tuple]:
    events = []
    for line in text.splitlines():
        if not line.strip():
            continue
        parts = line.split(",")
        t, kind, rest = float(parts[0]), parts[1], parts[2:]
        if kind == "gate":
            gi, start, fid = int(rest[0]), float(rest[1]), float(rest[2])
            events.append((t, kind, gi, start, fid, *(int(q) for q in rest[3:])))
        else:
            events.append((t, kind, *rest))
    return events


def replay_log(events: list[tuple], kappa: float, idle_mode: str = "per_qubit") -> tuple[float, float]:
    """Recompute (depth, fidelity) from the gate records of an event log."""
    records = [GateRecord(ev[2], tuple(ev[5:]), ev[3], ev[0], ev[4]) for ev in events if ev[1] == "gate"]
    depth = max((r.end for r in records), default=0.0)
    return depth, accumulate_fidelity(records, kappa, idle_mode)


# ---------------------------------------------------------------------------
# sweeps

@dataclass
class SweepReport:
    results: list[SimResult]

    @property
    def depths(self) -> list[float]:
        return [r.depth for r in self.results]

    @property
    def fidelities(self) -> list[float]:
        return [r.fidelity for r in self.results]

    @property
    def mean_depth(self) -> float:
        return statistics.fmean(self.depths)

    @property
    def std_depth(self) -> float:
        return statistics.pstdev(self.depths)

    @property
    def mean_fidelity(self) -> float:
        return statistics.fmean(self.fidelities)

    @property
    def std_fidelity(self) -> float:
        return statistics.pstdev(self.fidelities)

    def summary(self) -> dict:
        return {"runs": len(self.results), "mean_depth": self.mean_depth, "std_depth": self.std_depth,
                "mean_fidelity": self.mean_fidelity, "std_fidelity": self.std_fidelity}


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("DQC_THREADS", "1")))
    except ValueError:
        return 1


def _run_seeds(args) -> list[SimResult]:
    circuit, assignment, config, seeds = args
    prep = None if config.design == "ideal" else prepare(circuit, assignment, config)
    return [run(circuit, assignment, replace(config, seed=s), prep) for s in seeds]


def sweep(circuit: Circuit, assignment: Assignment, config: SimConfig, seeds, workers: int | None = None) -> SweepReport:
    seeds = list(seeds)
    if not seeds:
        raise ValueError("sweep needs at least one seed")
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(seeds) == 1:
        return SweepReport(_run_seeds((circuit, assignment, config, seeds)))
    chunks = [seeds[i::workers] for i in range(workers)]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        parts = list(ex.map(_run_seeds, [(circuit, assignment, config, c) for c in chunks]))
    by_seed = {r.seed: r for part in parts for r in part}
    return SweepReport([by_seed[s] for s in seeds])


def result_json(result: SimResult, path) -> None:
    Path(path).write_text(json.dumps(result.to_json(), indent=1) + "\n")
