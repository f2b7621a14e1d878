"""Heralded entanglement generation by communication-qubit pairs and the link buffer."""
from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np


@dataclass(frozen=True)
class EntParams:
    p_pq1: float = 1.0
    p_pq2: float = 1.0
    L1: float = 0.0  # km
    L2: float = 0.0
    L_att: float = 20.0
    p_s: float = 0.5
    p_succ_override: float | None = None
    T_EG: float = 10.0  # in local-CNOT units
    n_comm_pairs: int = 10
    n_buffer_pairs: int = 10
    mode: str = "sync"
    subgroups: int | None = None
    cutoff: float | None = None
    swap_cnots: int = 0

    def __post_init__(self):
        for name in ("p_pq1", "p_pq2"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be a probability")
        if not 0.0 <= self.p_s <= 0.5:
            raise ValueError("BSM success probability p_s must be in [0, 0.5]")
        if self.p_succ_override is not None and not 0.0 <= self.p_succ_override <= 1.0:
            raise ValueError("p_succ_override must be a probability")
        if min(self.L1, self.L2) < 0 or self.L_att <= 0:
            raise ValueError("channel lengths must be >= 0 and L_att > 0")
        if self.T_EG < 1:
            raise ValueError("T_EG must be at least one local cycle")
        if self.n_comm_pairs < 0 or self.n_buffer_pairs < 0:
            raise ValueError("pair counts must be non-negative")
        if self.mode not in ("sync", "async"):
            raise ValueError(f"unknown attempt mode {self.mode!r}")
        if self.subgroups is not None and not 1 <= self.subgroups <= self.T_EG:
            raise ValueError(f"subgroups must be in [1, T_EG={self.T_EG}], got {self.subgroups}")
        if self.cutoff is not None and self.cutoff <= 0:
            raise ValueError("cutoff must be positive")
        if self.swap_cnots not in (0, 3):
            raise ValueError("swap_cnots must be 0 or 3")

    @property
    def n_subgroups(self) -> int:
        if self.subgroups is not None:
            return self.subgroups
        return max(1, min(self.n_comm_pairs, int(self.T_EG)))


def attempt_success_prob(params: EntParams) -> float:
    if params.p_succ_override is not None:
        return params.p_succ_override
    eta1 = math.exp(-params.L1 / params.L_att)
    eta2 = math.exp(-params.L2 / params.L_att)
    return params.p_pq1 * params.p_pq2 * eta1 * eta2 * params.p_s


def attempt_offset(params: EntParams, pair_index: int) -> float:
    if not 0 <= pair_index < params.n_comm_pairs:
        raise IndexError(f"pair {pair_index} outside 0..{params.n_comm_pairs - 1}")
    if params.mode == "sync":
        return 0.0
    k = params.n_subgroups
    return (pair_index % k) * params.T_EG / k


def attempt_times(params: EntParams, pair_index: int) -> Iterator[float]:
    """Start times of a pair's attempts (each completes T_EG later)."""
    offset = attempt_offset(params, pair_index)
    k = 0
    while True:
        yield offset + k * params.T_EG
        k += 1


@dataclass
class EntLink:
    id: int
    created_at: float
    f0: float
    pair: int = -1

    def __post_init__(self):
        if not 0.25 < self.f0 <= 1.0:
            raise ValueError(f"link fidelity must be in (0.25, 1], got {self.f0}")


@dataclass
class BufferPool:
    capacity: int
    links: deque = field(default_factory=deque)
    generated: int = 0
    consumed: int = 0
    discarded: int = 0
    blocked: int = 0

    def __len__(self) -> int:
        return len(self.links)

    @property
    def full(self) -> bool:
        return len(self.links) >= self.capacity

    def insert(self, link: EntLink) -> bool:
        if self.full:
            self.blocked += 1
            return False
        self.links.append(link)
        self.generated += 1
        return True

    def expire(self, now: float, cutoff: float | None) -> list[EntLink]:
        if cutoff is None:
            return []
        dropped = []
        while self.links and now - self.links[0].created_at >= cutoff - 1e-9:
            dropped.append(self.links.popleft())
        self.discarded += len(dropped)
        return dropped

    def conserved(self) -> bool:
        return self.generated == self.consumed + self.discarded + len(self.links)


def acquire(pool: BufferPool, at_t: float | None = None) -> EntLink | None:
    """Pop the oldest buffered link, or None when the buffer is empty."""
    if not pool.links:
        return None
    pool.consumed += 1
    return pool.links.popleft()


# event kinds reported by the generation service
LINK_GEN = "link_gen"
LINK_BLOCK = "link_block"
LINK_DISCARD = "link_discard"


class EntanglementService:
    """Attempt schedule for all communication pairs feeding one BufferPool.

    ``uniform(pair, slot)`` supplies the random draw for a pair's ``slot``-th
    attempt; keying draws by slot keeps success patterns aligned across
    designs that share a seed. With ``hold_on_comm`` a successful pair keeps
    its link on the communication qubits and skips attempts until the link is
    released (no separate buffer).
    """

    def __init__(self, params: EntParams, pool: BufferPool, uniform: Callable[[int, int], float],
                 f0: float, *, hold_on_comm: bool = False, swap_latency: float = 0.0,
                 swap_fidelity: float = 1.0):
        self.params = params
        self.pool = pool
        self.uniform = uniform
        self.p = attempt_success_prob(params)
        self.f0 = f0 * swap_fidelity
        self.hold = hold_on_comm
        self.swap_latency = swap_latency
        self._next_id = 0
        self._offsets = [attempt_offset(params, i) for i in range(params.n_comm_pairs)]
        # heap of (completion time, pair, slot, kind); kind 0 = attempt, 1 = delayed insert
        self._heap: list[tuple] = []
        for i in range(params.n_comm_pairs):
            self._schedule(i, 0)
        self._pending_insert: dict[int, EntLink] = {}

    def _schedule(self, pair: int, slot: int) -> None:
        start = self._offsets[pair] + slot * self.params.T_EG
        heapq.heappush(self._heap, (_r(start + self.params.T_EG), pair, slot, 0))

    def new_link(self, created_at: float, f0: float | None = None, pair: int = -1) -> EntLink:
        link = EntLink(self._next_id, created_at, self.f0 if f0 is None else f0, pair)
        self._next_id += 1
        return link

    def prefill(self, t: float, f0: float) -> None:
        while not self.pool.full:
            self.pool.insert(self.new_link(t, f0))

    def next_event_time(self) -> float:
        t = self._heap[0][0] if self._heap else math.inf
        if self.params.cutoff is not None and self.pool.links:
            t = min(t, _r(self.pool.links[0].created_at + self.params.cutoff))
        return t

    def advance(self, to_t: float) -> list[tuple]:
        """Process every attempt completion and expiry at or before ``to_t``."""
        events: list[tuple] = []
        cutoff = self.params.cutoff
        while True:
            t = self.next_event_time()
            if t > to_t:
                break
            for link in self.pool.expire(t, cutoff):
                events.append((t, LINK_DISCARD, link.id, link.pair))
                if self.hold:
                    self.release(link.pair, t)
            while self._heap and self._heap[0][0] == t:
                _, pair, slot, kind = heapq.heappop(self._heap)
                if kind == 1:
                    link = self._pending_insert.pop(slot)
                    self._store(t, link, events)
                    continue
                if self.uniform(pair, slot) < self.p:
                    link = self.new_link(t, pair=pair)
                    if self.hold:
                        self._store(t, link, events)
                        continue  # pair keeps its link; attempts pause until release()
                    if self.swap_latency > 0:
                        self._pending_insert[link.id] = link
                        heapq.heappush(self._heap, (_r(t + self.swap_latency), pair, link.id, 1))
                    else:
                        self._store(t, link, events)
                self._schedule(pair, slot + 1)
        return events

    def _store(self, t: float, link: EntLink, events: list) -> None:
        if self.pool.insert(link):
            events.append((t, LINK_GEN, link.id, link.pair))
        else:
            events.append((t, LINK_BLOCK, link.id, link.pair))

    def release(self, pair: int, t: float) -> None:
        """Free a holding pair; it resumes at its first attempt slot starting at or after t."""
        if not self.hold or pair < 0:
            return
        slot = max(0, math.ceil((t - self._offsets[pair]) / self.params.T_EG - 1e-9))
        self._schedule(pair, slot)


def _r(t: float) -> float:
    return round(t, 9)


def step(pool: BufferPool, params: EntParams, rng: np.random.Generator, from_t: float, to_t: float,
         f0: float = 0.99) -> list[tuple]:
    """Run buffered attempts completing in (from_t, to_t] against ``pool``.

    Stateless with respect to the pairs: draws come from ``rng`` in
    completion-time order, so the same rng state replays the same trace.
    """
    if not from_t < to_t:
        raise ValueError("step needs from_t < to_t")
    completions = []
    for pair in range(params.n_comm_pairs):
        off = attempt_offset(params, pair)
        k = max(0, math.floor((from_t - off) / params.T_EG) - 1)
        while True:
            c = _r(off + (k + 1) * params.T_EG)
            if c > to_t:
                break
            if c > from_t:
                completions.append((c, pair))
            k += 1
    completions.sort()
    p = attempt_success_prob(params)
    events: list[tuple] = []
    next_id = pool.generated + pool.blocked
    for c, pair in completions:
        _expire_until(pool, params.cutoff, c, events)
        if rng.random() < p:
            link = EntLink(next_id, c, f0, pair)
            next_id += 1
            if pool.insert(link):
                events.append((c, LINK_GEN, link.id, pair))
            else:
                events.append((c, LINK_BLOCK, link.id, pair))
    _expire_until(pool, params.cutoff, to_t, events)
    return events


def _expire_until(pool: BufferPool, cutoff: float | None, t_end: float, events: list) -> None:
    if cutoff is None:
        return
    while pool.links and pool.links[0].created_at + cutoff <= t_end + 1e-9:
        t = _r(pool.links[0].created_at + cutoff)
        for link in pool.expire(t, cutoff):
            events.append((t, LINK_DISCARD, link.id, link.pair))
