import math
from dataclasses import replace

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dqcsim.benchgen import gen_qaoa_maxcut, gen_qft, gen_tlim
from dqcsim.circuit import CNOT, RZZ, SWAP, Circuit, build_dag
from dqcsim.engine import (DESIGNS, DeadlockError, SimConfig, format_log, ideal_depth, parse_log, replay_log, run,
                           sweep)
from dqcsim.entnet import EntParams
from dqcsim.noise import NoiseParams, teleported_gate_fidelity
from dqcsim.partition import Assignment, bipartition, interaction_graph
from dqcsim.scheduler import random_gate

SPLIT2 = Assignment((0, 1), (1, 1))
CERTAIN = EntParams(p_succ_override=1.0, n_comm_pairs=1, n_buffer_pairs=1)


def weighted_longest_path(circ, cfg):
    g = build_dag(circ).graph()
    best = {}
    for v in nx.topological_sort(g):
        best[v] = cfg.latency(circ.gates[v].kind) + max((best[u] for u in g.predecessors(v)), default=0.0)
    return max(best.values(), default=0.0)


def test_ideal_depth_examples():
    assert ideal_depth(Circuit(2, (CNOT(0, 1),))) == 1.0
    assert ideal_depth(Circuit(3, (CNOT(0, 1), CNOT(1, 2)))) == 2.0
    qft = gen_qft(32)
    assert ideal_depth(qft) == pytest.approx(weighted_longest_path(qft, SimConfig()))
    assert ideal_depth(qft) == pytest.approx(61.2)


@pytest.mark.parametrize("circ", [gen_tlim(12, 3), gen_qaoa_maxcut(12, 3, 2, seed=1), gen_qft(9)])
def test_ideal_depth_matches_longest_path(circ):
    assert ideal_depth(circ) == pytest.approx(weighted_longest_path(circ, SimConfig()))


def test_ideal_design():
    c = gen_tlim(32, 10)
    a = bipartition(interaction_graph(c), (16, 16))
    r = run(c, a, SimConfig(design="ideal"))
    assert r.depth == ideal_depth(c)
    n = NoiseParams()
    assert r.fidelity <= n.f_cnot ** 310 * n.f_1q ** 640 + 1e-15


def test_single_remote_gate_hand_simulation():
    c = Circuit(2, (CNOT(0, 1),))
    sync = run(c, SPLIT2, SimConfig(design="sync_buf", ent=CERTAIN))
    assert sync.depth == pytest.approx(16.1)
    init = run(c, SPLIT2, SimConfig(design="init_buf", ent=CERTAIN))
    assert init.depth == pytest.approx(6.1)
    orig = run(c, SPLIT2, SimConfig(design="original", ent=CERTAIN))
    assert orig.depth == pytest.approx(16.1)
    fresh = teleported_gate_fidelity(0.99)
    assert sync.fidelity == pytest.approx(fresh)
    assert init.fidelity == pytest.approx(fresh)  # prefilled at t=0 and consumed at t=0


def test_remote_overhead_override():
    c = Circuit(2, (CNOT(0, 1),))
    r = run(c, SPLIT2, SimConfig(design="init_buf", ent=CERTAIN, t_remote_overhead=1.0))
    assert r.depth == pytest.approx(1.0)


def test_link_age_lowers_remote_fidelity():
    # the second remote gate waits for 20 local CNOTs on qubit 0 while its prefilled link ages
    gates = (CNOT(0, 1),) + tuple(CNOT(0, 2) for _ in range(20)) + (CNOT(0, 1),)
    c = Circuit(3, gates)
    a = Assignment((0, 1, 0), (2, 1))
    ent = EntParams(p_succ_override=0.0, n_comm_pairs=1, n_buffer_pairs=2)
    r = run(c, a, SimConfig(design="init_buf", ent=ent, record_log=True))
    consumed = [ev for ev in r.log if ev[1] == "link_consume"]
    assert [ev[4] for ev in consumed] == pytest.approx([0.0, 26.1])
    fids = {ev[2]: ev[4] for ev in r.log if ev[1] == "gate"}
    assert fids[21] < fids[0]


def test_deadlock_is_reported():
    c = Circuit(2, (CNOT(0, 1),))
    with pytest.raises(DeadlockError):
        run(c, SPLIT2, SimConfig(design="async_buf", ent=EntParams(p_succ_override=0.0)))
    with pytest.raises(DeadlockError):
        run(c, SPLIT2, SimConfig(design="sync_buf", ent=EntParams(n_comm_pairs=0)))


def test_remote_swap_rejected():
    with pytest.raises(ValueError, match="SWAP"):
        run(Circuit(2, (SWAP(0, 1),)), SPLIT2, SimConfig(design="async_buf"))


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(design="warp")
    with pytest.raises(ValueError):
        SimConfig(t_cnot=0.0)
    with pytest.raises(ValueError):
        SimConfig(t_remote_overhead=-1.0)
    assert SimConfig().remote_latency == pytest.approx(6.1)
    assert SimConfig(ent=EntParams(p_succ_override=0.4)).segment_m == 4


def test_adaptive_policy_follows_buffer():
    c = gen_qaoa_maxcut(16, 4, 1, seed=0)
    a = bipartition(interaction_graph(c), (8, 8))
    ent = EntParams(p_succ_override=0.4, n_comm_pairs=10, n_buffer_pairs=10)
    init = run(c, a, SimConfig(design="init_buf", ent=ent, record_log=True))
    first = next(ev for ev in init.log if ev[1] == "segment")
    assert first[2:] == (0, "ASAP", 10)
    adapt = run(c, a, SimConfig(design="adapt_buf", ent=ent, record_log=True))
    first = next(ev for ev in adapt.log if ev[1] == "segment")
    assert first[2:] == (0, "ALAP", 0)
    assert sum(adapt.stats["policies"].values()) == sum(1 for ev in adapt.log if ev[1] == "segment")


def test_determinism_and_single_seed_sweep():
    c = gen_qaoa_maxcut(16, 4, 1, seed=0)
    a = bipartition(interaction_graph(c), (8, 8))
    cfg = SimConfig(design="async_buf", ent=EntParams(p_succ_override=0.4), seed=3)
    r1, r2 = run(c, a, cfg), run(c, a, cfg)
    assert (r1.depth, r1.fidelity, r1.stats) == (r2.depth, r2.fidelity, r2.stats)
    rep = sweep(c, a, cfg, [3])
    assert rep.mean_depth == r1.depth and rep.mean_fidelity == r1.fidelity and rep.std_depth == 0.0


def test_parallel_sweep_matches_serial():
    c = gen_qaoa_maxcut(16, 4, 1, seed=0)
    a = bipartition(interaction_graph(c), (8, 8))
    cfg = SimConfig(design="adapt_buf", ent=EntParams(p_succ_override=0.4))
    serial = sweep(c, a, cfg, range(6), workers=1)
    parallel = sweep(c, a, cfg, range(6), workers=2)
    assert [(r.seed, r.depth, r.fidelity) for r in serial.results] == \
        [(r.seed, r.depth, r.fidelity) for r in parallel.results]


def test_common_random_numbers_across_designs():
    # with a full-size buffer the async and adapt designs see the same attempt outcomes
    c = gen_tlim(8, 2)
    a = bipartition(interaction_graph(c), (4, 4))
    ent = EntParams(p_succ_override=0.4)
    r1 = run(c, a, SimConfig(design="async_buf", ent=ent, seed=9, record_log=True))
    r2 = run(c, a, SimConfig(design="adapt_buf", ent=ent, seed=9, record_log=True))
    gen1 = [ev[0] for ev in r1.log if ev[1] == "link_gen"]
    gen2 = [ev[0] for ev in r2.log if ev[1] == "link_gen"]
    n = min(len(gen1), len(gen2))
    assert gen1[:n] == gen2[:n]


def test_log_round_trip_and_replay():
    c = gen_qaoa_maxcut(12, 3, 1, seed=2)
    a = bipartition(interaction_graph(c), (6, 6))
    cfg = SimConfig(design="adapt_buf", ent=EntParams(p_succ_override=0.4), record_log=True,
                    noise=NoiseParams(idle_mode="per_qubit"))
    r = run(c, a, cfg)
    events = parse_log(format_log(r.log))
    depth, fid = replay_log(events, cfg.noise.kappa, cfg.noise.idle_mode)
    assert depth == r.depth
    assert fid == pytest.approx(r.fidelity, rel=1e-12)


def _random_case(seed, n):
    rng = np.random.default_rng(seed)
    gates = []
    for _ in range(int(rng.integers(1, 40))):
        g = random_gate(rng, n)
        if g.kind.value == "swap":
            g = RZZ(0.3, *g.qubits)
        gates.append(g)
    side = tuple(int(x) for x in rng.permutation([0] * (n // 2) + [1] * (n - n // 2)))
    return Circuit(n, tuple(gates)), Assignment(side, (n // 2, n - n // 2))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 7), design=st.sampled_from(DESIGNS),
       p=st.sampled_from([0.1, 0.4, 1.0]), pairs=st.integers(1, 6), cutoff=st.sampled_from([None, 40.0]))
def test_engine_invariants(seed, n, design, p, pairs, cutoff):
    c, a = _random_case(seed, n)
    ent = EntParams(p_succ_override=p, n_comm_pairs=pairs, n_buffer_pairs=pairs, cutoff=cutoff)
    cfg = SimConfig(design=design, ent=ent, seed=seed % 1000, record_log=True)
    r = run(c, a, cfg)
    s = r.stats
    assert r.depth >= ideal_depth(c, cfg) - 1e-9
    assert 0.0 < r.fidelity <= 1.0
    assert math.isfinite(r.depth)
    assert s["links_generated"] == s["links_consumed"] + s["links_discarded"] + s["links_in_buffer"]
    if design != "ideal":
        assert s["links_consumed"] == s["n_remote"]
        # every gate executes once and each qubit's gates follow circuit order
        done = [ev for ev in r.log if ev[1] == "gate"]
        assert sorted(ev[2] for ev in done) == list(range(len(c.gates)))
        for q in range(n):
            on_q = [ev for ev in sorted(done, key=lambda ev: ev[3]) if q in ev[5:]]
            for prev, nxt in zip(on_q, on_q[1:]):
                assert prev[0] <= nxt[3] + 1e-9  # no overlap on a qubit


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 6))
def test_dependent_gate_order_respected(seed, n):
    c, a = _random_case(seed, n)
    cfg = SimConfig(design="async_buf", ent=EntParams(p_succ_override=0.5), record_log=True)
    r = run(c, a, cfg)
    start = {ev[2]: ev[3] for ev in r.log if ev[1] == "gate"}
    end = {ev[2]: ev[0] for ev in r.log if ev[1] == "gate"}
    for u, v in build_dag(c).edges:
        assert end[u] <= start[v] + 1e-9


def test_more_pairs_never_hurt_in_expectation():
    c = gen_qaoa_maxcut(16, 6, 1, seed=0)
    a = bipartition(interaction_graph(c), (8, 8))
    depths = []
    for pairs in (2, 6, 12):
        ent = EntParams(p_succ_override=0.4, n_comm_pairs=pairs, n_buffer_pairs=pairs)
        depths.append(sweep(c, a, SimConfig(design="async_buf", ent=ent), range(20)).mean_depth)
    assert depths[0] > depths[1] > depths[2]


@pytest.mark.parametrize("circ", [gen_qaoa_maxcut(16, 4, 1, seed=3), gen_tlim(16, 4), gen_qft(10)])
def test_near_ideal_with_certain_abundant_links(circ):
    a = bipartition(interaction_graph(circ), (circ.n_qubits // 2, circ.n_qubits - circ.n_qubits // 2))
    n_remote = sum(1 for g in circ.gates if g.is_two_qubit and a.node_of[g.qubits[0]] != a.node_of[g.qubits[1]])
    ent = EntParams(p_succ_override=1.0, n_comm_pairs=max(1, n_remote), n_buffer_pairs=max(1, n_remote))
    base = SimConfig(ent=ent)
    extra = n_remote * (base.remote_latency - base.t_cnot)
    init = run(circ, a, replace(base, design="init_buf"))
    assert init.stats["mean_remote_wait"] == 0.0
    assert ideal_depth(circ) <= init.depth <= ideal_depth(circ) + extra + 1e-9
    adapt = run(circ, a, replace(base, design="adapt_buf"))
    assert adapt.depth <= ideal_depth(circ) + 2 * ent.T_EG + extra + 1e-9
