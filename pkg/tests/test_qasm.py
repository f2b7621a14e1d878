import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dqcsim.benchgen import gen_qaoa_maxcut, gen_qft
from dqcsim.circuit import Circuit, GateKind
from dqcsim.qasm import QasmError, dump_qasm, parse_qasm, read_circuit, write_circuit
from dqcsim.scheduler import random_gate

HEADER = 'OPENQASM 2.0;\ninclude "qelib1.inc";\nqreg q[3];\n'


def test_empty_round_trip():
    c = Circuit(2)
    assert parse_qasm(dump_qasm(c)) == c


def test_qft_round_trip(tmp_path):
    c = gen_qft(8)
    write_circuit(c, tmp_path / "qft.qasm")
    assert read_circuit(tmp_path / "qft.qasm") == c


def test_qaoa_round_trip_is_exact():
    c = gen_qaoa_maxcut(12, 3, 2, seed=4)
    assert parse_qasm(dump_qasm(c)) == c


def test_angle_expressions():
    c = parse_qasm(HEADER + "rz(pi/4) q[0];\nrx(-2*pi/3 + 0.5) q[1];\ncp(pi) q[0],q[2];\n")
    assert c.gates[0].theta == pytest.approx(math.pi / 4)
    assert c.gates[1].theta == pytest.approx(-2 * math.pi / 3 + 0.5)
    assert c.gates[2].kind is GateKind.CPHASE


def test_measure():
    c = parse_qasm(HEADER + "creg c[3];\nh q[1];\nmeasure q[1] -> c[1];\n")
    assert [g.kind for g in c.gates] == [GateKind.H, GateKind.MEASURE]


def test_comments_and_shared_lines():
    c = parse_qasm(HEADER + "h q[0]; x q[1]; // trailing\n// whole line\ncx q[0],q[1];\n")
    assert len(c.gates) == 3


@pytest.mark.parametrize("body, needle", [
    ("ccx q[0],q[1],q[2];", "ccx"),
    ("h q[7];", "out of range"),
    ("cx q[0],q[0];", "repeated"),
    ("rz q[0];", "needs an angle"),
    ("h(0.1) q[0];", "takes no angle"),
    ("rz(__import__('os')) q[0];", "bad angle"),
    ("h r[0];", "unknown register"),
    ("qreg r[2];", "only one qreg"),
    ("cx q[0];", "expects 2"),
])
def test_errors(body, needle):
    with pytest.raises(QasmError, match=needle):
        parse_qasm(HEADER + body + "\n")


def test_error_location():
    with pytest.raises(QasmError) as info:
        parse_qasm(HEADER + "h q[0];\n  ccx q[0],q[1],q[2];\n")
    assert info.value.line == 5
    assert info.value.col == 3


def test_missing_header():
    with pytest.raises(QasmError, match="header"):
        parse_qasm("qreg q[2];\n")
    with pytest.raises(QasmError, match="no qreg"):
        parse_qasm("OPENQASM 2.0;\n")


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6), length=st.integers(0, 30))
def test_random_round_trip(seed, n, length):
    rng = np.random.default_rng(seed)
    c = Circuit(n, tuple(random_gate(rng, n) for _ in range(length)))
    assert parse_qasm(dump_qasm(c)) == c
