"""Reader/writer for the OpenQASM 2.0 subset used by the benchmarks.

Accepted statements: the OPENQASM header, ``include "qelib1.inc"``, a single
``qreg``, an optional single ``creg``, the gates h, x, rx, rz, rzz, cx, cp,
swap and ``measure q[i] -> c[j]``. Anything else is rejected with a
line/column location.
"""
from __future__ import annotations

import ast
import math
import operator
import re
from pathlib import Path

from .circuit import Circuit, Gate, GateKind


class QasmError(ValueError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"line {line}, col {col}: {msg}")
        self.line = line
        self.col = col


_GATES = {k.value: k for k in GateKind if k is not GateKind.MEASURE}
_QREF = re.compile(r"\s*([A-Za-z_]\w*)\s*\[\s*(\d+)\s*\]\s*")
_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}


def _eval_angle(text: str) -> float:
    """Evaluate a numeric angle expression; only numbers, pi and + - * / are allowed."""
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        raise ValueError(text)

    return ev(ast.parse(text.strip(), mode="eval"))


def parse_qasm(text: str) -> Circuit:
    n_qubits = None
    qreg = creg = None
    n_clbits = 0
    gates: list[Gate] = []
    saw_header = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("//", 1)[0]
        offset = 0
        for stmt in line.split(";"):
            col = offset + len(stmt) - len(stmt.lstrip()) + 1
            offset += len(stmt) + 1
            s = stmt.strip()
            if not s:
                continue

            def fail(msg, at=col):
                raise QasmError(msg, lineno, at)

            if s.startswith("OPENQASM"):
                if s.split()[1:] != ["2.0"]:
                    fail(f"unsupported version {s!r}")
                saw_header = True
                continue
            if not saw_header:
                fail("missing 'OPENQASM 2.0;' header")
            if s.startswith("include"):
                if s.split(None, 1)[1].strip() != '"qelib1.inc"':
                    fail(f"unsupported include {s!r}")
                continue

            m = re.fullmatch(r"(qreg|creg)\s+([A-Za-z_]\w*)\s*\[\s*(\d+)\s*\]", s)
            if m:
                kind, name, size = m.group(1), m.group(2), int(m.group(3))
                if kind == "qreg":
                    if qreg is not None:
                        fail("only one qreg is supported")
                    if size < 1:
                        fail("qreg must have at least one qubit")
                    qreg, n_qubits = name, size
                else:
                    if creg is not None:
                        fail("only one creg is supported")
                    creg, n_clbits = name, size
                continue

            m = re.fullmatch(r"([A-Za-z_]\w*)\s*(\(([^)]*)\))?\s*(.*)", s, flags=re.S)
            if not m:
                fail(f"cannot parse statement {s!r}")
            name, angle_text, args = m.group(1), m.group(3), m.group(4)
            if qreg is None:
                fail("gate before qreg declaration")

            def qubit_refs(argtext, at):
                refs = []
                for part in argtext.split(","):
                    r = _QREF.fullmatch(part)
                    if not r:
                        fail(f"bad qubit reference {part.strip()!r}", at)
                    if r.group(1) != qreg:
                        fail(f"unknown register {r.group(1)!r}", at)
                    idx = int(r.group(2))
                    if idx >= n_qubits:
                        fail(f"qubit index {idx} out of range", at)
                    refs.append(idx)
                return refs

            args_col = col + s.index(args) if args else col
            if name == "measure":
                mm = re.fullmatch(r"(.+?)->\s*([A-Za-z_]\w*)\s*\[\s*(\d+)\s*\]\s*", args)
                if not mm:
                    fail("expected 'measure q[i] -> c[j]'", args_col)
                if creg is None or mm.group(2) != creg:
                    fail(f"unknown classical register {mm.group(2)!r}", args_col)
                if int(mm.group(3)) >= n_clbits:
                    fail(f"classical bit {mm.group(3)} out of range", args_col)
                (q,) = qubit_refs(mm.group(1), args_col)
                gates.append(Gate(GateKind.MEASURE, (q,)))
                continue
            if name not in _GATES:
                fail(f"unsupported gate {name!r}")
            kind = _GATES[name]
            theta = None
            if kind.parametric:
                if angle_text is None:
                    fail(f"gate {name!r} needs an angle")
                try:
                    theta = _eval_angle(angle_text)
                except (ValueError, SyntaxError):
                    fail(f"bad angle expression {angle_text!r}")
            elif angle_text is not None:
                fail(f"gate {name!r} takes no angle")
            qs = qubit_refs(args, args_col)
            if len(qs) != kind.arity:
                fail(f"gate {name!r} expects {kind.arity} qubit(s), got {len(qs)}", args_col)
            if len(set(qs)) != len(qs):
                fail(f"repeated qubit in {name!r}", args_col)
            gates.append(Gate(kind, tuple(qs), theta))

    if n_qubits is None:
        raise QasmError("no qreg declared", 1, 1)
    return Circuit(n_qubits, tuple(gates))


def dump_qasm(circuit: Circuit) -> str:
    out = ["OPENQASM 2.0;", 'include "qelib1.inc";', f"qreg q[{circuit.n_qubits}];"]
    if any(g.kind is GateKind.MEASURE for g in circuit.gates):
        out.append(f"creg c[{circuit.n_qubits}];")
    for g in circuit.gates:
        if g.kind is GateKind.MEASURE:
            out.append(f"measure q[{g.qubits[0]}] -> c[{g.qubits[0]}];")
            continue
        args = ",".join(f"q[{q}]" for q in g.qubits)
        angle = f"({g.theta!r})" if g.theta is not None else ""
        out.append(f"{g.kind.value}{angle} {args};")
    return "\n".join(out) + "\n"


def read_circuit(path) -> Circuit:
    return parse_qasm(Path(path).read_text())


def write_circuit(circuit: Circuit, path) -> None:
    Path(path).write_text(dump_qasm(circuit))
