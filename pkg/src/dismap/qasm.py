"""OpenQASM 2.0 subset reader and writer.

Accepted: one ``qreg``, at most one ``creg``, ``include "qelib1.inc";``, the gate
names of :class:`~dismap.circuit.GateKind`, ``measure`` and ``barrier``.
Register-wide operands (``h q;``, ``measure q -> c;``) are broadcast.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .circuit import Circuit, CircuitError, Gate, GateKind, angle_str


class QasmError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line, self.col = line, col
        where = f"line {line}, col {col}: " if line else ""
        super().__init__(f"{where}{message}")


_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<newline>\n)
  | (?P<comment>//[^\n]*)
  | (?P<real>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<string>"[^"\n]*")
  | (?P<arrow>->)
  | (?P<eq>==)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<sym>[;,\[\]()+\-*/^{}])
""", re.VERBOSE)

_GATES = {k.value: k for k in GateKind if k not in (GateKind.MEASURE, GateKind.BARRIER)}
_GATES["CX"] = GateKind.CX
_UNSUPPORTED_STATEMENTS = {"if", "reset", "gate", "opaque"}


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise QasmError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "newline":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            toks.append(_Tok(kind, m.group(), line, m.start() - line_start + 1))
        pos = m.end()
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.qreg: tuple[str, int] | None = None
        self.creg: tuple[str, int] | None = None
        self.gates: list[Gate] = []

    def peek(self) -> _Tok | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def next(self) -> _Tok:
        tok = self.peek()
        if tok is None:
            last = self.toks[-1] if self.toks else _Tok("", "", 1, 1)
            raise QasmError("unexpected end of input", last.line, last.col + len(last.text))
        self.i += 1
        return tok

    def expect(self, text: str) -> _Tok:
        tok = self.next()
        if tok.text != text:
            raise QasmError(f"expected {text!r}, found {tok.text!r}", tok.line, tok.col)
        return tok

    def expect_kind(self, kind: str) -> _Tok:
        tok = self.next()
        if tok.kind != kind:
            raise QasmError(f"expected {kind}, found {tok.text!r}", tok.line, tok.col)
        return tok

    def parse(self) -> Circuit:
        tok = self.next()
        if tok.text != "OPENQASM":
            raise QasmError("program must start with 'OPENQASM 2.0;'", tok.line, tok.col)
        ver = self.expect_kind("real")
        if not ver.text.startswith("2"):
            raise QasmError(f"unsupported OpenQASM version {ver.text}", ver.line, ver.col)
        self.expect(";")
        while self.peek() is not None:
            self.statement()
        if self.qreg is None:
            raise QasmError("no quantum register declared")
        return Circuit(self.qreg[1], self.gates)

    def statement(self):
        tok = self.next()
        word = tok.text
        if word == "include":
            self.expect_kind("string")
            self.expect(";")
        elif word == "qreg":
            name, size = self.declaration()
            if self.qreg is not None:
                raise QasmError("multiple quantum registers are not supported", tok.line, tok.col)
            self.qreg = (name, size)
        elif word == "creg":
            name, size = self.declaration()
            if self.creg is not None:
                raise QasmError("multiple classical registers are not supported", tok.line, tok.col)
            self.creg = (name, size)
        elif word == "measure":
            self.measure(tok)
        elif word == "barrier":
            qubits = self.operand_list(tok)
            flat = sorted({q for group in qubits for q in group})
            self.add(Gate(GateKind.BARRIER, flat), tok)
        elif word in _UNSUPPORTED_STATEMENTS:
            raise QasmError(f"unsupported statement '{word}'", tok.line, tok.col)
        elif tok.kind == "ident":
            self.gate_call(tok)
        else:
            raise QasmError(f"unexpected token {word!r}", tok.line, tok.col)

    def declaration(self) -> tuple[str, int]:
        name = self.expect_kind("ident").text
        self.expect("[")
        size = self.expect_kind("real")
        if not size.text.isdigit() or int(size.text) < 1:
            raise QasmError(f"bad register size {size.text}", size.line, size.col)
        self.expect("]")
        self.expect(";")
        return name, int(size.text)

    def gate_call(self, tok: _Tok):
        kind = _GATES.get(tok.text)
        if kind is None:
            raise QasmError(f"unsupported gate '{tok.text}'", tok.line, tok.col)
        params: list[float] = []
        if self.peek() is not None and self.peek().text == "(":
            self.next()
            params.append(self.expr())
            while self.peek() is not None and self.peek().text == ",":
                self.next()
                params.append(self.expr())
            self.expect(")")
        if len(params) != kind.n_params:
            raise QasmError(
                f"gate '{tok.text}' takes {kind.n_params} parameter(s), got {len(params)}",
                tok.line, tok.col)
        operands = self.operand_list(tok)
        if len(operands) != kind.arity:
            raise QasmError(
                f"gate '{tok.text}' takes {kind.arity} operand(s), got {len(operands)}",
                tok.line, tok.col)
        width = max(len(o) for o in operands)
        if any(len(o) not in (1, width) for o in operands):
            raise QasmError("mismatched register sizes in broadcast", tok.line, tok.col)
        for j in range(width):
            qubits = [o[j] if len(o) > 1 else o[0] for o in operands]
            self.add(Gate(kind, qubits, params), tok)

    def measure(self, tok: _Tok):
        src = self.qubit_operand()
        self.expect_kind("arrow")
        dst_tok = self.expect_kind("ident")
        if self.creg is None or dst_tok.text != self.creg[0]:
            raise QasmError(f"unknown classical register '{dst_tok.text}'", dst_tok.line, dst_tok.col)
        if self.peek() is not None and self.peek().text == "[":
            self.next()
            idx = self.expect_kind("real")
            if not idx.text.isdigit() or int(idx.text) >= self.creg[1]:
                raise QasmError(f"classical index {idx.text} out of range", idx.line, idx.col)
            self.expect("]")
        self.expect(";")
        for q in src:
            self.add(Gate(GateKind.MEASURE, [q]), tok)

    def operand_list(self, tok: _Tok) -> list[list[int]]:
        ops = [self.qubit_operand()]
        while self.peek() is not None and self.peek().text == ",":
            self.next()
            ops.append(self.qubit_operand())
        self.expect(";")
        return ops

    def qubit_operand(self) -> list[int]:
        name = self.expect_kind("ident")
        if self.qreg is None or name.text != self.qreg[0]:
            raise QasmError(f"unknown quantum register '{name.text}'", name.line, name.col)
        if self.peek() is not None and self.peek().text == "[":
            self.next()
            idx = self.expect_kind("real")
            if not idx.text.isdigit():
                raise QasmError(f"bad qubit index {idx.text}", idx.line, idx.col)
            if int(idx.text) >= self.qreg[1]:
                raise QasmError(
                    f"qubit index {idx.text} out of range for register "
                    f"{self.qreg[0]}[{self.qreg[1]}]", idx.line, idx.col)
            self.expect("]")
            return [int(idx.text)]
        return list(range(self.qreg[1]))

    def add(self, gate: Gate, tok: _Tok):
        self.gates.append(gate)

    # expression grammar: sum := term (('+'|'-') term)*; term := factor (('*'|'/') factor)*
    def expr(self) -> float:
        value = self.term()
        while self.peek() is not None and self.peek().text in "+-":
            op = self.next().text
            rhs = self.term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def term(self) -> float:
        value = self.factor()
        while self.peek() is not None and self.peek().text in ("*", "/"):
            op = self.next()
            rhs = self.factor()
            if op.text == "/" and rhs == 0:
                raise QasmError("division by zero", op.line, op.col)
            value = value * rhs if op.text == "*" else value / rhs
        return value

    def factor(self) -> float:
        tok = self.next()
        if tok.text == "-":
            return -self.factor()
        if tok.text == "+":
            return self.factor()
        if tok.text == "(":
            value = self.expr()
            self.expect(")")
            return value
        if tok.kind == "real":
            return float(tok.text)
        if tok.text == "pi":
            return math.pi
        raise QasmError(f"unexpected {tok.text!r} in expression", tok.line, tok.col)


def parse_qasm(text: str, name: str = "circuit") -> Circuit:
    try:
        circuit = _Parser(text).parse()
    except CircuitError as exc:
        raise QasmError(str(exc)) from exc
    return Circuit(circuit.n_qubits, circuit.gates, name)


def emit_qasm(circuit: Circuit) -> str:
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";', f"qreg q[{circuit.n_qubits}];"]
    if any(g.kind is GateKind.MEASURE for g in circuit.gates):
        lines.append(f"creg c[{circuit.n_qubits}];")
    for g in circuit.gates:
        lines.append(gate_line(g.kind, g.qubits, g.params))
    return "\n".join(lines) + "\n"


def gate_line(kind: GateKind, qubits, params=(), reg: str = "q") -> str:
    if kind is GateKind.MEASURE:
        return f"measure {reg}[{qubits[0]}] -> c[{qubits[0]}];"
    args = ",".join(f"{reg}[{q}]" for q in qubits)
    if params:
        return f"{kind.value}({','.join(angle_str(p) for p in params)}) {args};"
    return f"{kind.value} {args};"
