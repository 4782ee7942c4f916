"""
OpenQASM 3 subset: parser and emitter.

Accepted:
    OPENQASM 3.0;  include "...";
    qubit[n] q;  bit[m] c;      (at most one of each)
    h x y z s sdg t tdg p rx ry rz swap gphase id, and cx cy cz ch cp crx cry crz ccx cswap
    ctrl @ / ctrl(k) @ / negctrl @ / negctrl(k) @ modifiers
    c[j] = measure q[i];   c[j] = !c[j]; (right after that measure)
    reset q[i];
    if (c[j]) / if (c[j] == 1) / if (c[j] == 0) / if (!c[j]), joined with &&, nested,
        with a single statement or a { ... } block of gate calls
    barrier ...;            (dropped with a warning)
Angles are expressions over numbers and pi with + - * / and parentheses.

A bare gphase(theta); directly after the declarations is the circuit's
global-phase accumulator; any later one is an ordinary instruction.
"""
from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass
from pathlib import Path

from .ir import (
    Apply,
    Circuit,
    Gate,
    Instruction,
    Measure,
    Reset,
    _check,
)


@dataclass(frozen=True)
class SourceSpan:
    line: int
    column: int
    start: int
    end: int

    def __str__(self):
        return f"{self.line}:{self.column}"


class QasmError(ValueError):
    def __init__(self, message: str, span: SourceSpan | None = None):
        self.span = span
        self.bare_message = message
        super().__init__(f"{span}: {message}" if span else message)


class QasmSyntaxError(QasmError):
    pass


class UnsupportedConstruct(QasmError):
    pass


class IndexOutOfRange(QasmError):
    pass


class QasmWarning(UserWarning):
    pass


# ---------------------------------------------------------------------------
# Lexer

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*|/\*.*?\*/)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<string>"[^"\n]*")
  | (?P<ident>[A-Za-z_π][A-Za-z0-9_]*)
  | (?P<op>==|&&|[;\[\](),@=!+\-*/{}])
  | (?P<other>[^\s"])
""", re.VERBOSE | re.DOTALL)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    span: SourceSpan


def tokenize(src: str) -> list[Token]:
    out, pos, line, line_start = [], 0, 1, 0
    while pos < len(src):
        mt = _TOKEN_RE.match(src, pos)
        if mt is None:
            span = SourceSpan(line, pos - line_start + 1, pos, pos + 1)
            raise QasmSyntaxError(f"unexpected character {src[pos]!r}", span)
        kind, text = mt.lastgroup, mt.group()
        if kind == "other":
            # left to the parser, which can name the construct it belongs to
            kind = "op"
        if kind not in ("ws", "comment"):
            out.append(Token(kind, text, SourceSpan(line, pos - line_start + 1, pos, mt.end())))
        nl = text.count("\n")
        if nl:
            line += nl
            line_start = pos + text.rfind("\n") + 1
        pos = mt.end()
    end = SourceSpan(line, pos - line_start + 1, pos, pos)
    out.append(Token("eof", "", end))
    return out


# ---------------------------------------------------------------------------
# Parser

_SIMPLE = {"h": 0, "x": 0, "y": 0, "z": 0, "s": 0, "sdg": 0, "t": 0, "tdg": 0, "swap": 0}
_PARAM = {"p": "p", "phase": "p", "rx": "rx", "ry": "ry", "rz": "rz"}
# alias -> (base gate, number of leading positive controls)
_ALIASES = {
    "cx": ("x", 1), "cnot": ("x", 1), "cy": ("y", 1), "cz": ("z", 1), "ch": ("h", 1),
    "cp": ("p", 1), "cphase": ("p", 1), "crx": ("rx", 1), "cry": ("ry", 1), "crz": ("rz", 1),
    "ccx": ("x", 2), "toffoli": ("x", 2), "cswap": ("swap", 1),
}


class _Parser:
    def __init__(self, src: str):
        self.toks = tokenize(src)
        self.i = 0
        self.qregs: dict[str, tuple[int, int]] = {}
        self.cregs: dict[str, tuple[int, int]] = {}
        self.n = 0
        self.m = 0
        self.body: list[Instruction] = []
        self.global_phase = 0.0
        self.in_header = True
        self.warnings: list[str] = []

    # token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def advance(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def accept(self, text: str) -> Token | None:
        if self.tok.text == text and self.tok.kind != "string":
            return self.advance()
        return None

    def expect(self, text: str) -> Token:
        t = self.accept(text)
        if t is None:
            raise QasmSyntaxError(f"expected {text!r}, found {self.tok.text or 'end of input'!r}", self.tok.span)
        return t

    def expect_kind(self, kind: str) -> Token:
        if self.tok.kind != kind:
            raise QasmSyntaxError(f"expected {kind}, found {self.tok.text or 'end of input'!r}", self.tok.span)
        return self.advance()

    def expect_int(self) -> int:
        t = self.expect_kind("number")
        if not t.text.isdigit():
            raise QasmSyntaxError(f"expected an integer, found {t.text!r}", t.span)
        return int(t.text)

    # program
    def parse(self) -> Circuit:
        if self.tok.text == "OPENQASM":
            self.advance()
            ver = self.expect_kind("number")
            if not ver.text.startswith("3"):
                raise UnsupportedConstruct(f"OPENQASM version {ver.text} (only 3.x)", ver.span)
            self.expect(";")
        while self.tok.kind != "eof":
            self.statement(())
        return Circuit(self.n, self.m, tuple(self.body), self.global_phase)

    def statement(self, guards: tuple[tuple[int, int], ...]) -> None:
        t = self.tok
        if t.kind != "ident":
            raise QasmSyntaxError(f"unexpected {t.text!r}", t.span)
        word = t.text
        if word == "include":
            self._no_guard(guards, t)
            self.advance()
            self.expect_kind("string")
            self.expect(";")
        elif word in ("qubit", "bit"):
            self._no_guard(guards, t)
            self.declaration()
            return
        elif word in ("qreg", "creg"):
            raise UnsupportedConstruct(f"OpenQASM 2 declaration {word!r}", t.span)
        elif word == "barrier":
            self._no_guard(guards, t)
            while self.tok.text != ";" and self.tok.kind != "eof":
                self.advance()
            self.expect(";")
            self._warn(f"{t.span}: barrier dropped")
        elif word == "reset":
            self._no_guard(guards, t)
            self.advance()
            q = self.qubit_operand()
            self.expect(";")
            self.emit(Reset(q), t.span)
        elif word == "measure":
            raise UnsupportedConstruct("measure without assignment (use c[j] = measure q[i];)", t.span)
        elif word == "if":
            self.conditional(guards)
        elif word in self.cregs:
            self._no_guard(guards, t)
            self.assignment()
        else:
            self.gate_call(guards)
        if word != "include" and word != "barrier":
            self.in_header = False

    def _no_guard(self, guards, t: Token) -> None:
        if guards:
            raise UnsupportedConstruct(f"{t.text!r} inside a condition", t.span)

    def _warn(self, msg: str) -> None:
        self.warnings.append(msg)

    def declaration(self) -> None:
        kw = self.advance()
        size = 1
        if self.accept("["):
            size = self.expect_int()
            self.expect("]")
        name = self.expect_kind("ident")
        self.expect(";")
        if (self.qregs if kw.text == "qubit" else self.cregs):
            raise UnsupportedConstruct(f"second {kw.text} declaration", kw.span)
        if name.text in self.qregs or name.text in self.cregs:
            raise QasmSyntaxError(f"redeclaration of {name.text!r}", name.span)
        if not self.in_header:
            raise UnsupportedConstruct("declaration after the first statement", kw.span)
        if kw.text == "qubit":
            self.qregs[name.text] = (self.n, size)
            self.n += size
        else:
            self.cregs[name.text] = (self.m, size)
            self.m += size

    def _indexed(self, regs: dict[str, tuple[int, int]], what: str) -> list[int]:
        name = self.expect_kind("ident")
        if name.text not in regs:
            raise QasmSyntaxError(f"undeclared {what} register {name.text!r}", name.span)
        off, size = regs[name.text]
        if self.accept("["):
            it = self.tok
            k = self.expect_int()
            self.expect("]")
            if k >= size:
                raise IndexOutOfRange(f"{name.text}[{k}] out of range (size {size})", it.span)
            return [off + k]
        return list(range(off, off + size))

    def _single(self, regs, what: str) -> int:
        t = self.tok
        idx = self._indexed(regs, what)
        if len(idx) != 1:
            raise UnsupportedConstruct(f"whole-register {what} operand here", t.span)
        return idx[0]

    def qubit_operand(self) -> int:
        return self._single(self.qregs, "qubit")

    def bit_operand(self) -> int:
        return self._single(self.cregs, "bit")

    def assignment(self) -> None:
        start = self.tok
        c = self.bit_operand()
        self.expect("=")
        if self.accept("measure"):
            q = self.qubit_operand()
            self.expect(";")
            self.emit(Measure(q, c), start.span)
            return
        if self.accept("!"):
            t = self.tok
            c2 = self.bit_operand()
            self.expect(";")
            last = self.body[-1] if self.body else None
            if c2 == c and isinstance(last, Measure) and last.register == c and not last.negated:
                self.body[-1] = Measure(last.qubit, c, True)
                return
            raise UnsupportedConstruct("classical negation is only supported right after a measurement into the same bit", t.span)
        raise UnsupportedConstruct("classical assignment", start.span)

    def conditional(self, guards) -> None:
        self.advance()
        self.expect("(")
        new = dict(guards)
        for j, pol in self.condition():
            if new.get(j, pol) != pol:
                raise UnsupportedConstruct("contradictory condition", self.tok.span)
            new[j] = pol
        self.expect(")")
        inner = tuple(sorted(new.items()))
        if self.accept("{"):
            while not self.accept("}"):
                if self.tok.kind == "eof":
                    raise QasmSyntaxError("unterminated block", self.tok.span)
                self.statement(inner)
        else:
            self.statement(inner)

    def condition(self) -> list[tuple[int, int]]:
        out = [self.cond_atom()]
        while self.accept("&&"):
            out.append(self.cond_atom())
        return out

    def cond_atom(self) -> tuple[int, int]:
        if self.accept("("):
            parts = self.condition()
            self.expect(")")
            if len(parts) != 1:
                raise UnsupportedConstruct("parenthesised conjunction", self.tok.span)
            return parts[0]
        if self.accept("!"):
            return self.bit_operand(), 0
        t = self.tok
        j = self.bit_operand()
        if self.accept("=="):
            v = self.tok
            k = self.expect_int()
            if k not in (0, 1):
                raise UnsupportedConstruct(f"comparison of a bit with {k}", v.span)
            return j, k
        if self.tok.text in ("!=", "<", ">"):
            raise UnsupportedConstruct(f"operator {self.tok.text!r}", t.span)
        return j, 1

    def gate_call(self, guards) -> None:
        start = self.tok
        controls: list[int] = []  # polarities, in operand order
        while self.tok.text in ("ctrl", "negctrl"):
            pol = 1 if self.advance().text == "ctrl" else 0
            k = 1
            if self.accept("("):
                k = self.expect_int()
                self.expect(")")
            self.expect("@")
            controls += [pol] * k
        if self.tok.text in ("inv", "pow"):
            raise UnsupportedConstruct(f"modifier {self.tok.text!r}", self.tok.span)
        name_tok = self.expect_kind("ident")
        name = name_tok.text
        theta = None
        if self.accept("("):
            theta = self.expr()
            self.expect(")")
        if name in _ALIASES:
            base, extra = _ALIASES[name]
            controls = controls + [1] * extra
            name = base
        elif name in _PARAM:
            name = _PARAM[name]
        elif name == "U" or name == "u" or (name not in _SIMPLE and name not in ("gphase", "id")):
            raise UnsupportedConstruct(f"gate {name!r}", name_tok.span)
        try:
            gate = Gate(name, theta) if name != "id" else None
        except ValueError as exc:
            raise QasmSyntaxError(str(exc), name_tok.span) from None
        operands = []
        if self.tok.text != ";":
            operands.append(self._indexed(self.qregs, "qubit"))
            while self.accept(","):
                operands.append(self._indexed(self.qregs, "qubit"))
        self.expect(";")
        if gate is None:
            return  # identity
        if name == "gphase" and not controls and not guards and self.in_header:
            self.global_phase = theta
            return
        arity = len(controls) + gate.arity
        if len(operands) != arity:
            raise QasmSyntaxError(f"{name_tok.text} expects {arity} qubit operand(s), got {len(operands)}", name_tok.span)
        width = {len(o) for o in operands if len(o) > 1}
        if len(width) > 1:
            raise QasmSyntaxError("broadcast over registers of different sizes", name_tok.span)
        reps = width.pop() if width else 1
        for r in range(reps):
            qs = [o[r] if len(o) > 1 else o[0] for o in operands]
            ctrl = tuple(zip(qs[:len(controls)], controls))
            self.emit(Apply(gate, tuple(qs[len(controls):]), ctrl, guards), start.span)

    def emit(self, ins: Instruction, span: SourceSpan) -> None:
        problems = _check(ins, self.n, self.m)
        if problems:
            rule, msg = problems[0]
            raise (IndexOutOfRange if rule == "range" else QasmSyntaxError)(msg, span)
        self.body.append(ins)

    # angle expressions
    def expr(self) -> float:
        v = self.term()
        while self.tok.text in ("+", "-"):
            v = v + self.term() if self.advance().text == "+" else v - self.term()
        return v

    def term(self) -> float:
        v = self.unary()
        while self.tok.text in ("*", "/"):
            op = self.advance()
            rhs = self.unary()
            if op.text == "*":
                v *= rhs
            elif rhs == 0:
                raise QasmSyntaxError("division by zero", op.span)
            else:
                v /= rhs
        return v

    def unary(self) -> float:
        if self.accept("-"):
            return -self.unary()
        if self.accept("+"):
            return self.unary()
        return self.primary()

    def primary(self) -> float:
        t = self.tok
        if t.kind == "number":
            self.advance()
            return float(t.text)
        if t.text in ("pi", "π"):
            self.advance()
            return math.pi
        if t.text in ("tau", "τ"):
            self.advance()
            return 2 * math.pi
        if self.accept("("):
            v = self.expr()
            self.expect(")")
            return v
        raise QasmSyntaxError(f"expected an angle expression, found {t.text!r}", t.span)


def parse_with_diagnostics(src: str) -> tuple[Circuit, list[str]]:
    p = _Parser(src)
    circuit = p.parse()
    return circuit, p.warnings


def parse(src: str) -> Circuit:
    circuit, notes = parse_with_diagnostics(src)
    for msg in notes:
        warnings.warn(msg, QasmWarning, stacklevel=2)
    return circuit


def load(path: str | Path) -> Circuit:
    return parse(Path(path).read_text())


# ---------------------------------------------------------------------------
# Emitter

def _eval_angle(text: str) -> float:
    p = _Parser(text)
    v = p.expr()
    if p.tok.kind != "eof":
        raise QasmSyntaxError("trailing tokens in angle", p.tok.span)
    return v


def format_angle(theta: float) -> str:
    """Symbolic multiple of pi when that reproduces the float exactly, else repr."""
    if theta == 0:
        return "0"
    for d in (1, 2, 3, 4, 6, 8, 12, 16, 32, 64):
        k = round(theta * d / math.pi)
        if k == 0 or abs(k) > 64 * d:
            continue
        num = "pi" if abs(k) == 1 else f"{abs(k)}*pi"
        text = ("-" if k < 0 else "") + (num if d == 1 else f"{num}/{d}")
        if _eval_angle(text) == theta:
            return text
    return repr(float(theta))


def _q(i: int) -> str:
    return f"q[{i}]"


def _c(j: int) -> str:
    return f"c[{j}]"


def _gate_text(ins: Apply) -> str:
    g = ins.gate
    name = g.name if g.theta is None else f"{g.name}({format_angle(g.theta)})"
    ctrl = ins.qcontrols
    targets = [_q(t) for t in ins.targets]
    pols = [p for _, p in ctrl]
    if g.theta is None and all(pols) and (g.name, len(ctrl)) in (("x", 1), ("z", 1), ("x", 2)):
        alias = {("x", 1): "cx", ("z", 1): "cz", ("x", 2): "ccx"}[(g.name, len(ctrl))]
        return f"{alias} " + ", ".join([_q(q) for q, _ in ctrl] + targets)
    mods = []
    run_pol, run_len = None, 0
    for p in pols + [None]:
        if p == run_pol:
            run_len += 1
            continue
        if run_pol is not None:
            word = "ctrl" if run_pol else "negctrl"
            mods.append(word if run_len == 1 else f"{word}({run_len})")
        run_pol, run_len = p, 1
    prefix = "".join(f"{m} @ " for m in mods)
    operands = ", ".join([_q(q) for q, _ in ctrl] + targets)
    return f"{prefix}{name}" + (f" {operands}" if operands else "")


def format_instruction(ins: Instruction) -> str:
    if isinstance(ins, Measure):
        text = f"{_c(ins.register)} = measure {_q(ins.qubit)};"
        if ins.negated:
            text += f"\n{_c(ins.register)} = !{_c(ins.register)};"
        return text
    if isinstance(ins, Reset):
        return f"reset {_q(ins.qubit)};"
    text = _gate_text(ins) + ";"
    if ins.guards:
        cond = " && ".join(_c(r) if p else f"!{_c(r)}" for r, p in ins.guards)
        text = f"if ({cond}) {text}"
    return text


def dumps(circuit: Circuit) -> str:
    lines = ["OPENQASM 3.0;", 'include "stdgates.inc";']
    if circuit.n:
        lines.append(f"qubit[{circuit.n}] q;")
    if circuit.m:
        lines.append(f"bit[{circuit.m}] c;")
    first = circuit.body[0] if circuit.body else None
    leading_phase = isinstance(first, Apply) and first.gate.name == "gphase" and not first.qcontrols and not first.guards
    if circuit.global_phase or leading_phase:
        # always present when the body starts with a bare gphase, so the two stay apart
        lines.append(f"gphase({format_angle(circuit.global_phase)});")
    lines += [format_instruction(ins) for ins in circuit.body]
    return "\n".join(lines) + "\n"


def dump(circuit: Circuit, path: str | Path) -> None:
    Path(path).write_text(dumps(circuit))
