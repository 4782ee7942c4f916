"""
Instruction-level IR for hybrid quantum-classical circuits.

Contains:
    - Gate: a gate kind with its fixed unitary (H, X, ..., SWAP, GlobalPhase)
    - Apply / Measure / Reset: the three instruction forms
    - Circuit: immutable instruction sequence over n qubits and m registers
    - validate(), count_metrics(), splice()

Indices are 0-based. A control or guard is a pair (index, polarity) where
polarity 1 means "fires on 1" and polarity 0 means "fires on 0".
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Iterable, Sequence, Union

import numpy as np

_SQ2 = 1 / math.sqrt(2)

_ONE_QUBIT = ("h", "x", "y", "z", "s", "sdg", "t", "tdg")
_ROTATIONS = ("p", "rx", "ry", "rz")
_DIAGONAL = frozenset({"z", "s", "sdg", "t", "tdg", "p", "rz", "gphase"})
_ADJOINT = {"s": "sdg", "sdg": "s", "t": "tdg", "tdg": "t"}
GATE_NAMES = _ONE_QUBIT + _ROTATIONS + ("swap", "gphase")


@dataclass(frozen=True)
class Gate:
    """A gate kind. Parametric kinds carry a concrete angle in radians."""

    name: str
    theta: float | None = None

    def __post_init__(self):
        if self.name not in GATE_NAMES:
            raise ValueError(f"unknown gate kind {self.name!r}")
        parametric = self.name in _ROTATIONS or self.name == "gphase"
        if parametric and self.theta is None:
            raise ValueError(f"gate {self.name!r} needs an angle")
        if not parametric and self.theta is not None:
            raise ValueError(f"gate {self.name!r} takes no angle")

    @property
    def arity(self) -> int:
        if self.name == "gphase":
            return 0
        return 2 if self.name == "swap" else 1

    @property
    def is_diagonal(self) -> bool:
        return self.name in _DIAGONAL

    @property
    def matrix(self) -> np.ndarray:
        return _matrix(self).copy()

    def inverse(self) -> Gate:
        if self.theta is not None:
            return Gate(self.name, -self.theta)
        return Gate(_ADJOINT.get(self.name, self.name))

    def __str__(self):
        return self.name if self.theta is None else f"{self.name}({self.theta:g})"


H, X, Y, Z = Gate("h"), Gate("x"), Gate("y"), Gate("z")
S, SDG, T, TDG = Gate("s"), Gate("sdg"), Gate("t"), Gate("tdg")
SWAP = Gate("swap")


def phase(theta: float) -> Gate:
    return Gate("p", float(theta))


def rx(theta: float) -> Gate:
    return Gate("rx", float(theta))


def ry(theta: float) -> Gate:
    return Gate("ry", float(theta))


def rz(theta: float) -> Gate:
    return Gate("rz", float(theta))


def gphase(theta: float) -> Gate:
    return Gate("gphase", float(theta))


@lru_cache(maxsize=None)
def _matrix(gate: Gate) -> np.ndarray:
    name, t = gate.name, gate.theta
    if name == "h":
        return np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex)
    if name == "x":
        return np.array([[0, 1], [1, 0]], dtype=complex)
    if name == "y":
        return np.array([[0, -1j], [1j, 0]], dtype=complex)
    if name == "z":
        return np.diag([1, -1]).astype(complex)
    if name in ("s", "sdg", "t", "tdg"):
        angle = {"s": math.pi / 2, "sdg": -math.pi / 2, "t": math.pi / 4, "tdg": -math.pi / 4}[name]
        return np.diag([1, np.exp(1j * angle)])
    if name == "p":
        return np.diag([1, np.exp(1j * t)])
    if name == "rx":
        c, s = math.cos(t / 2), math.sin(t / 2)
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if name == "ry":
        c, s = math.cos(t / 2), math.sin(t / 2)
        return np.array([[c, -s], [s, c]], dtype=complex)
    if name == "rz":
        return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])
    if name == "swap":
        m = np.zeros((4, 4), dtype=complex)
        m[0, 0] = m[1, 2] = m[2, 1] = m[3, 3] = 1
        return m
    return np.array([[np.exp(1j * t)]])  # gphase


@lru_cache(maxsize=None)
def matrix_entries(gate: Gate) -> tuple[tuple[complex, ...], ...]:
    """Row-major matrix as nested tuples of Python complex (fast scalar access)."""
    return tuple(tuple(complex(v) for v in row) for row in _matrix(gate))


# ---------------------------------------------------------------------------
# Instructions

Control = tuple[int, int]  # (index, polarity)


@dataclass(frozen=True)
class Apply:
    gate: Gate
    targets: tuple[int, ...]
    qcontrols: tuple[Control, ...] = ()
    guards: tuple[Control, ...] = ()

    def __post_init__(self):
        # controls and guards are sets; a canonical order makes equality structural
        object.__setattr__(self, "targets", tuple(self.targets))
        object.__setattr__(self, "qcontrols", tuple(sorted(tuple(c) for c in self.qcontrols)))
        object.__setattr__(self, "guards", tuple(sorted(tuple(g) for g in self.guards)))

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.targets + tuple(q for q, _ in self.qcontrols)

    @property
    def control_qubits(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.qcontrols)

    @property
    def guard_registers(self) -> tuple[int, ...]:
        return tuple(r for r, _ in self.guards)

    def with_(self, **kw) -> Apply:
        return replace(self, **kw)


@dataclass(frozen=True)
class Measure:
    """Measure `qubit` into `register`; `negated` stores the complemented outcome."""

    qubit: int
    register: int
    negated: bool = False

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.qubit,)


@dataclass(frozen=True)
class Reset:
    qubit: int

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.qubit,)


Instruction = Union[Apply, Measure, Reset]


def cx(control: int, target: int) -> Apply:
    return Apply(X, (target,), ((control, 1),))


def cz(control: int, target: int) -> Apply:
    return Apply(Z, (target,), ((control, 1),))


def ccx(c1: int, c2: int, target: int) -> Apply:
    return Apply(X, (target,), ((c1, 1), (c2, 1)))


def registers_read(instr: Instruction) -> tuple[int, ...]:
    return instr.guard_registers if isinstance(instr, Apply) else ()


def registers_written(instr: Instruction) -> tuple[int, ...]:
    return (instr.register,) if isinstance(instr, Measure) else ()


def registers_touched(instr: Instruction) -> tuple[int, ...]:
    return registers_read(instr) + registers_written(instr)


# ---------------------------------------------------------------------------
# Circuit

@dataclass(frozen=True)
class Circuit:
    n: int
    m: int = 0
    body: tuple[Instruction, ...] = ()
    global_phase: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "body", tuple(self.body))
        object.__setattr__(self, "global_phase", _wrap_angle(self.global_phase))

    def __len__(self):
        return len(self.body)

    def __iter__(self):
        return iter(self.body)

    def __getitem__(self, i):
        return self.body[i]

    def with_body(self, body: Iterable[Instruction], global_phase: float | None = None) -> Circuit:
        gp = self.global_phase if global_phase is None else global_phase
        return Circuit(self.n, self.m, tuple(body), gp)

    def add_phase(self, theta: float) -> Circuit:
        return Circuit(self.n, self.m, self.body, self.global_phase + theta)

    def __add__(self, other: Circuit) -> Circuit:
        if (self.n, self.m) != (other.n, other.m):
            raise ValueError("cannot concatenate circuits of different shape")
        return Circuit(self.n, self.m, self.body + other.body, self.global_phase + other.global_phase)


def _wrap_angle(theta: float) -> float:
    w = math.remainder(float(theta), 2 * math.pi)
    return 0.0 if abs(w) < 1e-15 else w


def fold_global_phase(circuit: Circuit) -> Circuit:
    """Move bare (uncontrolled, unguarded) gphase instructions into the accumulator."""
    body, gp = [], circuit.global_phase
    for ins in circuit.body:
        if isinstance(ins, Apply) and ins.gate.name == "gphase" and not ins.qcontrols and not ins.guards:
            gp += ins.gate.theta
        else:
            body.append(ins)
    return Circuit(circuit.n, circuit.m, tuple(body), gp)


# ---------------------------------------------------------------------------
# Validation

@dataclass(frozen=True)
class Diagnostic:
    index: int
    rule: str
    message: str

    def __str__(self):
        return f"instruction {self.index}: [{self.rule}] {self.message}"


def _check(instr: Instruction, n: int, m: int) -> list[tuple[str, str]]:
    out = []
    if isinstance(instr, (Measure, Reset)):
        if not 0 <= instr.qubit < n:
            out.append(("range", f"qubit {instr.qubit} out of range [0, {n})"))
        if isinstance(instr, Measure) and not 0 <= instr.register < m:
            out.append(("range", f"register {instr.register} out of range [0, {m})"))
        return out
    if len(instr.targets) != instr.gate.arity:
        out.append(("arity", f"{instr.gate.name} expects {instr.gate.arity} target(s), got {len(instr.targets)}"))
    for q in instr.qubits:
        if not 0 <= q < n:
            out.append(("range", f"qubit {q} out of range [0, {n})"))
    for r in instr.guard_registers:
        if not 0 <= r < m:
            out.append(("range", f"register {r} out of range [0, {m})"))
    if len(set(instr.qubits)) != len(instr.qubits):
        out.append(("overlap", "targets and control qubits must be pairwise disjoint"))
    if len(set(instr.guard_registers)) != len(instr.guards):
        out.append(("overlap", "a register may guard an instruction at most once"))
    for _, pol in instr.qcontrols + instr.guards:
        if pol not in (0, 1):
            out.append(("polarity", f"polarity must be 0 or 1, got {pol!r}"))
    return out


def validate(circuit: Circuit) -> list[Diagnostic]:
    return [Diagnostic(i, rule, msg)
            for i, ins in enumerate(circuit.body)
            for rule, msg in _check(ins, circuit.n, circuit.m)]


# ---------------------------------------------------------------------------
# Metrics

@dataclass(frozen=True)
class Metrics:
    gates: int = 0
    qcontrolled_gates: int = 0
    cguarded_gates: int = 0
    measurements: int = 0
    resets: int = 0
    depth: int = 0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def count_metrics(circuit: Circuit) -> Metrics:
    gates = qctl = cg = meas = resets = 0
    qubit_level: dict[int, int] = {}
    reg_level: dict[int, int] = {}
    depth = 0
    for ins in circuit.body:
        if isinstance(ins, Apply):
            gates += 1
            if ins.qcontrols:
                qctl += 1
            elif ins.guards:
                cg += 1
        elif isinstance(ins, Measure):
            meas += 1
        else:
            resets += 1
        qs, rs = ins.qubits, registers_touched(ins)
        level = 1 + max([qubit_level.get(q, 0) for q in qs] + [reg_level.get(r, 0) for r in rs] + [0])
        for q in qs:
            qubit_level[q] = level
        for r in rs:
            reg_level[r] = level
        depth = max(depth, level)
    return Metrics(gates, qctl, cg, meas, resets, depth)


def splice(circuit: Circuit, start: int, length: int,
           replacement: Sequence[Instruction]) -> Circuit:
    """Replace body[start:start+length] with `replacement`; returns a new circuit."""
    if start < 0 or length < 0 or start + length > len(circuit.body):
        raise IndexError(f"window [{start}, {start + length}) outside body of length {len(circuit.body)}")
    bad = [msg for ins in replacement for _, msg in _check(ins, circuit.n, circuit.m)]
    if bad:
        raise ValueError(f"invalid replacement: {bad[0]}")
    body = circuit.body[:start] + tuple(replacement) + circuit.body[start + length:]
    return Circuit(circuit.n, circuit.m, body, circuit.global_phase)
