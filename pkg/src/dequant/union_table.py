"""
Abstract interpreter over hybrid union tables.

Qubits are partitioned into groups; each group holds either TOP or an exact
local machine state over its qubits and the registers entangled with them.
A local state may hold at most N amplitudes per hybrid state and at most M
hybrid states; overflow turns the group into TOP. Registers outside every
group are the classical constant 0.

The query methods answer the questions constant propagation asks. Every
positive answer is a fact about every concrete state the table stands for.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .ir import Apply, Instruction, Measure, Reset
from .semantics import (
    EQ_TOL,
    HybridState,
    MachineState,
    QuantumState,
    step as concrete_step,
)

DEFAULT_N = 16
DEFAULT_M = 4


class _Top:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "TOP"


TOP = _Top()


@dataclass
class Group:
    qubits: list[int]
    registers: list[int]
    state: MachineState | _Top

    @property
    def is_top(self) -> bool:
        return self.state is TOP

    def qpos(self, q: int) -> int:
        return self.qubits.index(q)

    def rpos(self, r: int) -> int:
        return self.registers.index(r)


@dataclass(frozen=True)
class Fact:
    """A proven statement, kept for explain output."""

    kind: str
    args: tuple

    def __str__(self):
        return f"{self.kind}{self.args}"


def _tensor(a: MachineState, b: MachineState) -> MachineState:
    """Local product state; b's qubits and registers are appended after a's."""
    entries = []
    for ha, pa in a:
        for hb, pb in b:
            amps = {ka | (kb << a.n): va * vb for ka, va in ha.psi.amps.items() for kb, vb in hb.psi.amps.items()}
            psi = QuantumState(a.n + b.n, amps)
            entries.append((HybridState(psi, ha.beta + hb.beta), pa * pb))
    return MachineState(a.n + b.n, a.m + b.m, entries)


def _single_zero() -> MachineState:
    return MachineState(1, 0, [(HybridState(QuantumState.basis(1, 0), ()), 1.0)])


class UnionTable:
    def __init__(self, n: int, m: int, N: int = DEFAULT_N, M: int = DEFAULT_M):
        if N < 1 or M < 1:
            raise ValueError("N and M must be at least 1")
        self.n, self.m, self.N, self.M = n, m, N, M
        self.groups: dict[int, Group] = {q: Group([q], [], _single_zero()) for q in range(n)}
        self.qgroup: list[int] = list(range(n))
        self.rgroup: dict[int, int] = {}
        self._next_id = n

    # -- bookkeeping --------------------------------------------------------

    def copy(self) -> UnionTable:
        t = UnionTable.__new__(UnionTable)
        t.n, t.m, t.N, t.M = self.n, self.m, self.N, self.M
        t.groups = {gid: Group(list(g.qubits), list(g.registers), g.state) for gid, g in self.groups.items()}
        t.qgroup = list(self.qgroup)
        t.rgroup = dict(self.rgroup)
        t._next_id = self._next_id
        return t

    def group_of_qubit(self, q: int) -> Group:
        return self.groups[self.qgroup[q]]

    def group_of_register(self, r: int) -> Group | None:
        gid = self.rgroup.get(r)
        return None if gid is None else self.groups[gid]

    def _fits(self, state: MachineState) -> bool:
        return len(state) <= self.M and all(len(hs.psi) <= self.N for hs, _ in state)

    def _combine(self, gids: Sequence[int], extra_registers: Sequence[int] = ()) -> Group:
        """Merged group of `gids` plus pooled registers (value 0), without mutating."""
        qubits: list[int] = []
        registers: list[int] = []
        state: MachineState | _Top | None = None
        for gid in gids:
            g = self.groups[gid]
            qubits += g.qubits
            registers += g.registers
            if state is TOP or g.is_top:
                state = TOP
            elif state is None:
                state = g.state
            else:
                state = _tensor(state, g.state)
                if not self._fits(state):
                    state = TOP
        if extra_registers:
            registers += extra_registers
            if state is not TOP:
                base = state if state is not None else MachineState(0, 0, [(HybridState(QuantumState(0, {0: 1}), ()), 1.0)])
                pool = MachineState(0, len(extra_registers), [(HybridState(QuantumState(0, {0: 1}), (0,) * len(extra_registers)), 1.0)])
                state = _tensor(base, pool)
        if state is None:
            state = MachineState(0, 0, [(HybridState(QuantumState(0, {0: 1}), ()), 1.0)])
        return Group(qubits, registers, state)

    def _install(self, gids: Sequence[int], group: Group) -> int:
        for gid in gids:
            del self.groups[gid]
        gid = self._next_id
        self._next_id += 1
        self.groups[gid] = group
        for q in group.qubits:
            self.qgroup[q] = gid
        for r in group.registers:
            self.rgroup[r] = gid
        return gid

    # -- stepping -----------------------------------------------------------

    def step(self, instr: Instruction) -> None:
        """Abstractly execute one instruction in place."""
        if isinstance(instr, Apply):
            guards = []
            for r, pol in instr.guards:
                if r not in self.rgroup:
                    if pol == 1:
                        return  # guard on constant-0 register never fires
                    continue
                guards.append((r, pol))
            instr = instr.with_(guards=tuple(guards))
            if not instr.qubits:
                return  # pure phase, unobservable per hybrid state
            regs = list(instr.guard_registers)
        elif isinstance(instr, Measure):
            regs = [instr.register]
        elif isinstance(instr, Reset):
            g = self.group_of_qubit(instr.qubit)
            if g.is_top:
                self._split_reset(instr.qubit)
                return
            regs = []
        else:
            raise TypeError(f"not an instruction: {instr!r}")

        gids: list[int] = []
        for q in instr.qubits:
            if self.qgroup[q] not in gids:
                gids.append(self.qgroup[q])
        pooled = []
        for r in regs:
            gid = self.rgroup.get(r)
            if gid is None:
                pooled.append(r)
            elif gid not in gids:
                gids.append(gid)
        group = self._combine(gids, pooled)
        if not group.is_top:
            local = _localize(instr, group)
            state = concrete_step(group.state, local)
            group.state = state if self._fits(state) else TOP
        self._install(gids, group)

    def _split_reset(self, q: int) -> None:
        gid = self.qgroup[q]
        g = self.groups[gid]
        g.qubits.remove(q)
        if not g.qubits and not g.registers:
            del self.groups[gid]
        self._install([], Group([q], [], _single_zero()))

    def run(self, body: Iterable[Instruction]) -> UnionTable:
        for ins in body:
            self.step(ins)
        return self

    # -- queries ------------------------------------------------------------

    def query_qubit(self, i: int) -> int | None:
        g = self.group_of_qubit(i)
        if g.is_top:
            return None
        k = g.qpos(i)
        values = {hs.psi.value_of(k) for hs, _ in g.state}
        if len(values) == 1:
            return values.pop()
        return None

    def query_register(self, j: int) -> int | None:
        g = self.group_of_register(j)
        if g is None:
            return 0
        if g.is_top:
            return None
        k = g.rpos(j)
        values = {hs.beta[k] for hs, _ in g.state}
        return values.pop() if len(values) == 1 else None

    def query_correlation(self, i: int, j: int) -> tuple[int, int] | None:
        """(1, b') such that qubit i is 1 exactly when register j is b'."""
        g = self.group_of_qubit(i)
        if g.is_top or self.rgroup.get(j) != self.qgroup[i]:
            return None
        qi, rj = g.qpos(i), g.rpos(j)
        pairs = set()
        for hs, _ in g.state:
            v = hs.psi.value_of(qi)
            if v is None:
                return None
            pairs.add((v, hs.beta[rj]))
        for bp in (1, 0):
            if all((v == 1) == (r == bp) for v, r in pairs):
                return 1, bp
        return None

    def query_implication(self, premise: tuple[str, int, int], conclusion: tuple[int, int]) -> tuple[bool, bool]:
        """Does premise ('q'|'r', index, bit) imply qubit conclusion[0] == conclusion[1]?

        Returns (holds, vacuous).
        """
        kind, idx, b = premise
        ci, cb = conclusion
        g = self.group_of_qubit(ci)
        pgid = self.qgroup[idx] if kind == "q" else self.rgroup.get(idx)
        if g.is_top or pgid != self.qgroup[ci]:
            return False, False
        cpos = g.qpos(ci)
        ppos = g.qpos(idx) if kind == "q" else g.rpos(idx)
        seen = False
        for hs, _ in g.state:
            if kind == "r" and hs.beta[ppos] != b:
                continue
            for k in hs.psi.amps:
                if kind == "q" and ((k >> ppos) & 1) != b:
                    continue
                seen = True
                if ((k >> cpos) & 1) != cb:
                    return False, False
        return True, not seen

    def query_satisfiable(self, controls: Sequence[tuple[str, int, int]]) -> bool:
        """Can all (kind, index, polarity) controls hold at once? Conservative."""
        by_group: dict[int, list[tuple[str, int, int]]] = {}
        for kind, idx, pol in controls:
            if kind == "r" and idx not in self.rgroup:
                if pol == 1:
                    return False
                continue
            gid = self.qgroup[idx] if kind == "q" else self.rgroup[idx]
            by_group.setdefault(gid, []).append((kind, idx, pol))
        for gid, cs in by_group.items():
            g = self.groups[gid]
            if g.is_top:
                continue
            qc = [(g.qpos(i), p) for k, i, p in cs if k == "q"]
            rc = [(g.rpos(i), p) for k, i, p in cs if k == "r"]
            if not any(all(hs.beta[r] == p for r, p in rc)
                       and any(all(((k >> q) & 1) == p for q, p in qc) for k in hs.psi.amps)
                       for hs, _ in g.state):
                return False
        return True

    def query_uniform_phase(self, instr: Apply) -> float | None:
        """θ if the unguarded diagonal gate acts as the scalar e^{iθ} on every reachable state."""
        if not instr.gate.is_diagonal:
            raise ValueError(f"{instr.gate.name} is not diagonal")
        if instr.guards:
            return None
        if not instr.qubits:
            return instr.gate.theta
        gids = []
        for q in instr.qubits:
            if self.qgroup[q] not in gids:
                gids.append(self.qgroup[q])
        g = self._combine(gids)
        if g.is_top:
            return None
        diag = [instr.gate.matrix[d, d] for d in range(2 ** instr.gate.arity)]
        tpos = [g.qpos(t) for t in instr.targets]
        cpos = [(g.qpos(c), p) for c, p in instr.qcontrols]
        factor = None
        for hs, _ in g.state:
            for k in hs.psi.amps:
                if all(((k >> c) & 1) == p for c, p in cpos):
                    col = sum(((k >> t) & 1) << idx for idx, t in enumerate(tpos))
                    f = complex(diag[col])
                else:
                    f = 1 + 0j
                if factor is None:
                    factor = f
                elif abs(f - factor) > EQ_TOL:
                    return None
        if factor is None:
            return None
        theta = cmath.phase(factor)
        return math.pi if abs(theta + math.pi) < 1e-15 else theta

    # -- export -------------------------------------------------------------

    def to_machine_state(self) -> MachineState:
        """Global product state in circuit indexing; requires no TOP group."""
        gids = sorted(self.groups)
        g = self._combine(gids)
        if g.is_top:
            raise ValueError("table contains TOP")
        pooled = [r for r in range(self.m) if r not in self.rgroup]
        entries = []
        for hs, p in g.state:
            amps = {}
            for k, v in hs.psi.amps.items():
                gk = 0
                for pos, q in enumerate(g.qubits):
                    if (k >> pos) & 1:
                        gk |= 1 << q
                amps[gk] = v
            beta = [0] * self.m
            for pos, r in enumerate(g.registers):
                beta[r] = hs.beta[pos]
            for r in pooled:
                beta[r] = 0
            entries.append((HybridState(QuantumState(self.n, amps), tuple(beta)), p))
        return MachineState(self.n, self.m, entries)

    def dump(self) -> str:
        lines = []
        for gid in sorted(self.groups, key=lambda k: min(self.groups[k].qubits, default=self.n)):
            g = self.groups[gid]
            qs, rs = sorted(g.qubits), sorted(g.registers)
            label = ",".join(f"q{q}" for q in qs) + ("; " + ",".join(f"r{r}" for r in rs) if rs else "")
            if g.is_top:
                lines.append(f"group {{{label}}}: ⊤")
                continue
            lines.append(f"group {{{label}}}: {len(g.state)} entries")
            qpos = [g.qpos(q) for q in qs]
            rpos = [g.rpos(r) for r in rs]
            for hs, p in g.state:
                terms = []
                for k in sorted(hs.psi.amps, key=lambda k: [(k >> pos) & 1 for pos in qpos]):
                    basis = "".join(str((k >> pos) & 1) for pos in qpos)
                    terms.append(f"|{basis}⟩→{_fmt(hs.psi.amps[k])}")
                beta = "".join(str(hs.beta[pos]) for pos in rpos)
                lines.append(f"  {','.join(terms)}  β={beta}  p={p:.6g}")
        return "\n".join(lines)

    def __str__(self):
        return self.dump()


def _fmt(z: complex) -> str:
    if abs(z.imag) < 1e-12:
        return f"{z.real:.6g}"
    if abs(z.real) < 1e-12:
        return f"{z.imag:.6g}j"
    return f"{z.real:.6g}{z.imag:+.6g}j"


def _localize(instr: Instruction, g: Group) -> Instruction:
    if isinstance(instr, Apply):
        return Apply(instr.gate, tuple(g.qpos(t) for t in instr.targets),
                     tuple((g.qpos(c), p) for c, p in instr.qcontrols),
                     tuple((g.rpos(r), p) for r, p in instr.guards))
    if isinstance(instr, Measure):
        return Measure(g.qpos(instr.qubit), g.rpos(instr.register), instr.negated)
    return Reset(g.qpos(instr.qubit))


def init_table(n: int, m: int, N: int = DEFAULT_N, M: int = DEFAULT_M) -> UnionTable:
    return UnionTable(n, m, N, M)


def abstract_step(table: UnionTable, instr: Instruction) -> UnionTable:
    t = table.copy()
    t.step(instr)
    return t
