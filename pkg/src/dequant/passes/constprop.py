"""
Quantum-classical constant propagation.

One sweep steps a fresh union table through the circuit. Before each gate is
stepped, the rewrite rules below are tried in priority order; after a rewrite
the rules are tried again on the result, and the table is then stepped over
whatever remains.

    T2  the controls and guards can never hold together  -> delete
    T1  a control is constant: never satisfied -> delete, always -> drop it
    T4  one control implies a qubit control               -> drop the implied one
    T3  a qubit control mirrors a register                -> turn it into a guard
    T5  a diagonal gate multiplies the state by e^{i theta} -> delete, add to phase
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

from ..ir import Apply, Circuit, Instruction, count_metrics
from ..union_table import DEFAULT_M, DEFAULT_N, Fact, UnionTable
from . import MAX_SWEEPS, CapExceeded, PassReport, start_report

ALL_RULES = frozenset({"T1", "T2", "T3", "T4", "T5"})


@dataclass(frozen=True)
class CpConfig:
    N: int = DEFAULT_N
    M: int = DEFAULT_M
    max_sweeps: int = 100
    rules: frozenset = field(default=ALL_RULES)

    def __post_init__(self):
        if self.N < 1 or self.M < 1 or self.max_sweeps < 1:
            raise ValueError("N, M and max_sweeps must be at least 1")
        unknown = set(self.rules) - ALL_RULES
        if unknown:
            raise ValueError(f"unknown rules {sorted(unknown)}")


@dataclass
class Rewrite:
    rule: str
    result: Apply | None  # None deletes the instruction
    fact: Fact
    phase: float = 0.0


def _controls(ins: Apply) -> list[tuple[str, int, int]]:
    return [("q", q, p) for q, p in ins.qcontrols] + [("r", r, p) for r, p in ins.guards]


def _without(ins: Apply, drop: set[tuple[str, int]]) -> Apply:
    return ins.with_(qcontrols=tuple(c for c in ins.qcontrols if ("q", c[0]) not in drop),
                     guards=tuple(g for g in ins.guards if ("r", g[0]) not in drop))


def _name(kind: str, idx: int) -> str:
    return f"{'q' if kind == 'q' else 'c'}{idx}"


def _t2(table: UnionTable, ins: Apply) -> Rewrite | None:
    ctrl = _controls(ins)
    if len(ctrl) > 1 and not table.query_satisfiable(ctrl):
        return Rewrite("T2", None, Fact("Unsat", tuple(ctrl)))
    return None


def _t1(table: UnionTable, ins: Apply) -> Rewrite | None:
    drop = set()
    for kind, idx, pol in _controls(ins):
        v = table.query_qubit(idx) if kind == "q" else table.query_register(idx)
        if v is None:
            continue
        fact = Fact("QubitConst" if kind == "q" else "RegConst", (idx, v))
        if v != pol:
            return Rewrite("T1", None, fact)
        drop.add((kind, idx))
    if drop:
        return Rewrite("T1", _without(ins, drop), Fact("AlwaysSatisfied", tuple(sorted(drop))))
    return None


def _t4(table: UnionTable, ins: Apply) -> Rewrite | None:
    ctrl = _controls(ins)
    # higher-indexed qubit controls are tried first, so mutual implications drop the higher one
    for ci, cpol in sorted(ins.qcontrols, reverse=True):
        for kind, idx, pol in ctrl:
            if (kind, idx) == ("q", ci):
                continue
            holds, _ = table.query_implication((kind, idx, pol), (ci, cpol))
            if holds:
                k = "QImplies" if kind == "q" else "RImpliesQ"
                return Rewrite("T4", _without(ins, {("q", ci)}), Fact(k, (idx, pol, ci, cpol)))
    return None


def _t3(table: UnionTable, ins: Apply) -> Rewrite | None:
    for i, pol in ins.qcontrols:
        group = table.group_of_qubit(i)
        if group.is_top:
            continue
        for j in sorted(group.registers):
            corr = table.query_correlation(i, j)
            if corr is None:
                continue
            b, bp = corr
            gpol = bp if pol == b else 1 - bp
            fact = Fact("Correlation", (i, j, b, bp))
            guards = dict(ins.guards)
            qcontrols = tuple(c for c in ins.qcontrols if c[0] != i)
            if j in guards and guards[j] != gpol:
                return Rewrite("T3", None, fact)
            guards[j] = gpol
            return Rewrite("T3", ins.with_(qcontrols=qcontrols, guards=tuple(guards.items())), fact)
    return None


def _t5(table: UnionTable, ins: Apply) -> Rewrite | None:
    if not ins.gate.is_diagonal or ins.guards:
        return None
    theta = table.query_uniform_phase(ins)
    if theta is None:
        return None
    return Rewrite("T5", None, Fact("UniformPhase", (ins.gate.name, theta)), theta)


_RULES = (("T2", _t2), ("T1", _t1), ("T4", _t4), ("T3", _t3), ("T5", _t5))


def try_rules(table: UnionTable, ins: Apply, enabled: frozenset = ALL_RULES) -> Rewrite | None:
    for name, rule in _RULES:
        if name in enabled:
            hit = rule(table, ins)
            if hit is not None:
                return hit
    return None


@dataclass
class Annotation:
    index: int
    original: Instruction
    result: Instruction | None
    rewrites: list[Rewrite]
    top: bool


def sweep(circuit: Circuit, cfg: CpConfig = CpConfig()) -> tuple[Circuit, list[Annotation]]:
    """One pass of the table over the circuit."""
    table = UnionTable(circuit.n, circuit.m, cfg.N, cfg.M)
    body: list[Instruction] = []
    gp = circuit.global_phase
    notes: list[Annotation] = []
    for idx, ins in enumerate(circuit.body):
        cur: Instruction | None = ins
        fired: list[Rewrite] = []
        while isinstance(cur, Apply):
            hit = try_rules(table, cur, cfg.rules)
            if hit is None:
                break
            fired.append(hit)
            gp += hit.phase
            cur = hit.result
        top = False
        if cur is not None:
            table.step(cur)
            body.append(cur)
            top = any(table.group_of_qubit(q).is_top for q in cur.qubits)
        notes.append(Annotation(idx, ins, cur, fired, top))
    return circuit.with_body(body, gp), notes


def run_cp(circuit: Circuit, cfg: CpConfig = CpConfig()) -> tuple[Circuit, PassReport]:
    t0 = time.perf_counter()
    report = start_report("cp", circuit)
    cur = circuit
    for _ in range(cfg.max_sweeps):
        report.iterations += 1
        nxt, notes = sweep(cur, cfg)
        for note in notes:
            for rw in note.rewrites:
                report.counts[rw.rule] += 1
        if nxt == cur:
            break
        cur = nxt
    else:
        raise CapExceeded(f"cp: no fixed point after {cfg.max_sweeps} sweeps", report, cur)
    report.after = count_metrics(cur)
    report.elapsed_ms = (time.perf_counter() - t0) * 1e3
    return cur, report


def _describe(rw: Rewrite) -> str:
    k, a = rw.fact.kind, rw.fact.args
    if rw.rule == "T3":
        i, j, b, bp = a
        return f"T3: q{i} ⇔ c{j}, control classicalized"
    if rw.rule == "T2":
        ctrl = ", ".join(f"{_name(kind, idx)}={pol}" for kind, idx, pol in a)
        return f"T2: {ctrl} unsatisfiable, deleted"
    if rw.rule == "T1":
        if rw.result is None:
            return f"T1: {_name('q' if k == 'QubitConst' else 'r', a[0])} = {a[1]}, deleted"
        names = ", ".join(_name(kind, idx) for kind, idx in a)
        return f"T1: {names} always satisfied, control dropped"
    if rw.rule == "T4":
        idx, pol, ci, cpol = a
        prem = _name("q" if k == "QImplies" else "r", idx)
        return f"T4: {prem}={pol} ⇒ q{ci}={cpol}, control dropped"
    name, theta = a
    return f"T5: {name} is global phase {theta:.6g}, deleted"


def explain(circuit: Circuit, cfg: CpConfig = CpConfig()) -> str:
    """Annotated listing of one sweep: which rule fired where, and where groups hit ⊤."""
    from ..qasm import format_instruction

    _, notes = sweep(circuit, cfg)
    lines = []
    for note in notes:
        text = format_instruction(note.original)
        tags = [_describe(rw) for rw in note.rewrites]
        if note.top:
            tags.append("group ⊤")
        lines.append(f"{note.index}: {text}" + (f"  # {'; '.join(tags)}" if tags else ""))
    return "\n".join(lines)
