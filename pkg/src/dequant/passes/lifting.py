"""
Measurement lifting and Hadamard lifting.

Both passes scan left to right, apply the first matching rewrite, and restart
until a sweep finds nothing. Measurement lifting moves measurements earlier:

    backward    past a diagonal gate on the measured qubit (commute)
                past a bare X/Y on the measured qubit (commute, negate result)
                past a gate controlled by the measured qubit (control -> guard)
    forward     a later gate controlled by an already measured qubit gets a guard
    dead gate   gates on qubits that were measured and are never used again

Hadamard lifting moves H gates away from measurements:

    R1  X;H -> H;Z      R2  Z;H -> H;X      (same controls and guards)
    R3  Y;H -> H;Y      global phase += pi (uncontrolled only)
    R4  cZ;cH -> cH;cX  when the Z can be re-targeted onto the H target
    R5  CX(c,t);H t;measure t -> H c;H t;CX(t,c);H c;measure t
    then adjacent H;H pairs cancel.
"""
from __future__ import annotations

import math
import time
from typing import Callable, Sequence

import numpy as np

from ..ir import (
    Apply,
    Circuit,
    Gate,
    H,
    Instruction,
    Measure,
    Reset,
    X,
    Z,
    count_metrics,
    cx,
    registers_touched,
    registers_written,
)
from . import MAX_SWEEPS, CapExceeded, PassReport, start_report

Body = list
Rewrite = tuple[Body, str, float]  # new body, rule name, phase delta


def _fixed_point(circuit: Circuit, report: PassReport, find: Callable[[Body], Rewrite | None],
                 max_sweeps: int = MAX_SWEEPS) -> Circuit:
    body, gp = list(circuit.body), circuit.global_phase
    for _ in range(max_sweeps):
        report.iterations += 1
        hit = find(body)
        if hit is None:
            return circuit.with_body(body, gp)
        body, rule, dphase = hit
        gp += dphase
        report.counts[rule] += 1
    raise CapExceeded(f"{report.name}: no fixed point after {max_sweeps} sweeps",
                      report, circuit.with_body(body, gp))


def _classicalize(ins: Apply, qubit: int, register: int, negated: bool) -> Apply | None:
    """Replace the control on `qubit` by a guard on `register`; None if it can never fire."""
    pol = dict(ins.qcontrols)[qubit] ^ int(negated)
    qcontrols = tuple(c for c in ins.qcontrols if c[0] != qubit)
    guards = dict(ins.guards)
    if register in guards:
        if guards[register] != pol:
            return None
        return ins.with_(qcontrols=qcontrols)
    return ins.with_(qcontrols=qcontrols, guards=ins.guards + ((register, pol),))


# ---------------------------------------------------------------------------
# Measurement lifting

def _lift_backward(body: Body, p: int) -> Rewrite | None:
    meas: Measure = body[p]
    i, j = meas.qubit, meas.register
    for e in range(p - 1, -1, -1):
        ins = body[e]
        if i not in ins.qubits and j not in registers_touched(ins):
            continue
        if j in registers_touched(ins) or not isinstance(ins, Apply):
            return None
        rest = body[e + 1:p] + body[p + 1:]
        if i in ins.control_qubits:
            # j is not guarded by ins here, so the merge cannot fail
            return body[:e] + [meas, _classicalize(ins, i, j, meas.negated)] + rest, "classicalize", 0.0
        if ins.gate.is_diagonal:
            return body[:e] + [meas, ins] + rest, "commute_diagonal", 0.0
        if ins.gate.name in ("x", "y") and not ins.qcontrols and not ins.guards:
            flipped = Measure(i, j, not meas.negated)
            return body[:e] + [flipped, ins] + rest, "commute_pauli", 0.0
        return None
    return None


def _lift_forward(body: Body, p: int) -> Rewrite | None:
    meas: Measure = body[p]
    i, j = meas.qubit, meas.register
    for e in range(p + 1, len(body)):
        ins = body[e]
        if j in registers_written(ins):
            return None
        if i not in ins.qubits:
            continue
        if not isinstance(ins, Apply):
            return None
        if i in ins.control_qubits:
            new = _classicalize(ins, i, j, meas.negated)
            repl = [] if new is None else [new]
            return body[:e] + repl + body[e + 1:], "classicalize", 0.0
        if ins.gate.is_diagonal:
            continue
        return None
    return None


def _dead_gates(body: Body) -> Rewrite | None:
    first_measure: dict[int, int] = {}
    last_touch: dict[int, int] = {}
    for p, ins in enumerate(body):
        for q in ins.qubits:
            last_touch[q] = p
        if isinstance(ins, Measure):
            first_measure.setdefault(ins.qubit, p)
    for p, ins in enumerate(body):
        if not isinstance(ins, Apply) or not ins.qubits:
            continue
        if all(first_measure.get(q, p) < p and last_touch[q] == p for q in ins.qubits):
            return body[:p] + body[p + 1:], "dead_gate", 0.0
    return None


def _find_measlift(body: Body) -> Rewrite | None:
    for p, ins in enumerate(body):
        if isinstance(ins, Measure):
            hit = _lift_backward(body, p) or _lift_forward(body, p)
            if hit:
                return hit
    return _dead_gates(body)


def lift_measurements(circuit: Circuit, max_sweeps: int = MAX_SWEEPS) -> tuple[Circuit, PassReport]:
    t0 = time.perf_counter()
    report = start_report("measlift", circuit)
    out = _fixed_point(circuit, report, _find_measlift, max_sweeps)
    report.after = count_metrics(out)
    report.elapsed_ms = (time.perf_counter() - t0) * 1e3
    return out, report


# ---------------------------------------------------------------------------
# Hadamard lifting

def _next_on_wires(body: Body, p: int, qubits: Sequence[int], registers: Sequence[int] = ()) -> int | None:
    """Index of the next instruction after p touching `qubits` or writing `registers`."""
    qs, rs = set(qubits), set(registers)
    for e in range(p + 1, len(body)):
        ins = body[e]
        if qs.intersection(ins.qubits) or rs.intersection(registers_written(ins)):
            return e
    return None


def _is_bare(ins: Instruction, name: str) -> bool:
    return isinstance(ins, Apply) and ins.gate.name == name and not ins.qcontrols and not ins.guards


def _swap_slots(body: Body, p: int, e: int, first: Apply, second: Apply) -> Body:
    out = list(body)
    out[p], out[e] = first, second
    return out


def _pauli_h(body: Body, p: int) -> Rewrite | None:
    """R1, R2, R3 and R4 with the Pauli at p."""
    a = body[p]
    e = _next_on_wires(body, p, a.qubits, a.guard_registers)
    if e is None:
        return None
    b = body[e]
    if not isinstance(b, Apply) or b.gate != H or b.guards != a.guards:
        return None
    name = a.gate.name
    if b.targets == a.targets and b.qcontrols == a.qcontrols:
        if name == "x":
            return _swap_slots(body, p, e, b, a.with_(gate=Z)), "R1", 0.0
        if name == "z":
            return _swap_slots(body, p, e, b, a.with_(gate=X)), "R2", 0.0
        if name == "y" and not a.qcontrols and not a.guards:
            return _swap_slots(body, p, e, b, a), "R3", math.pi
        return None
    if name == "z" and a.qcontrols and all(pol == 1 for _, pol in a.qcontrols + b.qcontrols):
        support = set(a.qubits)
        t = b.targets[0]
        if t in support and t != a.targets[0] and set(b.qubits) == support:
            return _swap_slots(body, p, e, b, b.with_(gate=X)), "R4", 0.0
    return None


def _cnot_h_measure(body: Body, p: int) -> Rewrite | None:
    """R5."""
    a = body[p]
    if a.gate != X or len(a.qcontrols) != 1 or a.qcontrols[0][1] != 1 or a.guards:
        return None
    c, t = a.qcontrols[0][0], a.targets[0]
    e = _next_on_wires(body, p, (t,))
    if e is None or not _is_bare(body[e], "h"):
        return None
    f = _next_on_wires(body, e, (t,))
    if f is None or not isinstance(body[f], Measure):
        return None
    nc = _next_on_wires(body, p, (c,))
    if nc is not None and isinstance(body[nc], Measure):
        return None  # the control is already read out; flipping would only move the problem
    block = [Apply(H, (c,)), Apply(H, (t,)), cx(t, c), Apply(H, (c,))]
    return body[:p] + block + body[p + 1:e] + body[e + 1:], "R5", 0.0


def _find_hrule(body: Body, r5: bool = True) -> Rewrite | None:
    for p, ins in enumerate(body):
        if not isinstance(ins, Apply):
            continue
        if ins.gate.name in ("x", "y", "z"):
            hit = _pauli_h(body, p)
            if hit:
                return hit
        if r5 and ins.gate == X:
            hit = _cnot_h_measure(body, p)
            if hit:
                return hit
    return None


def _find_hh(body: Body) -> Rewrite | None:
    for p, a in enumerate(body):
        if not isinstance(a, Apply) or a.gate != H:
            continue
        e = _next_on_wires(body, p, a.qubits, a.guard_registers)
        if e is None:
            continue
        b = body[e]
        if isinstance(b, Apply) and b == a:
            return body[:p] + body[p + 1:e] + body[e + 1:], "hh_cancel", 0.0
    return None


def lift_hadamards(circuit: Circuit, r5: bool = True, max_sweeps: int = MAX_SWEEPS) -> tuple[Circuit, PassReport]:
    t0 = time.perf_counter()
    report = start_report("hlift", circuit)
    cur = circuit
    for _ in range(max_sweeps):
        nxt = _fixed_point(cur, report, lambda b: _find_hrule(b, r5), max_sweeps)
        nxt = _fixed_point(nxt, report, _find_hh, max_sweeps)
        if nxt == cur:
            break
        cur = nxt
    else:
        raise CapExceeded(f"hlift: no fixed point after {max_sweeps} rounds", report, cur)
    report.after = count_metrics(cur)
    report.elapsed_ms = (time.perf_counter() - t0) * 1e3
    return cur, report


# ---------------------------------------------------------------------------
# Rule identities as dense unitaries

def _dense(body: Sequence[Apply], n: int) -> np.ndarray:
    dim = 2 ** n
    total = np.eye(dim, dtype=complex)
    for ins in body:
        u = ins.gate.matrix
        op = np.zeros((dim, dim), dtype=complex)
        for k in range(dim):
            if any(((k >> q) & 1) != pol for q, pol in ins.qcontrols):
                op[k, k] = 1
                continue
            col = sum(((k >> t) & 1) << idx for idx, t in enumerate(ins.targets))
            base = k
            for t in ins.targets:
                base &= ~(1 << t)
            for row in range(u.shape[0]):
                dest = base
                for idx, t in enumerate(ins.targets):
                    if (row >> idx) & 1:
                        dest |= 1 << t
                op[dest, k] += u[row, col]
        total = op @ total
    return total


def check_rule_unitaries() -> list[tuple[str, float]]:
    """Max entrywise deviation between both sides of every rewrite identity.

    Sides are compared exactly, with each rule's recorded phase applied to the
    right-hand side, so no further alignment is needed.
    """
    def g(gate: Gate, t: int, *ctrl: int) -> Apply:
        return Apply(gate, (t,), tuple((c, 1) for c in ctrl))

    Y = Gate("y")
    cases = [
        ("R1", 1, [g(X, 0), g(H, 0)], [g(H, 0), g(Z, 0)], 0.0),
        ("R2", 1, [g(Z, 0), g(H, 0)], [g(H, 0), g(X, 0)], 0.0),
        ("R3", 1, [g(Y, 0), g(H, 0)], [g(H, 0), g(Y, 0)], math.pi),
        ("R1-controlled", 2, [g(X, 0, 1), g(H, 0, 1)], [g(H, 0, 1), g(Z, 0, 1)], 0.0),
        ("R2-controlled", 2, [g(Z, 0, 1), g(H, 0, 1)], [g(H, 0, 1), g(X, 0, 1)], 0.0),
        ("R4", 2, [g(Z, 1, 0), g(H, 0, 1)], [g(H, 0, 1), g(X, 0, 1)], 0.0),
        ("R4-three-qubit", 3, [g(Z, 2, 0, 1), g(H, 0, 1, 2)], [g(H, 0, 1, 2), g(X, 0, 1, 2)], 0.0),
        ("R5", 2, [cx(0, 1), g(H, 1)], [g(H, 0), g(H, 1), cx(1, 0), g(H, 0)], 0.0),
        ("HH", 1, [g(H, 0), g(H, 0)], [], 0.0),
    ]
    out = []
    for name, n, lhs, rhs, phase in cases:
        a = _dense(lhs, n)
        b = np.exp(1j * phase) * _dense(rhs, n)
        out.append((name, float(np.max(np.abs(a - b)))))
    return out
