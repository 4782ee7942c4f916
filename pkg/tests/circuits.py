"""Random hybrid circuits for property tests."""
from __future__ import annotations

import math
import random

from hypothesis import strategies as st

from dequant.ir import Apply, Circuit, Gate, Measure, Reset

_FIXED = ("h", "x", "y", "z", "s", "sdg", "t", "tdg")
_ROT = ("p", "rx", "ry", "rz")
_ANGLES = (math.pi, math.pi / 2, -math.pi / 2, math.pi / 4, 2 * math.pi, 0.0)


def random_gate(rng: random.Random, n: int) -> Gate:
    r = rng.random()
    if r < 0.6 or n < 2 and r < 0.9:
        return Gate(rng.choice(_FIXED))
    if r < 0.9:
        # half of the angles are "nice" so phase facts actually show up
        theta = rng.choice(_ANGLES) if rng.random() < 0.5 else rng.uniform(-math.pi, math.pi)
        return Gate(rng.choice(_ROT), theta)
    if n >= 2 and r < 0.96:
        return Gate("swap")
    return Gate("gphase", rng.choice(_ANGLES))


def random_instruction(rng: random.Random, n: int, m: int):
    r = rng.random()
    if m and r < 0.18:
        return Measure(rng.randrange(n), rng.randrange(m), rng.random() < 0.15)
    if r < 0.22:
        return Reset(rng.randrange(n))
    gate = random_gate(rng, n)
    qubits = rng.sample(range(n), n)
    targets = tuple(qubits[:gate.arity])
    free = qubits[gate.arity:]
    k = min(len(free), rng.choice((0, 0, 1, 1, 1, 2)))
    ctrl = tuple((q, 1 if rng.random() < 0.8 else 0) for q in free[:k])
    if gate.arity == 0 and not ctrl and free:
        ctrl = ((free[0], 1),)
    guards = ()
    if m and rng.random() < 0.3:
        regs = rng.sample(range(m), min(m, rng.choice((1, 1, 2))))
        guards = tuple((r_, 1 if rng.random() < 0.7 else 0) for r_ in regs)
    return Apply(gate, targets, ctrl, guards)


def random_template(rng: random.Random, n: int, m: int) -> list:
    """A short instruction pattern that one of the rewrite rules matches."""
    a, b = rng.sample(range(n), 2)
    kind = rng.randrange(4)
    if kind == 0 and m:
        return [Apply(Gate("x"), (b,), ((a, 1),)), Apply(Gate("h"), (b,)), Measure(b, rng.randrange(m))]
    if kind == 1:
        return [Apply(Gate("z"), (b,), ((a, 1),)), Apply(Gate("h"), (a,), ((b, 1),))]
    if kind == 2:
        p = rng.choice("xyz")
        return [Apply(Gate(p), (a,)), Apply(Gate("h"), (a,))]
    return [Apply(Gate("h"), (a,)), Apply(Gate("x"), (b,), ((a, 1),))]


def random_circuit(rng: random.Random, max_n: int = 5, max_m: int = 3, max_len: int = 25) -> Circuit:
    n = rng.randint(1, max_n)
    m = rng.randint(0, max_m)
    length = rng.randint(0, max_len)
    body = []
    while len(body) < length:
        if n >= 2 and rng.random() < 0.12:
            body += random_template(rng, n, m)
        else:
            body.append(random_instruction(rng, n, m))
    body = body[:max_len]
    # most interesting circuits end with read-out
    if m and rng.random() < 0.5:
        body += [Measure(q, q % m) for q in range(min(n, m))]
    return Circuit(n, m, tuple(body), rng.choice((0.0, 0.0, math.pi / 3)))


@st.composite
def instructions(draw, n: int, m: int):
    kind = draw(st.sampled_from(("gate",) * 6 + ("measure", "reset")))
    if kind == "measure" and m:
        return Measure(draw(st.integers(0, n - 1)), draw(st.integers(0, m - 1)), draw(st.booleans()))
    if kind == "reset":
        return Reset(draw(st.integers(0, n - 1)))
    names = _FIXED + _ROT + (("swap",) if n >= 2 else ()) + ("gphase",)
    name = draw(st.sampled_from(names))
    theta = None
    if name in _ROT or name == "gphase":
        theta = draw(st.one_of(st.sampled_from(_ANGLES), st.floats(-math.pi, math.pi)))
    gate = Gate(name, theta)
    order = draw(st.permutations(range(n)))
    targets = tuple(order[:gate.arity])
    free = order[gate.arity:]
    k = draw(st.integers(0, min(2, len(free))))
    if gate.arity == 0 and k == 0:
        if not free:
            return Reset(0)
        k = 1
    ctrl = tuple((q, draw(st.integers(0, 1))) for q in free[:k])
    guards = ()
    if m:
        regs = draw(st.lists(st.integers(0, m - 1), max_size=2, unique=True))
        guards = tuple((r, draw(st.integers(0, 1))) for r in regs)
    return Apply(gate, targets, ctrl, guards)


@st.composite
def circuits(draw, max_n: int = 5, max_m: int = 3, max_len: int = 25):
    n = draw(st.integers(1, max_n))
    m = draw(st.integers(0, max_m))
    body = draw(st.lists(instructions(n, m), max_size=max_len))
    return Circuit(n, m, tuple(body))
