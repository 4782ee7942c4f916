import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dequant.ir import (
    GATE_NAMES,
    H,
    X,
    Y,
    Z,
    Apply,
    Circuit,
    Gate,
    Measure,
    Metrics,
    Reset,
    count_metrics,
    cx,
    fold_global_phase,
    splice,
    validate,
)

from circuits import circuits

_ANGLES = (0.0, 0.3, -1.7, math.pi, 2.5)


def _all_gates():
    for name in GATE_NAMES:
        if name in ("p", "rx", "ry", "rz", "gphase"):
            for t in _ANGLES:
                yield Gate(name, t)
        else:
            yield Gate(name)


@pytest.mark.parametrize("gate", list(_all_gates()), ids=str)
def test_matrix_unitary(gate):
    u = gate.matrix
    assert np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=1e-12)
    assert u.shape == (2 ** gate.arity,) * 2


@pytest.mark.parametrize("gate", list(_all_gates()), ids=str)
def test_matrix_times_inverse(gate):
    u, v = gate.matrix, gate.inverse().matrix
    assert np.abs(u @ v - np.eye(u.shape[0])).max() <= 1e-12


@pytest.mark.parametrize("name", ["p", "rz", "gphase"])
def test_phase_kinds_diagonal(name):
    g = Gate(name, 0.7)
    assert g.is_diagonal
    u = g.matrix
    assert np.allclose(u, np.diag(np.diag(u)))


def test_gate_rejects_bad_theta():
    with pytest.raises(ValueError):
        Gate("h", 0.5)
    with pytest.raises(ValueError):
        Gate("rx")
    with pytest.raises(ValueError):
        Gate("frob")


def test_validate_well_formed():
    assert validate(Circuit(2, 0, (cx(0, 1),))) == []


def test_validate_out_of_range():
    diags = validate(Circuit(2, 0, (Apply(X, (5,)),)))
    assert len(diags) == 1
    assert diags[0].index == 0 and diags[0].rule == "range"


def test_validate_overlap():
    diags = validate(Circuit(2, 0, (cx(0, 0),)))
    assert len(diags) == 1
    assert diags[0].rule == "overlap"


def test_validate_other_rules():
    c = Circuit(2, 1, (
        Measure(0, 3),
        Apply(X, (0,), guards=((0, 1), (0, 0))),
        Apply(Gate("swap"), (0,)),
        Apply(X, (1,), ((0, 2),)),
    ))
    rules = [(d.index, d.rule) for d in validate(c)]
    assert rules == [(0, "range"), (1, "overlap"), (2, "arity"), (3, "polarity")]


def test_metrics_dynamic_circuit_left():
    c = Circuit(2, 1, (Measure(0, 0), cx(0, 1)))
    m = count_metrics(c)
    assert (m.gates, m.qcontrolled_gates, m.cguarded_gates) == (1, 1, 0)


def test_metrics_dynamic_circuit_right():
    c = Circuit(2, 1, (Measure(0, 0), Apply(X, (1,), guards=((0, 1),))))
    m = count_metrics(c)
    assert (m.gates, m.qcontrolled_gates, m.cguarded_gates) == (1, 0, 1)


def test_metrics_empty():
    assert count_metrics(Circuit(3, 2)) == Metrics()


def test_metrics_depth():
    # two parallel H, then a CX joining them, then a measure guarded chain through c0
    c = Circuit(2, 1, (Apply(H, (0,)), Apply(H, (1,)), cx(0, 1), Measure(1, 0),
                       Apply(X, (0,), guards=((0, 1),))))
    m = count_metrics(c)
    assert m.depth == 4
    assert (m.measurements, m.resets) == (1, 0)


def test_splice_delete():
    c = Circuit(1, 0, (Apply(H, (0,)),))
    assert splice(c, 0, 1, []).body == ()
    assert c.body == (Apply(H, (0,)),)


def test_splice_expand():
    c = Circuit(1, 0, (Apply(X, (0,)),))
    out = splice(c, 0, 1, [Apply(H, (0,)), Apply(Z, (0,)), Apply(H, (0,))])
    assert len(out.body) == 3


def test_splice_substitute():
    c = Circuit(2, 0, (Apply(H, (0,)), Apply(X, (1,))))
    assert splice(c, 1, 1, [Apply(Y, (1,))]).body == (Apply(H, (0,)), Apply(Y, (1,)))


def test_splice_errors():
    c = Circuit(1, 0, (Apply(H, (0,)),))
    with pytest.raises(IndexError):
        splice(c, 1, 1, [])
    with pytest.raises(IndexError):
        splice(c, -1, 1, [])
    with pytest.raises(ValueError):
        splice(c, 0, 1, [Apply(X, (4,))])


def test_controls_are_canonical():
    a = Apply(X, (2,), ((1, 1), (0, 0)), ((3, 1), (1, 0)))
    b = Apply(X, (2,), ((0, 0), (1, 1)), ((1, 0), (3, 1)))
    assert a == b and hash(a) == hash(b)


def test_global_phase_wrapped_and_folded():
    c = Circuit(1, 0, (Apply(Gate("gphase", math.pi), (), ()), Apply(H, (0,))), 3 * math.pi / 2)
    assert c.global_phase == pytest.approx(-math.pi / 2)
    f = fold_global_phase(c)
    assert f.body == (Apply(H, (0,)),)
    assert f.global_phase == pytest.approx(math.pi / 2)


def _shift(c: Circuit, dq: int, dr: int, n: int, m: int) -> Circuit:
    body = []
    for ins in c.body:
        if isinstance(ins, Apply):
            body.append(Apply(ins.gate, tuple(q + dq for q in ins.targets),
                              tuple((q + dq, p) for q, p in ins.qcontrols),
                              tuple((r + dr, p) for r, p in ins.guards)))
        elif isinstance(ins, Measure):
            body.append(Measure(ins.qubit + dq, ins.register + dr, ins.negated))
        else:
            body.append(Reset(ins.qubit + dq))
    return Circuit(n, m, tuple(body))


@settings(max_examples=60, deadline=None)
@given(circuits(3, 2, 12), circuits(3, 2, 12))
def test_metrics_additive_on_disjoint_indices(a, b):
    n, m = a.n + b.n, a.m + b.m
    left = _shift(a, 0, 0, n, m)
    right = _shift(b, a.n, a.m, n, m)
    both = count_metrics(left + right)
    ma, mb = count_metrics(a), count_metrics(b)
    for field in ("gates", "qcontrolled_gates", "cguarded_gates", "measurements", "resets"):
        assert getattr(both, field) == getattr(ma, field) + getattr(mb, field)
    assert both.qcontrolled_gates <= both.gates


@settings(max_examples=80, deadline=None)
@given(circuits(4, 2, 15), st.data())
def test_splice_then_inverse_splice(c, data):
    start = data.draw(st.integers(0, len(c.body)))
    length = data.draw(st.integers(0, len(c.body) - start))
    repl = data.draw(st.lists(st.sampled_from([Apply(H, (0,)), Reset(0), Apply(Z, (0,))]), max_size=4))
    window = c.body[start:start + length]
    out = splice(c, start, length, repl)
    back = splice(out, start, len(repl), window)
    assert back == c


@settings(max_examples=80, deadline=None)
@given(circuits(5, 3, 20))
def test_generated_circuits_validate(c):
    assert validate(c) == []
