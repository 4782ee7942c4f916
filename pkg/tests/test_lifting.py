import json
import math
import random
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings

from dequant.benchmarks import ghz
from dequant.ir import H, X, Y, Z, Apply, Circuit, Measure, count_metrics, cx
from dequant.passes import CapExceeded
from dequant.passes.lifting import check_rule_unitaries, lift_hadamards, lift_measurements
from dequant.qasm import load
from dequant.semantics import equivalent

import dense_oracle
from circuits import circuits, random_circuit

FIG = Path(__file__).parent / "data" / "figures"


def _fig(name):
    return load(FIG / f"{name}.qasm")


# goldens

def test_dynamic_circuit_figure():
    out, rep = lift_measurements(_fig("dynamic_circuit_in"))
    assert out == _fig("dynamic_circuit_out")
    assert rep.counts["classicalize"] == 1


def test_measurement_lifting_figure():
    src = _fig("measurement_lifting_in")
    out, rep = lift_measurements(src)
    assert out == _fig("measurement_lifting_out")
    assert out.body == (Measure(0, 0), Apply(X, (1,), guards=((0, 1),)))
    assert count_metrics(out).qcontrolled_gates == 0
    assert rep.after == count_metrics(out) and rep.before == count_metrics(src)


def test_hadamard_lifting_figure():
    mid, rep = lift_hadamards(_fig("hadamard_lifting_in"))
    assert mid == _fig("hadamard_lifting_mid")
    assert rep.counts["R2"] == 1
    out, _ = lift_measurements(mid)
    assert out == _fig("hadamard_lifting_out")
    assert out.body[-1] == Measure(0, 0, negated=True)


def test_cz_ch_retarget_figure():
    out, rep = lift_hadamards(_fig("cz_ch_retarget_in"))
    assert out == _fig("cz_ch_retarget_out")
    assert rep.counts["R4"] == 1


def test_cnot_h_measure_figure():
    src = _fig("cnot_h_measure_in")
    out, rep = lift_hadamards(src)
    assert out == _fig("cnot_h_measure_out")
    assert out.body == (Apply(H, (0,)), Apply(H, (1,)), cx(1, 0), Apply(H, (0,)), Measure(1, 0))
    assert rep.counts["R5"] == 1
    assert count_metrics(out).gates > count_metrics(src).gates
    assert equivalent(src, out)


# spec examples

@pytest.mark.parametrize("n", range(2, 11))
def test_ghz_loses_all_quantum_controls(n):
    out, _ = lift_measurements(ghz(n))
    assert count_metrics(ghz(n)).qcontrolled_gates == n - 1
    assert count_metrics(out).qcontrolled_gates == 0
    if n <= 8:
        assert equivalent(ghz(n), out)


def test_z_before_measure_one_qubit():
    src = Circuit(1, 1, (Apply(Z, (0,)), Measure(0, 0)))
    out, rep = lift_measurements(src)
    assert out.body == (Measure(0, 0),)
    assert rep.counts["commute_diagonal"] == 1 and rep.counts["dead_gate"] == 1
    assert dense_oracle.tv(dense_oracle.distribution(src), dense_oracle.distribution(out)) < 1e-12


def test_x_before_measure_negates():
    src = Circuit(2, 1, (Apply(X, (0,)), Measure(0, 0), Apply(X, (1,), guards=((0, 1),))))
    out, rep = lift_measurements(src)
    assert out.body[0] == Measure(0, 0, negated=True)
    assert rep.counts["commute_pauli"] == 1
    assert equivalent(src, out)


def test_y_over_h_adds_pi():
    out, rep = lift_hadamards(Circuit(1, 0, (Apply(Y, (0,)), Apply(H, (0,)))))
    assert out.body == (Apply(H, (0,)), Apply(Y, (0,)))
    assert out.global_phase == pytest.approx(math.pi)
    assert rep.counts["R3"] == 1


def test_controlled_y_not_commuted():
    src = Circuit(2, 0, (Apply(Y, (1,), ((0, 1),)), Apply(H, (1,), ((0, 1),))))
    out, rep = lift_hadamards(src)
    assert out == src and rep.applications == 0


def test_controlled_x_h_same_controls():
    src = Circuit(3, 0, (Apply(X, (2,), ((0, 1), (1, 0))), Apply(H, (2,), ((0, 1), (1, 0)))))
    out, rep = lift_hadamards(src)
    assert out.body == (Apply(H, (2,), ((0, 1), (1, 0))), Apply(Z, (2,), ((0, 1), (1, 0))))
    assert rep.counts["R1"] == 1


def test_different_controls_not_commuted():
    src = Circuit(3, 0, (Apply(X, (2,), ((0, 1),)), Apply(H, (2,), ((1, 1),))))
    out, _ = lift_hadamards(src)
    assert out == src


def test_hh_cancel():
    out, rep = lift_hadamards(Circuit(1, 0, (Apply(H, (0,)), Apply(H, (0,)))))
    assert out.body == () and rep.counts["hh_cancel"] == 1


def test_rule_unitaries():
    report = dict(check_rule_unitaries())
    for rule in ("R1", "R2", "R3", "R4", "R5", "HH"):
        assert rule in report
    assert max(report.values()) <= 1e-12
    assert report["R2"] == 0


def test_r2_r3_by_hand():
    h, x, y, z = (g.matrix for g in (H, X, Y, Z))
    # circuit order X;H is the product H @ X
    assert np.abs(h @ x - z @ h).max() == 0
    assert np.abs(h @ y + y @ h).max() < 1e-15


def test_r5_as_dense_products():
    """Both sides of the CNOT/H/measure rule as 4x4 products with deferred measurement."""
    lhs = Circuit(2, 1, (cx(0, 1), Apply(H, (1,)), Measure(1, 0)))
    rhs = Circuit(2, 1, (Apply(H, (0,)), Apply(H, (1,)), cx(1, 0), Apply(H, (0,)), Measure(1, 0)))

    def unitary(body):
        cols = []
        for k in range(4):
            prep = tuple(Apply(X, (q,)) for q in range(2) if (k >> q) & 1)
            (_, v, _), = dense_oracle.branches(Circuit(2, 0, prep + body))
            cols.append(v)
        return np.column_stack(cols)

    u_l = unitary((cx(0, 1), Apply(H, (1,))))
    u_r = unitary((Apply(H, (0,)), Apply(H, (1,)), cx(1, 0), Apply(H, (0,))))
    # the measured qubit sees the same distribution for every input basis state
    idx = np.arange(4)
    for col in range(4):
        for b in (0, 1):
            sel = ((idx >> 1) & 1) == b
            assert np.sum(np.abs(u_l[sel, col]) ** 2) == pytest.approx(np.sum(np.abs(u_r[sel, col]) ** 2), abs=1e-12)
    assert equivalent(lhs, rhs)


def test_max_sweeps_cap():
    body = tuple(Apply(Z, (0,)) for _ in range(5)) + (Measure(0, 0),)
    with pytest.raises(CapExceeded) as info:
        lift_measurements(Circuit(1, 1, body), max_sweeps=2)
    assert info.value.report is not None


# properties

def _random_batch(seed, count):
    rng = random.Random(seed)
    return [random_circuit(rng, 5, 3, 25) for _ in range(count)]


@settings(max_examples=150, deadline=None)
@given(circuits(5, 3, 20))
def test_measlift_equivalent(c):
    out, rep = lift_measurements(c)
    assert equivalent(c, out)
    assert count_metrics(out).qcontrolled_gates <= count_metrics(c).qcontrolled_gates
    assert rep.after == count_metrics(out)


@settings(max_examples=150, deadline=None)
@given(circuits(5, 3, 20))
def test_hlift_equivalent(c):
    out, _ = lift_hadamards(c)
    assert equivalent(c, out)
    assert count_metrics(out).qcontrolled_gates <= count_metrics(c).qcontrolled_gates


def test_templates_equivalent_and_monotone():
    fired = set()
    for c in _random_batch(5, 400):
        m, rep_m = lift_measurements(c)
        h, rep_h = lift_hadamards(c)
        h_no5, _ = lift_hadamards(c, r5=False)
        fired |= set(rep_m.counts) | set(rep_h.counts)
        for out in (m, h, h_no5):
            assert equivalent(c, out)
            assert dense_oracle.tv(dense_oracle.distribution(c), dense_oracle.distribution(out)) <= 1e-9
        assert count_metrics(h_no5).gates <= count_metrics(c).gates
        assert count_metrics(h).qcontrolled_gates <= count_metrics(c).qcontrolled_gates
        assert count_metrics(m).qcontrolled_gates <= count_metrics(c).qcontrolled_gates
    assert fired >= {"commute_diagonal", "commute_pauli", "classicalize", "dead_gate",
                     "R1", "R2", "R3", "R4", "R5", "hh_cancel"}


@settings(max_examples=150, deadline=None)
@given(circuits(5, 3, 20))
def test_idempotent(c):
    m, _ = lift_measurements(c)
    again, rep = lift_measurements(m)
    assert rep.applications == 0 and again == m
    h, _ = lift_hadamards(c)
    again, rep = lift_hadamards(h)
    assert rep.applications == 0 and again == h


def test_idempotent_on_templates():
    for c in _random_batch(6, 300):
        for lift in (lift_measurements, lift_hadamards):
            out, _ = lift(c)
            again, rep = lift(out)
            assert rep.applications == 0 and again == out


def test_figure_index_passes_known():
    names = {e["passes"] for e in json.loads((FIG / "figures.json").read_text())}
    assert names <= {"measlift", "hlift", "cp", "hlift,measlift"}
