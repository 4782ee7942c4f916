import math

import pytest

from dequant.benchmarks import FAMILIES, adder, bv, dj, generate_benchmark, ghz, qft, qpe, size_ok, wstate
from dequant.ir import H, X, Apply, Circuit, Measure, count_metrics, cx, validate
from dequant.semantics import outcome_distribution


def test_ghz3_structure():
    c = ghz(3)
    assert c.body == (Apply(H, (0,)), cx(0, 1), cx(1, 2), Measure(0, 0), Measure(1, 1), Measure(2, 2))


def test_bv_secret_101():
    c = bv(4, secret="101")
    assert c.body[:5] == (Apply(X, (3,)),) + tuple(Apply(H, (q,)) for q in range(4))
    assert [ins for ins in c.body if isinstance(ins, Apply) and ins.qcontrols] == [cx(0, 3), cx(2, 3)]
    dist = outcome_distribution(c)
    # the data register reads the secret; the ancilla ends in |->, a fair coin
    assert dist == pytest.approx({"1010": 0.5, "1011": 0.5})


def test_dj_balanced():
    for mask in range(8):
        dist = outcome_distribution(dj(4, mask=mask))
        assert sum(p for k, p in dist.items() if k[:3] == "000") == pytest.approx(0)


def test_wstate_uniform_single_excitations():
    for n in range(2, 6):
        dist = outcome_distribution(wstate(n))
        expected = {"".join("1" if i == k else "0" for i in range(n)): 1 / n for k in range(n)}
        assert dist == pytest.approx(expected)


def test_qft_on_zero_is_uniform():
    dist = outcome_distribution(qft(3))
    assert dist == pytest.approx({k: 1 / 8 for k in dist}) and len(dist) == 8


@pytest.mark.parametrize("n", [2, 3, 4])
def test_qpe_peaks_at_encoded_phase(n):
    t = n - 1
    for k in range(2 ** t):
        dist = outcome_distribution(qpe(n, k=k))
        # counting qubits hold k little-endian (qubit 0 leftmost); the eigenstate qubit stays 1
        key = "".join(str((k >> i) & 1) for i in range(t)) + "1"
        assert dist[key] == pytest.approx(1)


@pytest.mark.parametrize("n", [4, 6, 8])
def test_adder_adds(n):
    k = (n - 2) // 2
    for a in range(2 ** k):
        for b in range(2 ** k):
            prep = []
            for i in range(k):
                if (b >> i) & 1:
                    prep.append(Apply(X, (1 + 2 * i,)))
                if (a >> i) & 1:
                    prep.append(Apply(X, (2 + 2 * i,)))
            base = adder(n)
            c = Circuit(n, n, tuple(prep) + base.body)
            (out, p), = outcome_distribution(c).items()
            s = sum(int(out[1 + 2 * i]) << i for i in range(k)) + (int(out[n - 1]) << k)
            assert s == a + b
            assert all(int(out[2 + 2 * i]) == (a >> i) & 1 for i in range(k))


def test_all_families_valid_and_measured():
    for fam in FAMILIES:
        for n in range(2, 11):
            if not size_ok(fam, n):
                continue
            c = generate_benchmark(fam, n, seed=1)
            assert validate(c) == []
            assert c.body[-n:] == tuple(Measure(q, q) for q in range(n))
            assert count_metrics(c).measurements == n


def test_deterministic_per_seed():
    assert generate_benchmark("bv", 6, seed=5) == generate_benchmark("bv", 6, seed=5)
    assert generate_benchmark("qpe", 6, seed=2) == generate_benchmark("qpe", 6, seed=2)


def test_errors():
    with pytest.raises(ValueError):
        generate_benchmark("grover", 4)
    with pytest.raises(ValueError):
        generate_benchmark("adder", 5)
    with pytest.raises(ValueError):
        generate_benchmark("ghz", 1)
    with pytest.raises(ValueError):
        bv(4, secret="10")
    with pytest.raises(ValueError):
        qpe(3, k=4)


def test_qpe_angles_are_exact_multiples():
    c = qpe(5, k=3)
    thetas = [ins.gate.theta for ins in c.body if isinstance(ins, Apply) and ins.gate.name == "p" and ins.targets == (4,)]
    assert thetas == pytest.approx([2 * math.pi * 3 * 2 ** j / 16 for j in range(4)])
