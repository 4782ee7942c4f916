"""
Benchmark circuit generators.

Every circuit starts from |0...0> and ends by measuring qubit k into bit k.
Families with an oracle (bv, dj, qpe) draw it from `seed` unless given.
"""
from __future__ import annotations

import math
import random

from .ir import H, X, Apply, Circuit, Instruction, Measure, SWAP, ccx, cx, cz, phase, ry

FAMILIES = ("ghz", "wstate", "bv", "dj", "qft", "qpe", "adder")
_MIN_SIZE = {"ghz": 2, "wstate": 2, "bv": 2, "dj": 2, "qft": 1, "qpe": 2, "adder": 4}


def _measure_all(n: int, body: list[Instruction]) -> Circuit:
    return Circuit(n, n, tuple(body) + tuple(Measure(q, q) for q in range(n)))


def ghz(n: int) -> Circuit:
    body = [Apply(H, (0,))] + [cx(q, q + 1) for q in range(n - 1)]
    return _measure_all(n, body)


def wstate(n: int) -> Circuit:
    body: list[Instruction] = [Apply(X, (n - 1,))]
    for m in range(1, n):
        i, j = n - m, n - m - 1
        theta = math.acos(math.sqrt(1 / (n - m + 1)))
        body += [Apply(ry(-theta), (j,)), cz(i, j), Apply(ry(theta), (j,))]
    body += [cx(k - 1, k) for k in reversed(range(1, n))]
    return _measure_all(n, body)


def _bits(secret: str | int | None, width: int, rng: random.Random, nonzero: bool) -> list[int]:
    if secret is None:
        lo = 1 if nonzero else 0
        secret = rng.randrange(lo, 2 ** width)
    if isinstance(secret, str):
        if len(secret) != width or set(secret) - {"0", "1"}:
            raise ValueError(f"secret must be a {width}-bit string")
        return [int(ch) for ch in secret]
    if not 0 <= secret < 2 ** width:
        raise ValueError(f"secret out of range for {width} bits")
    return [(secret >> i) & 1 for i in range(width)]


def bv(n: int, secret: str | int | None = None, seed: int = 0) -> Circuit:
    """Bernstein-Vazirani; qubits 0..n-2 hold the data, n-1 is the ancilla.

    A string secret lists the bit of data qubit 0 first.
    """
    bits = _bits(secret, n - 1, random.Random(seed), nonzero=True)
    anc = n - 1
    body: list[Instruction] = [Apply(X, (anc,))] + [Apply(H, (q,)) for q in range(n)]
    body += [cx(q, anc) for q in range(n - 1) if bits[q]]
    body += [Apply(H, (q,)) for q in range(n - 1)]
    return _measure_all(n, body)


def dj(n: int, mask: str | int | None = None, seed: int = 0) -> Circuit:
    """Deutsch-Jozsa with the balanced oracle f(x) = parity(x xor mask)."""
    bits = _bits(mask, n - 1, random.Random(seed), nonzero=False)
    anc = n - 1
    body: list[Instruction] = [Apply(X, (anc,))] + [Apply(H, (q,)) for q in range(n)]
    flips = [Apply(X, (q,)) for q in range(n - 1) if bits[q]]
    body += flips + [cx(q, anc) for q in range(n - 1)] + flips
    body += [Apply(H, (q,)) for q in range(n - 1)]
    return _measure_all(n, body)


def qft_gates(qubits: list[int]) -> list[Apply]:
    """QFT on a little-endian register: |x> -> sum_y e^{2 pi i x y / 2^t} |y>."""
    t = len(qubits)
    body: list[Apply] = []
    for a in reversed(range(t)):
        body.append(Apply(H, (qubits[a],)))
        for b in reversed(range(a)):
            body.append(Apply(phase(math.pi / 2 ** (a - b)), (qubits[a],), ((qubits[b], 1),)))
    for i in range(t // 2):
        body.append(Apply(SWAP, (qubits[i], qubits[t - 1 - i])))
    return body


def inverse_qft_gates(qubits: list[int]) -> list[Apply]:
    return [g.with_(gate=g.gate.inverse()) for g in reversed(qft_gates(qubits))]


def qft(n: int) -> Circuit:
    return _measure_all(n, qft_gates(list(range(n))))


def qpe(n: int, k: int | None = None, seed: int = 0) -> Circuit:
    """Phase estimation of phase k / 2^(n-1) with n-1 counting qubits; qubit n-1 holds |1>."""
    t = n - 1
    if k is None:
        k = random.Random(seed).randrange(1, 2 ** t)
    if not 0 <= k < 2 ** t:
        raise ValueError(f"phase numerator out of range for {t} counting qubits")
    target = n - 1
    body: list[Instruction] = [Apply(X, (target,))] + [Apply(H, (q,)) for q in range(t)]
    for j in range(t):
        body.append(Apply(phase(2 * math.pi * k * 2 ** j / 2 ** t), (target,), ((j, 1),)))
    body += inverse_qft_gates(list(range(t)))
    return _measure_all(n, body)


def adder(n: int) -> Circuit:
    """Cuccaro ripple-carry adder on (n-2)/2 bit operands.

    Layout: qubit 0 carry-in, then b_i, a_i interleaved, qubit n-1 carry-out.
    """
    if n % 2:
        raise ValueError("adder size must be even")
    k = (n - 2) // 2
    cin, cout = 0, n - 1
    b = [1 + 2 * i for i in range(k)]
    a = [2 + 2 * i for i in range(k)]
    carry = [cin] + a[:-1]

    def maj(c, y, x):
        return [cx(x, y), cx(x, c), ccx(c, y, x)]

    def uma(c, y, x):
        return [ccx(c, y, x), cx(x, c), cx(c, y)]

    body: list[Instruction] = []
    for i in range(k):
        body += maj(carry[i], b[i], a[i])
    body.append(cx(a[-1], cout))
    for i in reversed(range(k)):
        body += uma(carry[i], b[i], a[i])
    return _measure_all(n, body)


_GENERATORS = {"ghz": ghz, "wstate": wstate, "bv": bv, "dj": dj, "qft": qft, "qpe": qpe, "adder": adder}


def size_ok(family: str, n: int) -> bool:
    return n >= _MIN_SIZE[family] and not (family == "adder" and n % 2)


def generate_benchmark(family: str, n: int, seed: int = 0) -> Circuit:
    if family not in _GENERATORS:
        raise ValueError(f"unknown benchmark family {family!r} (choose from {', '.join(FAMILIES)})")
    if not size_ok(family, n):
        raise ValueError(f"size {n} out of range for {family}")
    if family in ("bv", "dj", "qpe"):
        return _GENERATORS[family](n, seed=seed)
    return _GENERATORS[family](n)
