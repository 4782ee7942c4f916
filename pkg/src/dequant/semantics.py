"""
Reference interpreter for hybrid circuits.

A machine state is a finite probability distribution over hybrid states
(quantum state, register bits). Quantum states are sparse maps from basis
index to amplitude, where bit k of the basis index is the value of qubit k.
Measurements split hybrid states forward; successors that are equal up to a
global phase are merged by summing their probabilities.

This module is the equivalence oracle for every rewrite in the package and
also serves as the local engine of the abstract interpreter.
"""
from __future__ import annotations

import cmath
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

from .ir import Apply, Circuit, Gate, Instruction, Measure, Reset, matrix_entries

AMP_EPS = 1e-12
PROB_EPS = 1e-12
EQ_TOL = 1e-9
ORACLE_LIMIT = 12


class ZeroProbabilityBranch(ValueError):
    pass


class DegenerateSet(ValueError):
    pass


class OracleLimitExceeded(ValueError):
    pass


def bitstring(k: int, width: int) -> str:
    """Basis index -> string with qubit 0 leftmost."""
    return "".join("1" if (k >> i) & 1 else "0" for i in range(width))


def parse_bitstring(s: str) -> int:
    return sum(1 << i for i, ch in enumerate(s) if ch == "1")


# ---------------------------------------------------------------------------
# States

@dataclass(frozen=True, eq=False)
class QuantumState:
    n: int
    amps: Mapping[int, complex]

    @classmethod
    def basis(cls, n: int, k: int | str = 0) -> QuantumState:
        if isinstance(k, str):
            k = parse_bitstring(k)
        return cls(n, {k: 1.0 + 0j})

    @classmethod
    def from_dict(cls, n: int, amps: Mapping[str | int, complex]) -> QuantumState:
        return cls(n, {(parse_bitstring(k) if isinstance(k, str) else k): complex(v) for k, v in amps.items()})

    def __getitem__(self, k: int | str) -> complex:
        if isinstance(k, str):
            k = parse_bitstring(k)
        return self.amps.get(k, 0j)

    def __len__(self):
        return len(self.amps)

    @property
    def norm(self) -> float:
        return math.sqrt(sum(abs(a) ** 2 for a in self.amps.values()))

    def value_of(self, i: int) -> int | None:
        """The bit qubit i holds in every supported basis state, if there is one."""
        bits = {(k >> i) & 1 for k in self.amps}
        return bits.pop() if len(bits) == 1 else None

    def reference(self) -> int:
        """Support element with the lexicographically smallest bit string."""
        return min(self.amps, key=lambda k: bitstring(k, self.n))

    def close_to(self, other: QuantumState, tol: float = EQ_TOL) -> bool:
        """Entrywise equality within tol after aligning global phase."""
        if self.amps.keys() != other.amps.keys():
            return False
        if not self.amps:
            return True
        ref = self.reference()
        a, b = self.amps[ref], other.amps[ref]
        rot = (b / abs(b)) / (a / abs(a))
        return all(abs(v * rot - other.amps[k]) <= tol for k, v in self.amps.items())

    def __repr__(self):
        terms = ", ".join(f"|{bitstring(k, self.n)}⟩:{v:.6g}" for k, v in sorted(self.amps.items()))
        return f"QuantumState({terms})"


@dataclass(frozen=True, eq=False)
class HybridState:
    psi: QuantumState
    beta: tuple[int, ...]

    def close_to(self, other: HybridState, tol: float = EQ_TOL) -> bool:
        return self.beta == other.beta and self.psi.close_to(other.psi, tol)


class MachineState:
    """Finite-support distribution over hybrid states (no two entries equal)."""

    __slots__ = ("n", "m", "entries")

    def __init__(self, n: int, m: int, entries: Iterable[tuple[HybridState, float]] = ()):
        self.n = n
        self.m = m
        self.entries: tuple[tuple[HybridState, float], ...] = _merge(entries)

    def __iter__(self) -> Iterator[tuple[HybridState, float]]:
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    @property
    def total_probability(self) -> float:
        return sum(p for _, p in self.entries)

    def register_distribution(self) -> dict[str, float]:
        out: dict[str, float] = defaultdict(float)
        for hs, p in self.entries:
            out["".join(map(str, hs.beta))] += p
        return dict(out)

    def close_to(self, other: MachineState, tol: float = EQ_TOL) -> bool:
        if (self.n, self.m) != (other.n, other.m) or len(self) != len(other):
            return False
        unmatched = list(other.entries)
        for hs, p in self.entries:
            for idx, (hs2, p2) in enumerate(unmatched):
                if hs.close_to(hs2, tol):
                    if abs(p - p2) > tol:
                        return False
                    del unmatched[idx]
                    break
            else:
                return False
        return True

    def __repr__(self):
        rows = "; ".join(f"{hs.psi!r} β={''.join(map(str, hs.beta))} p={p:.6g}" for hs, p in self.entries)
        return f"MachineState({rows})"


def _canon_key(hs: HybridState):
    return hs.beta, frozenset(hs.psi.amps)


def _merge(entries: Iterable[tuple[HybridState, float]]) -> tuple[tuple[HybridState, float], ...]:
    buckets: dict = {}
    order: list[list] = []
    for hs, p in entries:
        if p <= PROB_EPS:
            continue
        bucket = buckets.setdefault(_canon_key(hs), [])
        for slot in bucket:
            if slot[0].psi.close_to(hs.psi):
                slot[1] += p
                break
        else:
            slot = [hs, p]
            bucket.append(slot)
            order.append(slot)
    return tuple((hs, p) for hs, p in order)


# ---------------------------------------------------------------------------
# Amplitude-level kernels (plain dicts, local bit positions)

def _prune(amps: Mapping[int, complex]) -> dict[int, complex]:
    return {k: v for k, v in amps.items() if abs(v) >= AMP_EPS}


def apply_amplitudes(amps: Mapping[int, complex], gate: Gate, targets: Sequence[int],
                     controls: Sequence[tuple[int, int]] = ()) -> dict[int, complex]:
    """Apply a (quantum-)controlled gate to a sparse amplitude map."""
    rows = matrix_entries(gate)
    dim = len(rows)
    tmask = 0
    for t in targets:
        tmask |= 1 << t
    out: dict[int, complex] = defaultdict(complex)
    for k, a in amps.items():
        if any(((k >> q) & 1) != pol for q, pol in controls):
            out[k] += a
            continue
        col = 0
        for idx, t in enumerate(targets):
            col |= ((k >> t) & 1) << idx
        base = k & ~tmask
        for row in range(dim):
            u = rows[row][col]
            if u == 0:
                continue
            dest = base
            for idx, t in enumerate(targets):
                if (row >> idx) & 1:
                    dest |= 1 << t
            out[dest] += u * a
    return _prune(out)


def _collapse_amps(amps: Mapping[int, complex], i: int, b: int) -> tuple[dict[int, complex], float]:
    kept = {k: v for k, v in amps.items() if ((k >> i) & 1) == b}
    prob = sum(abs(v) ** 2 for v in kept.values())
    if prob < PROB_EPS:
        return {}, 0.0
    scale = 1 / math.sqrt(prob)
    return _prune({k: v * scale for k, v in kept.items()}), prob


def _set_amps(amps: Mapping[int, complex], i: int, b: int) -> dict[int, complex]:
    bit = 1 << i
    folded: dict[int, complex] = defaultdict(complex)
    for k, v in amps.items():
        folded[(k | bit) if b else (k & ~bit)] += v
    folded = _prune(folded)
    norm = math.sqrt(sum(abs(v) ** 2 for v in folded.values()))
    if norm < AMP_EPS:
        raise DegenerateSet(f"setting qubit {i} to {b} cancels every amplitude")
    return _prune({k: v / norm for k, v in folded.items()})


# ---------------------------------------------------------------------------
# Operations on states

def initial_state(n: int, m: int) -> MachineState:
    return MachineState(n, m, [(HybridState(QuantumState.basis(n, 0), (0,) * m), 1.0)])


def guards_hold(beta: Sequence[int], guards: Sequence[tuple[int, int]]) -> bool:
    return all(beta[r] == pol for r, pol in guards)


def apply_unitary(rho: MachineState, gate: Gate, targets: Sequence[int],
                  qcontrols: Sequence[tuple[int, int]] = (),
                  guards: Sequence[tuple[int, int]] = ()) -> MachineState:
    out = []
    for hs, p in rho:
        if guards_hold(hs.beta, guards):
            psi = QuantumState(rho.n, apply_amplitudes(hs.psi.amps, gate, targets, qcontrols))
            hs = HybridState(psi, hs.beta)
        out.append((hs, p))
    return MachineState(rho.n, rho.m, out)


def apply_gate(rho: MachineState, instr: Apply) -> MachineState:
    return apply_unitary(rho, instr.gate, instr.targets, instr.qcontrols, instr.guards)


def collapse(psi: QuantumState, i: int, b: int) -> tuple[QuantumState, float]:
    """Post-measurement state and probability for outcome b on qubit i."""
    amps, prob = _collapse_amps(psi.amps, i, b)
    if prob < PROB_EPS:
        raise ZeroProbabilityBranch(f"qubit {i} has zero probability of reading {b}")
    return QuantumState(psi.n, amps), prob


def set_qubit(psi: QuantumState, i: int, b: int) -> QuantumState:
    return QuantumState(psi.n, _set_amps(psi.amps, i, b))


def measure(rho: MachineState, i: int, j: int, negated: bool = False) -> MachineState:
    out = []
    for hs, p in rho:
        for b in (0, 1):
            amps, prob = _collapse_amps(hs.psi.amps, i, b)
            if prob < PROB_EPS:
                continue
            beta = list(hs.beta)
            beta[j] = b ^ int(negated)
            out.append((HybridState(QuantumState(rho.n, amps), tuple(beta)), p * prob))
    return MachineState(rho.n, rho.m, out)


def reset(rho: MachineState, i: int) -> MachineState:
    out = []
    for hs, p in rho:
        for b in (0, 1):
            amps, prob = _collapse_amps(hs.psi.amps, i, b)
            if prob < PROB_EPS:
                continue
            if b:
                amps = _set_amps(amps, i, 0)
            out.append((HybridState(QuantumState(rho.n, amps), hs.beta), p * prob))
    return MachineState(rho.n, rho.m, out)


def step(rho: MachineState, instr: Instruction) -> MachineState:
    if isinstance(instr, Apply):
        return apply_gate(rho, instr)
    if isinstance(instr, Measure):
        return measure(rho, instr.qubit, instr.register, instr.negated)
    if isinstance(instr, Reset):
        return reset(rho, instr.qubit)
    raise TypeError(f"not an instruction: {instr!r}")


def run(circuit: Circuit, limit: int | None = None) -> MachineState:
    if limit is not None and circuit.n > limit:
        raise OracleLimitExceeded(f"{circuit.n} qubits exceeds oracle limit {limit}")
    rho = initial_state(circuit.n, circuit.m)
    for instr in circuit.body:
        rho = step(rho, instr)
    if circuit.global_phase:
        factor = cmath.exp(1j * circuit.global_phase)
        rho = MachineState(rho.n, rho.m, [
            (HybridState(QuantumState(rho.n, {k: v * factor for k, v in hs.psi.amps.items()}), hs.beta), p)
            for hs, p in rho])
    return rho


def outcome_distribution(circuit: Circuit, limit: int = ORACLE_LIMIT) -> dict[str, float]:
    """Marginal distribution of the final register bits (register 0 leftmost)."""
    return run(circuit, limit).register_distribution()


# ---------------------------------------------------------------------------
# Equivalence

@dataclass(frozen=True)
class Equivalence:
    equivalent: bool
    distance: float
    witness: str | None
    observed_qubits: tuple[int, ...] = ()

    def __bool__(self):
        return self.equivalent


def _measured_qubits(c: Circuit) -> set[int]:
    return {ins.qubit for ins in c.body if isinstance(ins, Measure)}


def _with_readout(c: Circuit, qubits: Sequence[int]) -> Circuit:
    extra = tuple(Measure(q, c.m + k) for k, q in enumerate(qubits))
    return Circuit(c.n, c.m + len(qubits), c.body + extra, c.global_phase)


def tv_distance(pa: Mapping[str, float], pb: Mapping[str, float]) -> tuple[float, str | None]:
    keys = set(pa) | set(pb)
    if not keys:
        return 0.0, None
    diffs = {k: abs(pa.get(k, 0.0) - pb.get(k, 0.0)) for k in keys}
    worst = max(sorted(diffs), key=diffs.get)
    return 0.5 * sum(diffs.values()), worst


def equivalent(a: Circuit, b: Circuit, tol: float = EQ_TOL, limit: int = ORACLE_LIMIT) -> Equivalence:
    """Compare final register distributions, then again with read-out appended.

    The read-out measures every qubit that is never measured in one of the
    circuits, into fresh registers, which makes differences in the final
    quantum state of those qubits observable in the computational basis.
    Qubits measured in both circuits deliver their result through registers;
    their residual post-measurement state is not compared.
    """
    if (a.n, a.m) != (b.n, b.m):
        raise ValueError(f"shape mismatch: ({a.n}, {a.m}) vs ({b.n}, {b.m})")
    for c in (a, b):
        if c.n > limit:
            raise OracleLimitExceeded(f"{c.n} qubits exceeds oracle limit {limit}")
    d, w = tv_distance(outcome_distribution(a, limit), outcome_distribution(b, limit))
    if d > tol:
        return Equivalence(False, d, w)
    both = _measured_qubits(a) & _measured_qubits(b)
    observed = tuple(q for q in range(a.n) if q not in both)
    if not observed:
        return Equivalence(True, d, w)
    d2, w2 = tv_distance(outcome_distribution(_with_readout(a, observed), limit),
                         outcome_distribution(_with_readout(b, observed), limit))
    return Equivalence(d2 <= tol, max(d, d2), w2, observed)
