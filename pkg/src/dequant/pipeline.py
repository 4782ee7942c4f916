"""
Fixed-point pass driver, verification harness and report writers.

The passes in a spec run in the given order, each to its own fixed point, and
the whole list is repeated until one full cycle leaves the circuit unchanged.
"""
from __future__ import annotations

import csv
import json
import time
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .ir import Circuit, Metrics, count_metrics
from .passes import CapExceeded, PassReport
from .passes.constprop import CpConfig, run_cp
from .passes.lifting import lift_hadamards, lift_measurements
from .semantics import ORACLE_LIMIT, OracleLimitExceeded, equivalent

PASS_NAMES = ("cp", "measlift", "hlift")
CSV_COLUMNS = ("family", "size", "pass-spec", "gates_before", "gates_after", "cgates_before",
               "cgates_after", "reduction_gates_pct", "reduction_cgates_pct", "duration_ms", "verified")


@dataclass(frozen=True)
class PipelineSpec:
    passes: tuple[str, ...]
    cp: CpConfig = CpConfig()
    max_cycles: int = 50
    verify: bool = False
    oracle_limit: int = ORACLE_LIMIT

    def __post_init__(self):
        object.__setattr__(self, "passes", tuple(self.passes))
        if not self.passes:
            raise ValueError("pass list is empty")
        bad = [p for p in self.passes if p not in PASS_NAMES]
        if bad:
            raise ValueError(f"unknown pass {bad[0]!r} (choose from {', '.join(PASS_NAMES)})")
        if self.max_cycles < 1 or self.oracle_limit < 1:
            raise ValueError("caps must be at least 1")

    @classmethod
    def parse(cls, text: str, **kw) -> PipelineSpec:
        return cls(tuple(p.strip() for p in text.split(",") if p.strip()), **kw)

    @property
    def label(self) -> str:
        return "+".join(self.passes)

    def as_dict(self) -> dict:
        return {"passes": list(self.passes), "max_amplitudes": self.cp.N, "max_hybrid_states": self.cp.M,
                "max_cycles": self.max_cycles, "verify": self.verify, "oracle_limit": self.oracle_limit}


@dataclass(frozen=True)
class Verdict:
    status: str  # "pass", "fail", "skipped" (over the oracle limit) or "not-run"
    distance: float | None = None
    witness: str | None = None

    def __str__(self):
        if self.status == "fail":
            return f"fail (TV distance {self.distance:.3g}, worst outcome {self.witness})"
        return self.status


def verify(original: Circuit, optimized: Circuit, limit: int = ORACLE_LIMIT) -> Verdict:
    try:
        res = equivalent(original, optimized, limit=limit)
    except OracleLimitExceeded:
        return Verdict("skipped")
    return Verdict("pass" if res.equivalent else "fail", res.distance, res.witness)


class VerificationError(RuntimeError):
    """Optimized circuit disagrees with its input; carries a small failing pair."""

    def __init__(self, verdict: Verdict, original: Circuit, optimized: Circuit):
        super().__init__(f"verification failed: {verdict}")
        self.verdict = verdict
        self.original = original
        self.optimized = optimized


def _runner(name: str, spec: PipelineSpec) -> Callable[[Circuit], tuple[Circuit, PassReport]]:
    if name == "cp":
        return lambda c: run_cp(c, spec.cp)
    if name == "measlift":
        return lift_measurements
    return lift_hadamards


def _merge_reports(reports: Sequence[PassReport]) -> list[PassReport]:
    merged: dict[str, PassReport] = {}
    for r in reports:
        m = merged.get(r.name)
        if m is None:
            merged[r.name] = PassReport(r.name, r.iterations, Counter(r.counts), r.before, r.after, r.elapsed_ms)
        else:
            m.iterations += r.iterations
            m.counts.update(r.counts)
            m.after = r.after
            m.elapsed_ms += r.elapsed_ms
    return list(merged.values())


def optimize(circuit: Circuit, spec: PipelineSpec) -> tuple[Circuit, list[PassReport], int]:
    """Cycle the pass list to a fixed point; returns (output, per-pass reports, cycles)."""
    runners = [_runner(p, spec) for p in spec.passes]
    reports: list[PassReport] = []
    cur = circuit
    for cycle in range(1, spec.max_cycles + 1):
        start = cur
        for run in runners:
            try:
                cur, rep = run(cur)
            except CapExceeded as exc:
                if exc.report is not None:
                    reports.append(exc.report)
                raise CapExceeded(str(exc), exc.report, exc.circuit) from None
            reports.append(rep)
        # a lone pass already sits at its own fixed point
        if cur == start or len(runners) == 1:
            return cur, _merge_reports(reports), cycle
    raise CapExceeded(f"pipeline {spec.label}: no fixed point after {spec.max_cycles} cycles", None, cur)


def _pct(before: int, after: int) -> float:
    if before <= 0:
        return 0.0
    return min(100.0, max(0.0, 100.0 * (before - after) / before))


@dataclass
class RunRecord:
    input_id: str
    family: str
    size: int
    pass_spec: str
    pass_reports: list[PassReport]
    metrics_before: Metrics
    metrics_after: Metrics
    reduction_gates_pct: float
    reduction_cgates_pct: float
    verified: str
    duration_ms: float
    cycles: int = 1
    output: Circuit | None = field(default=None, repr=False, compare=False)

    def as_dict(self) -> dict:
        return {
            "input_id": self.input_id,
            "family": self.family,
            "size": self.size,
            "pass_spec": self.pass_spec,
            "pass_reports": [r.as_dict() for r in self.pass_reports],
            "metrics_before": self.metrics_before.as_dict(),
            "metrics_after": self.metrics_after.as_dict(),
            "reduction_gates_pct": self.reduction_gates_pct,
            "reduction_cgates_pct": self.reduction_cgates_pct,
            "verified": self.verified,
            "duration_ms": self.duration_ms,
            "cycles": self.cycles,
        }

    @classmethod
    def from_dict(cls, d: dict) -> RunRecord:
        return cls(d["input_id"], d["family"], d["size"], d["pass_spec"],
                   [PassReport.from_dict(r) for r in d["pass_reports"]],
                   Metrics(**d["metrics_before"]), Metrics(**d["metrics_after"]),
                   d["reduction_gates_pct"], d["reduction_cgates_pct"], d["verified"],
                   d["duration_ms"], d.get("cycles", 1))

    def csv_row(self) -> dict:
        b, a = self.metrics_before, self.metrics_after
        return {"family": self.family, "size": self.size, "pass-spec": self.pass_spec,
                "gates_before": b.gates, "gates_after": a.gates,
                "cgates_before": b.qcontrolled_gates, "cgates_after": a.qcontrolled_gates,
                "reduction_gates_pct": f"{self.reduction_gates_pct:.2f}",
                "reduction_cgates_pct": f"{self.reduction_cgates_pct:.2f}",
                "duration_ms": f"{self.duration_ms:.3f}", "verified": self.verified}


def _shrink(circuit: Circuit, spec: PipelineSpec) -> tuple[Verdict, Circuit, Circuit] | None:
    """Shortest failing input prefix with its optimized form."""
    for k in range(1, len(circuit.body) + 1):
        prefix = circuit.with_body(circuit.body[:k])
        out, _, _ = optimize(prefix, spec)
        v = verify(prefix, out, spec.oracle_limit)
        if v.status == "fail":
            return v, prefix, out
    return None


def run_pipeline(circuit: Circuit, spec: PipelineSpec, input_id: str = "",
                 family: str = "", size: int | None = None) -> RunRecord:
    t0 = time.perf_counter()
    out, reports, cycles = optimize(circuit, spec)
    duration = (time.perf_counter() - t0) * 1e3
    before, after = count_metrics(circuit), count_metrics(out)
    verdict = Verdict("not-run")
    if spec.verify:
        verdict = verify(circuit, out, spec.oracle_limit)
        if verdict.status == "fail":
            small = _shrink(circuit, spec)
            if small is not None:
                raise VerificationError(*small)
            raise VerificationError(verdict, circuit, out)
    return RunRecord(
        input_id=input_id, family=family, size=circuit.n if size is None else size,
        pass_spec=spec.label, pass_reports=reports,
        metrics_before=before, metrics_after=after,
        reduction_gates_pct=_pct(before.gates, after.gates),
        reduction_cgates_pct=_pct(before.qcontrolled_gates, after.qcontrolled_gates),
        verified=verdict.status, duration_ms=duration, cycles=cycles, output=out)


# ---------------------------------------------------------------------------
# Reports

class ReportError(OSError):
    pass


def write_csv(records: Iterable[RunRecord], path: str | Path) -> None:
    try:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
            w.writeheader()
            for r in records:
                w.writerow(r.csv_row())
    except OSError as exc:
        raise ReportError(f"{path}: {exc.strerror or exc}") from exc


def to_json(records: Iterable[RunRecord], input_name: str, spec: PipelineSpec | dict) -> dict:
    spec_d = spec.as_dict() if isinstance(spec, PipelineSpec) else spec
    return {"input": input_name, "spec": spec_d, "records": [r.as_dict() for r in records]}


def write_json(records: Iterable[RunRecord], path: str | Path, input_name: str,
               spec: PipelineSpec | dict) -> None:
    try:
        Path(path).write_text(json.dumps(to_json(records, input_name, spec), indent=2) + "\n")
    except OSError as exc:
        raise ReportError(f"{path}: {exc.strerror or exc}") from exc


def read_json(path: str | Path) -> tuple[str, dict, list[RunRecord]]:
    d = json.loads(Path(path).read_text())
    return d["input"], d["spec"], [RunRecord.from_dict(r) for r in d["records"]]
