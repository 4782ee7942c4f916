"""Circuit-to-circuit optimization passes."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from ..ir import Circuit, Metrics, count_metrics

MAX_SWEEPS = 10_000


class CapExceeded(RuntimeError):
    """A fixed-point loop hit its iteration cap; carries the partial report."""

    def __init__(self, message: str, report: PassReport | None = None, circuit: Circuit | None = None):
        super().__init__(message)
        self.report = report
        self.circuit = circuit


@dataclass
class PassReport:
    name: str
    iterations: int = 0
    counts: Counter = field(default_factory=Counter)
    before: Metrics = field(default_factory=Metrics)
    after: Metrics = field(default_factory=Metrics)
    elapsed_ms: float = 0.0

    @property
    def applications(self) -> int:
        return sum(self.counts.values())

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "iterations": self.iterations,
            "counts": dict(sorted(self.counts.items())),
            "before": self.before.as_dict(),
            "after": self.after.as_dict(),
            "elapsed_ms": self.elapsed_ms,
        }

    @classmethod
    def from_dict(cls, d: dict) -> PassReport:
        return cls(d["name"], d["iterations"], Counter(d["counts"]),
                   Metrics(**d["before"]), Metrics(**d["after"]), d["elapsed_ms"])


def start_report(name: str, circuit: Circuit) -> PassReport:
    return PassReport(name, before=count_metrics(circuit))
