"""De-quantization of hybrid quantum circuits.

Passes that replace quantum controls with classical register guards:
measurement lifting, Hadamard lifting and quantum-classical constant
propagation over a hybrid union table.
"""
from .ir import Apply, Circuit, Gate, Measure, Metrics, Reset, count_metrics, validate
from .passes.constprop import CpConfig, run_cp
from .passes.lifting import lift_hadamards, lift_measurements
from .pipeline import PipelineSpec, RunRecord, run_pipeline, verify
from .qasm import dumps, parse
from .semantics import equivalent, outcome_distribution, run

__version__ = "0.1.0"

__all__ = [
    "Apply", "Circuit", "Gate", "Measure", "Metrics", "Reset", "count_metrics", "validate",
    "CpConfig", "run_cp", "lift_hadamards", "lift_measurements",
    "PipelineSpec", "RunRecord", "run_pipeline", "verify",
    "dumps", "parse", "equivalent", "outcome_distribution", "run",
]
