"""Command-line entry point: `dequant optimize | bench | explain`."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import qasm
from .benchmarks import FAMILIES, generate_benchmark, size_ok
from .passes import CapExceeded
from .passes.constprop import CpConfig, explain
from .pipeline import (
    PipelineSpec,
    ReportError,
    VerificationError,
    run_pipeline,
    write_csv,
    write_json,
)
from .semantics import ORACLE_LIMIT
from .union_table import DEFAULT_M, DEFAULT_N

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_VERIFY, EXIT_CAP = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_cp_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-amplitudes", type=int, default=DEFAULT_N, metavar="N",
                   help="amplitudes per hybrid state before a group becomes ⊤ (default %(default)s)")
    p.add_argument("--max-hybrid-states", type=int, default=DEFAULT_M, metavar="M",
                   help="hybrid states per group before it becomes ⊤ (default %(default)s)")


def _add_pipeline_flags(p: argparse.ArgumentParser, passes_default: str | None) -> None:
    p.add_argument("--passes", default=passes_default, action="append" if passes_default is None else "store",
                   help="comma-separated list from cp, measlift, hlift")
    _add_cp_flags(p)
    p.add_argument("--max-cycles", type=int, default=50, help="cap on alternation cycles (default 50)")
    p.add_argument("--verify", action="store_true", help="check every output against its input")
    p.add_argument("--oracle-limit", type=int, default=ORACLE_LIMIT,
                   help="largest qubit count the verifier simulates (default %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="dequant", description="Replace quantum controls by classical ones in hybrid circuits.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    opt = sub.add_parser("optimize", help="optimize one OpenQASM 3 file")
    opt.add_argument("input", help="input .qasm file ('-' for stdin)")
    opt.add_argument("-o", "--output", help="output .qasm file (default: stdout)")
    _add_pipeline_flags(opt, "cp,measlift")
    opt.add_argument("--stats", metavar="JSON", help="write the run record as JSON")

    bench = sub.add_parser("bench", help="run generated benchmark families")
    bench.add_argument("--families", default=",".join(FAMILIES), help="comma-separated family names")
    bench.add_argument("--sizes", default="2..10", help="range a..b or comma-separated list")
    bench.add_argument("--seed", type=int, default=0, help="seed for bv/dj/qpe oracles")
    _add_pipeline_flags(bench, None)
    bench.add_argument("--report", metavar="FILE", help="write records as CSV (or JSON for .json)")

    ex = sub.add_parser("explain", help="show which constant-propagation rule fires where")
    ex.add_argument("input", help="input .qasm file ('-' for stdin)")
    _add_cp_flags(ex)
    return ap


def _sizes(text: str) -> list[int]:
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"bad --sizes {text!r}") from None


def _cp_config(args) -> CpConfig:
    try:
        return CpConfig(N=args.max_amplitudes, M=args.max_hybrid_states)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _spec(text: str, args) -> PipelineSpec:
    try:
        return PipelineSpec.parse(text, cp=_cp_config(args), max_cycles=args.max_cycles,
                                  verify=args.verify, oracle_limit=args.oracle_limit)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _read(path: str) -> str:
    try:
        return sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror or exc}") from None


def _parse(path: str):
    circuit, notes = qasm.parse_with_diagnostics(_read(path))
    for msg in notes:
        print(f"warning: {path}:{msg}", file=sys.stderr)
    return circuit


def _report_failure(exc: VerificationError) -> None:
    print(f"error: {exc}", file=sys.stderr)
    print("minimal failing input:", file=sys.stderr)
    print(qasm.dumps(exc.original), file=sys.stderr)
    print("its optimized form:", file=sys.stderr)
    print(qasm.dumps(exc.optimized), file=sys.stderr)


def cmd_optimize(args) -> int:
    spec = _spec(args.passes, args)
    circuit = _parse(args.input)
    rec = run_pipeline(circuit, spec, input_id=args.input)
    text = qasm.dumps(rec.output)
    if args.output:
        try:
            Path(args.output).write_text(text)
        except OSError as exc:
            raise ReportError(f"{args.output}: {exc.strerror or exc}") from exc
    else:
        sys.stdout.write(text)
    if args.stats:
        write_json([rec], args.stats, args.input, spec)
    b, a = rec.metrics_before, rec.metrics_after
    print(f"{spec.label}: gates {b.gates} -> {a.gates}, controlled {b.qcontrolled_gates} -> "
          f"{a.qcontrolled_gates}, verified: {rec.verified}", file=sys.stderr)
    return EXIT_OK


def cmd_bench(args) -> int:
    families = [f.strip() for f in args.families.split(",") if f.strip()]
    unknown = [f for f in families if f not in FAMILIES]
    if unknown:
        raise UsageError(f"unknown family {unknown[0]!r} (choose from {', '.join(FAMILIES)})")
    specs = [_spec(text, args) for text in (args.passes or ["cp", "measlift", "cp,measlift"])]
    records = []
    print(f"{'family':<8} {'size':>4} {'passes':<18} {'gates':>11} {'cgates':>11} {'gates%':>7} {'cgates%':>7} verified")
    for fam in families:
        for n in _sizes(args.sizes):
            if not size_ok(fam, n):
                continue
            circuit = generate_benchmark(fam, n, seed=args.seed)
            for spec in specs:
                rec = run_pipeline(circuit, spec, input_id=f"{fam}-{n}", family=fam, size=n)
                records.append(rec)
                b, a = rec.metrics_before, rec.metrics_after
                print(f"{fam:<8} {n:>4} {spec.label:<18} {f'{b.gates}->{a.gates}':>11} "
                      f"{f'{b.qcontrolled_gates}->{a.qcontrolled_gates}':>11} "
                      f"{rec.reduction_gates_pct:>7.2f} {rec.reduction_cgates_pct:>7.2f} {rec.verified}")
    if args.report:
        if args.report.endswith(".json"):
            spec_d = {"families": families, "sizes": args.sizes, "pass_specs": [s.label for s in specs],
                      **{k: v for k, v in specs[0].as_dict().items() if k != "passes"}}
            write_json(records, args.report, "bench", spec_d)
        else:
            write_csv(records, args.report)
    return EXIT_OK


def cmd_explain(args) -> int:
    circuit = _parse(args.input)
    print(explain(circuit, _cp_config(args)))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"optimize": cmd_optimize, "bench": cmd_bench, "explain": cmd_explain}[args.command]
    try:
        return handler(args)
    except UsageError as exc:
        print(f"dequant: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except qasm.QasmError as exc:
        print(f"{getattr(args, 'input', '')}:{exc}", file=sys.stderr)
        return EXIT_PARSE
    except VerificationError as exc:
        _report_failure(exc)
        return EXIT_VERIFY
    except CapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except ReportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
