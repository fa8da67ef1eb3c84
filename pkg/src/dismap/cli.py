"""``dismap`` command line: load config, get a circuit, optimize, verify, report."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

from .benchmarks import FAMILIES, generate_benchmark
from .circuit import Circuit, CircuitError, GateKind, lower
from .cutter import InsufficientQubitsError
from .hardware import BUNDLED_DIR, ConfigError, SystemConfig, load_system_config
from .optimizer import InfeasibleError, OptimizerOptions, Plan, baseline_plan, optimize
from .qasm import QasmError, emit_qasm, gate_line, parse_qasm
from .router import RouterOptions, RoutingError
from .verifier import check_constraints, equivalence_oracle, estimate_fidelity

log = logging.getLogger("dismap")

SCHEMA = 1
EXIT_OK, EXIT_CONFIG, EXIT_PARSE, EXIT_INFEASIBLE, EXIT_VERIFY = 0, 1, 2, 3, 4
VERIFY_MAX_QUBITS = 12


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="dismap",
        description="Partition a circuit over EPR-linked quantum workers and route it.")
    p.add_argument("--config", required=True,
                   help="hardware config JSON, or a bundled name (2x7, 3workers, 4x20)")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--circuit", help="OpenQASM 2.0 file")
    src.add_argument("--bench", choices=FAMILIES, help="generate a benchmark circuit")
    p.add_argument("--qubits", type=int, help="benchmark size (with --bench)")
    p.add_argument("--seed", type=int, default=None,
                   help="RNG seed (default: $DISMAP_SEED or 0)")
    p.add_argument("--sr", type=float, help="override the EPR success rate of every link")
    p.add_argument("--max-links", type=int, choices=(1, 2), help="override max links")
    p.add_argument("--k", type=int, help="override candidate qubits per worker")
    p.add_argument("--w-epr", type=float, default=RouterOptions.w_epr,
                   help="routing distance weight of EPR edges")
    p.add_argument("--alpha", type=float, default=OptimizerOptions.alpha, help="cut weight factor")
    p.add_argument("--beta", type=float, default=OptimizerOptions.beta, help="noise factor")
    p.add_argument("--extended-size", type=int, default=RouterOptions.extended_size)
    p.add_argument("--extended-weight", type=float, default=RouterOptions.extended_weight)
    p.add_argument("--decay", type=float, default=RouterOptions.decay_delta)
    p.add_argument("--decay-reset", type=int, default=RouterOptions.decay_reset)
    p.add_argument("--select", choices=("swaps", "fidelity"), default="swaps")
    p.add_argument("--restarts", type=int, default=1, help="routing seeds tried per candidate")
    p.add_argument("--baseline", action="store_true",
                   help="fixed first candidate, first-fit cut, identity layout")
    p.add_argument("--emit-partition", metavar="PATH", help="write the partition as JSON")
    p.add_argument("--report", metavar="PATH", help="write the JSON report (text report next to it)")
    p.add_argument("--qasm-dir", metavar="DIR",
                   help="directory for routed QASM files (default: next to --report)")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--verify", action="store_true",
                   help=f"run the statevector oracle (circuits up to {VERIFY_MAX_QUBITS} qubits)")
    p.add_argument("--no-timing", action="store_true", help="omit wall-clock timings from reports")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("DISMAP_SEED")
    return int(env) if env else 0


def _config_path(name: str) -> Path:
    """A real file wins; otherwise ``3workers`` or ``3workers.json`` names a bundled config."""
    path = Path(name)
    if path.exists():
        return path
    bundled = BUNDLED_DIR / f"{path.stem}.json"
    return bundled if path.parent == Path(".") and bundled.exists() else path


def _config(args) -> SystemConfig:
    config = load_system_config(_config_path(args.config))
    changes = {}
    if args.sr is not None:
        changes.update(default_sr=args.sr, link_sr={})
    if args.max_links is not None:
        changes["max_links"] = args.max_links
    if args.k is not None:
        changes["candidates_per_worker"] = args.k
    return config.replace(**changes) if changes else config


def _circuit(args, seed: int) -> Circuit:
    if args.circuit:
        path = Path(args.circuit)
        try:
            text = path.read_text()
        except OSError as exc:
            raise QasmError(f"cannot read {path}: {exc}") from None
        return parse_qasm(text, name=path.stem)
    if args.qubits is None:
        raise QasmError("--bench needs --qubits")
    try:
        return generate_benchmark(args.bench, args.qubits, seed)
    except ValueError as exc:
        raise QasmError(str(exc)) from None


def _options(args) -> OptimizerOptions:
    router = RouterOptions(w_epr=args.w_epr, extended_size=args.extended_size,
                           extended_weight=args.extended_weight, decay_delta=args.decay,
                           decay_reset=args.decay_reset)
    return OptimizerOptions(alpha=args.alpha, beta=args.beta, router=router, select=args.select,
                            restarts=args.restarts, threads=max(1, args.threads))


def build_report(plan: Plan, original: Circuit, config: SystemConfig, violations, equivalent,
                 timing: dict | None) -> dict:
    est = estimate_fidelity(plan, config)
    routing = plan.routing
    workers = []
    for m in routing.mapped:
        owned = plan.partition.owned(m.worker_id)
        workers.append({
            "worker_id": m.worker_id,
            "logical_qubits": list(owned),
            "swaps": m.swap_count,
            "epr_uses": m.epr_uses,
            "gates": len(m.gates),
            "final_layout": {str(q): p for q, p in sorted(m.final_layout.items())},
        })
    report = {
        "schema": SCHEMA,
        "label": plan.label,
        "input": {
            "name": original.name,
            "qubits": original.n_qubits,
            "gate_counts": original.count_ops(),
            "lowered_gate_counts": plan.circuit.count_ops(),
        },
        "config": {
            "name": config.name,
            "capacities": [w.n_qubits for w in config.workers],
            "default_sr": config.default_sr,
            "max_links": config.max_links,
            "candidates_per_worker": config.candidates_per_worker,
        },
        "chosen": {
            "candidate_index": plan.candidate.candidate_index,
            "links": [{"worker_a": l.worker_a, "qubit_a": l.qubit_a,
                       "worker_b": l.worker_b, "qubit_b": l.qubit_b, "sr": l.sr}
                      for l in plan.candidate.links],
        },
        "partition": plan.partition.to_dict(plan.circuit),
        "workers": workers,
        "totals": {
            "so": plan.so,
            "fidelity": est.f,
            "fidelity_factors": est.factors,
            "epr_uses": routing.epr_uses,
            "routed_gates": len(routing.gates),
        },
        "routing": {
            "seed": routing.seed,
            "initial_layout": list(routing.initial_layout.l2p),
            "final_layout": list(routing.final_layout.l2p),
            "swap_tags": [i for i, g in enumerate(routing.gates) if g.swap],
            "epr_gates": [i for i, g in enumerate(routing.gates) if g.epr],
        },
        "evaluations": [
            {"candidate_index": e.candidate_index, "links": e.links, "so": e.so,
             "fidelity": e.fidelity, "workers_used": list(e.workers_used),
             "cut_weight": e.cut_weight}
            for e in plan.evaluations],
        "violations": [{"kind": v.kind, "detail": v.detail, "gate_index": v.gate_index}
                       for v in violations],
        "equivalent": equivalent,
    }
    if timing is not None:
        report["timing"] = timing
    return report


def text_report(report: dict) -> str:
    t = report["totals"]
    lines = [
        f"{report['label']}: {report['input']['name']} ({report['input']['qubits']} qubits) "
        f"on {report['config']['name']} {report['config']['capacities']}",
        "links: " + (", ".join(f"w{l['worker_a']}:q{l['qubit_a']}-w{l['worker_b']}:q{l['qubit_b']}"
                               f" (SR {l['sr']:g})" for l in report["chosen"]["links"]) or "none"),
    ]
    for w in report["workers"]:
        lines.append(f"  worker {w['worker_id']}: {len(w['logical_qubits'])} qubits, "
                     f"{w['swaps']} SWAPs, {w['epr_uses']} EPR uses")
    lines.append(f"SO = {t['so']}   F = {t['fidelity']:.4g}   EPR uses = {t['epr_uses']}")
    lines.append(f"candidates evaluated: {len(report['evaluations'])}")
    if report["equivalent"] is not None:
        lines.append(f"equivalence oracle: {'pass' if report['equivalent'] else 'FAIL'}")
    if report["violations"]:
        lines.append("violations:")
        lines += [f"  {v['kind']}: {v['detail']}" for v in report["violations"]]
    if "timing" in report:
        lines.append("timing: " + ", ".join(f"{k} {v:.3f}s" for k, v in report["timing"].items()))
    return "\n".join(lines) + "\n"


def _defer_measures(gates) -> list:
    """Move measurements to the end, following later SWAPs that carry the measured state.

    Routing may SWAP through a wire after its qubit was measured; the collapsed state just
    travels, so measuring at its final position is equivalent and keeps the file parseable.
    """
    body, held = [], {}
    for g in gates:
        if g.kind is GateKind.MEASURE:
            held[g.qubits[0]] = g
            continue
        if g.kind is GateKind.SWAP:
            a, b = g.qubits
            ga, gb = held.pop(a, None), held.pop(b, None)
            if ga is not None:
                held[b] = ga
            if gb is not None:
                held[a] = gb
        body.append(g)
    tail = [replace(g, qubits=(p,)) for p, g in sorted(held.items(), key=lambda kv: kv[1].source)]
    return body + tail


def worker_qasm(plan: Plan) -> dict[str, str]:
    """Per-worker QASM over local qubit indices; cross-worker gates appear as comments."""
    vst = plan.vst
    files = {}
    for m in plan.routing.mapped:
        w = m.worker_id
        n = vst.workers[w].n_qubits
        lines = ["OPENQASM 2.0;", 'include "qelib1.inc";', f"qreg q[{n}];", f"creg c[{n}];"]
        for g in _defer_measures(m.gates):
            tags = [vst.node_tags[p] for p in g.qubits]
            if any(t[0] != w for t in tags):
                ends = " ".join(f"w{t[0]}:q{t[1]}" for t in tags)
                lines.append(f"// epr {g.kind.value} {ends}")
                continue
            line = gate_line(g.kind, [t[1] for t in tags], g.params)
            lines.append(line + ("  // routing swap" if g.swap else ""))
        files[f"worker{w}.qasm"] = "\n".join(lines) + "\n"
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";', f"qreg q[{vst.n_nodes}];",
             f"creg c[{vst.n_nodes}];"]
    lines += [gate_line(g.kind, g.qubits, g.params) for g in _defer_measures(plan.routing.gates)]
    files["global.qasm"] = "\n".join(lines) + "\n"
    return files


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    seed = _seed(args)
    timing: dict[str, float] = {}
    t0 = time.perf_counter()
    try:
        config = _config(args)
    except ConfigError as exc:
        print(f"dismap: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    timing["load"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    try:
        original = _circuit(args, seed)
    except (QasmError, CircuitError) as exc:
        print(f"dismap: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    lowered = lower(original)
    timing["parse_lower"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    options = _options(args)
    try:
        if args.baseline:
            plan = baseline_plan(lowered, config, seed, options)
        else:
            plan = optimize(lowered, config, seed, options)
    except (InsufficientQubitsError, InfeasibleError, RoutingError) as exc:
        print(f"dismap: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValueError as exc:
        # candidate enumeration on a single-worker config and similar shape errors
        print(f"dismap: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    timing["optimize"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    violations = check_constraints(plan)
    equivalent = None
    if args.verify:
        if original.n_qubits <= VERIFY_MAX_QUBITS:
            equivalent = equivalence_oracle(original, plan)
        else:
            log.warning("skipping equivalence oracle: %d qubits > %d",
                        original.n_qubits, VERIFY_MAX_QUBITS)
    timing["verify"] = time.perf_counter() - t0
    report = build_report(plan, original, config, violations, equivalent,
                          None if args.no_timing else {k: round(v, 6) for k, v in timing.items()})
    text = text_report(report)
    sys.stdout.write(text)
    if args.report:
        path = Path(args.report)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(report, indent=1, sort_keys=True) + "\n")
        path.with_suffix(".txt").write_text(text)
    qasm_dir = Path(args.qasm_dir) if args.qasm_dir else (
        Path(args.report).parent / f"{Path(args.report).stem}_qasm" if args.report else None)
    if qasm_dir is not None:
        qasm_dir.mkdir(parents=True, exist_ok=True)
        for name, body in worker_qasm(plan).items():
            (qasm_dir / name).write_text(body)
    if args.emit_partition:
        Path(args.emit_partition).write_text(
            json.dumps(plan.partition.to_dict(plan.circuit), indent=1, sort_keys=True) + "\n")
    if violations or equivalent is False:
        return EXIT_VERIFY
    return EXIT_OK


def baseline_run(argv) -> dict:
    """Run the baseline policy and return its report (same router and estimator)."""
    args = build_parser().parse_args(list(argv))
    seed = _seed(args)
    config = _config(args)
    original = _circuit(args, seed)
    plan = baseline_plan(lower(original), config, seed, _options(args))
    return build_report(plan, original, config, check_constraints(plan), None, None)


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
