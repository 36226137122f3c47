"""Command-line harness: simulate, pathfind, contract, bench, convert,
decompose.

Reports are JSON documents on stdout with timing fields isolated under
"timings" so golden-file comparisons can mask them.  Randomized commands
default to seed 0.  Exit codes: 0 ok, 2 verification failure, 3 infeasible
memory budget.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import time

import numpy as np

from .approx import SvdPolicy, tensor_qr, tensor_svd
from .circuits import Circuit, gen_qaoa_maxcut, gen_qft, gen_qv, to_gates
from .convert import ConversionTarget, circuit_to_network, network_to_einsum
from .core import InvalidArgumentError
from .distsim import SegmentedStateVector
from .fusion import FusionConfig, fuse
from .mps import run_circuit_mps
from .statevec import run_circuit_sv
from .tn import (
    InfeasibleContractionError,
    OptimizerConfig,
    SliceRange,
    Tensor,
    TensorNetwork,
    WorkspaceArena,
    autotune as tn_autotune,
    contract as tn_contract,
    contract_distributed,
    find_path,
    greedy_path,
    make_plan,
    tree_flops,
)

REPORT_SCHEMA_VERSION = 1
EXIT_OK = 0
EXIT_VERIFY = 2
EXIT_INFEASIBLE = 3


def default_workers() -> int:
    return int(os.environ.get("DUETSIM_WORKERS", "1"))


def digest_array(arr: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(arr).tobytes()).hexdigest()


def make_report(command: str, **fields) -> dict:
    report = {"schema_version": REPORT_SCHEMA_VERSION, "command": command}
    report.update(fields)
    report.setdefault("timings", {})
    return report


def emit(report: dict, path: str | None) -> None:
    text = json.dumps(report, indent=2, sort_keys=True)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    print(text)


# ---------------------------------------------------------------------------
# circuit sources


def ring_edges(n: int) -> list[tuple[int, int]]:
    return [(q, (q + 1) % n) for q in range(n)]


def load_circuit(args) -> Circuit:
    if args.circuit_file:
        return Circuit.load(args.circuit_file)
    name = args.circuit
    if name == "qft":
        return gen_qft(args.n)
    if name == "qv":
        return gen_qv(args.n, depth=args.depth, seed=args.seed)
    if name == "qaoa":
        return gen_qaoa_maxcut(ring_edges(args.n), p=args.p, seed=args.seed)
    raise InvalidArgumentError(f"unknown circuit {name!r}")


def parse_target(spec: str, n: int) -> ConversionTarget:
    if spec == "statevector":
        return ConversionTarget("state_vector")
    if spec.startswith("amplitude:"):
        return ConversionTarget("amplitude", bitstring=spec.split(":", 1)[1])
    if spec == "amplitude":
        return ConversionTarget("amplitude", bitstring="0" * n)
    raise InvalidArgumentError(f"unknown target {spec!r}")


def fusion_config(args) -> FusionConfig | None:
    if args.max_fused_gate_size or args.max_fused_diagonal_gate_size:
        return FusionConfig(
            max_fused_gate_size=args.max_fused_gate_size or 4,
            max_fused_diagonal_gate_size=args.max_fused_diagonal_gate_size or 6,
        )
    return None


# ---------------------------------------------------------------------------
# simulate


def sv_oracle_amplitudes(circuit: Circuit) -> np.ndarray:
    return run_circuit_sv(to_gates(circuit), circuit.num_qubits).amplitudes


def cmd_simulate(args) -> int:
    t_start = time.perf_counter()
    circuit = load_circuit(args)
    n = circuit.num_qubits
    counters: dict = {"gates": len(circuit)}
    timings: dict = {}
    if args.dry_run:
        report = make_report(
            "simulate",
            engine=args.engine,
            params={"circuit": args.circuit or args.circuit_file, "n": n, "seed": args.seed},
            counters=counters,
            digest=None,
        )
        report["timings"]["wall_s"] = time.perf_counter() - t_start
        emit(report, args.out)
        return EXIT_OK

    gates = to_gates(circuit)
    cfg = fusion_config(args)
    if cfg is not None:
        t0 = time.perf_counter()
        fused = fuse(gates, cfg)
        timings["fusion_s"] = time.perf_counter() - t0
        counters["fused_gates"] = len(fused)
        gates = fused.gates

    verification = None
    digest = None
    t0 = time.perf_counter()
    if args.engine == "sv":
        sv = run_circuit_sv(gates, n)
        timings["apply_s"] = time.perf_counter() - t0
        amps = sv.logical_amplitudes()
        digest = digest_array(np.round(amps, 12))
        counters["norm"] = float(np.vdot(amps, amps).real)
        result_amps = amps
    elif args.engine == "sv-dist":
        with SegmentedStateVector(n, args.global_bits, args.workers) as ssv:
            ssv.run(gates)
            amps = ssv.to_statevector().amplitudes
            counters["transfer_stats"] = ssv.transfer_stats().as_dict()
        timings["apply_s"] = time.perf_counter() - t0
        digest = digest_array(np.round(amps, 12))
        counters["norm"] = float(np.vdot(amps, amps).real)
        result_amps = amps
    elif args.engine == "mps":
        mps = run_circuit_mps(gates, n, max_bond=args.max_bond)
        timings["apply_s"] = time.perf_counter() - t0
        counters["max_bond_dim"] = max(mps.bond_dims(), default=1)
        if n <= 20:
            result_amps = mps.to_statevector()
            digest = digest_array(np.round(result_amps, 12))
        else:
            result_amps = None
            digest = None
    elif args.engine == "tn":
        target = parse_target(args.target, n)
        tn = circuit_to_network(circuit, target)
        counters["tensors"] = tn.num_tensors
        opt = OptimizerConfig(
            num_hyper_samples=args.samples, seed=args.seed, memory_budget=args.budget
        )
        res = find_path(tn, opt)
        counters["flops"] = res.total_flops
        counters["num_slices"] = res.num_slices
        counters["slicing_overhead"] = res.overhead_factor
        plan = make_plan(tn, res)
        value = tn_contract(plan, WorkspaceArena())
        timings["contract_s"] = time.perf_counter() - t0
        result_amps = value.data.reshape(-1)
        digest = digest_array(np.round(result_amps, 12))
    else:
        raise InvalidArgumentError(f"unknown engine {args.engine!r}")

    if args.verify:
        if n > 14:
            raise InvalidArgumentError("--verify limited to n <= 14")
        t0 = time.perf_counter()
        oracle = sv_oracle_amplitudes(circuit)
        timings["verify_s"] = time.perf_counter() - t0
        if args.engine == "tn":
            target = parse_target(args.target, n)
            if target.kind == "amplitude":
                idx = int(target.bitstring, 2)
                expected = oracle[idx : idx + 1]
            else:
                expected = oracle
        else:
            expected = oracle
        got = result_amps
        if args.engine == "mps":
            fid = abs(np.vdot(expected, got)) ** 2 / (
                np.vdot(expected, expected).real * np.vdot(got, got).real
            )
            verification = {"passed": bool(fid >= 1 - 1e-8), "fidelity": float(fid)}
        else:
            err = float(np.abs(np.asarray(got).reshape(-1) - expected.reshape(-1)).max())
            verification = {"passed": bool(err <= 1e-10), "max_error": err}

    report = make_report(
        "simulate",
        engine=args.engine,
        params={
            "circuit": args.circuit or args.circuit_file,
            "n": n,
            "seed": args.seed,
            "global_bits": args.global_bits if args.engine == "sv-dist" else None,
            "workers": args.workers if args.engine == "sv-dist" else None,
            "max_bond": args.max_bond if args.engine == "mps" else None,
        },
        counters=counters,
        digest=digest,
        verification=verification,
    )
    report["timings"] = timings
    report["timings"]["wall_s"] = time.perf_counter() - t_start
    emit(report, args.out)
    if verification is not None and not verification["passed"]:
        return EXIT_VERIFY
    return EXIT_OK


# ---------------------------------------------------------------------------
# pathfind / contract


def load_network(args, need_data: bool) -> TensorNetwork:
    if args.network:
        tn = TensorNetwork.load(args.network)
    else:
        circuit = load_circuit(args)
        target = parse_target(args.target, circuit.num_qubits)
        tn = circuit_to_network(circuit, target)
    if need_data:
        for i, t in enumerate(tn.tensors):
            if t.data is None:
                raise InvalidArgumentError(f"tensor {i} has no data")
    return tn


def cmd_pathfind(args) -> int:
    t_start = time.perf_counter()
    tn = load_network(args, need_data=False)
    cfg = OptimizerConfig(
        num_hyper_samples=args.samples, seed=args.seed, memory_budget=args.budget
    )
    t0 = time.perf_counter()
    res = find_path(tn, cfg)
    find_s = time.perf_counter() - t0
    counters = {
        "tensors": tn.num_tensors,
        "flops": res.total_flops,
        "unsliced_flops": res.unsliced_flops,
        "num_slices": res.num_slices,
        "slicing_overhead": res.overhead_factor,
    }
    if args.compare == "greedy":
        counters["greedy_flops"] = int(tree_flops(greedy_path(tn), tn.extents))
    if args.path_out:
        with open(args.path_out, "w") as fh:
            json.dump(res.to_json_dict(), fh)
    report = make_report(
        "pathfind",
        params={"samples": args.samples, "budget": args.budget, "seed": args.seed},
        counters=counters,
        path=res.to_json_dict(),
    )
    report["timings"] = {"pathfind_s": find_s, "wall_s": time.perf_counter() - t_start}
    emit(report, args.out)
    return EXIT_OK


def parse_slice_range(spec: str | None, total: int, accumulate: bool) -> SliceRange:
    if not spec:
        return SliceRange(0, total, accumulate)
    a, _, b = spec.partition("..")
    begin = int(a)
    end = min(int(b), total) if b else total
    if begin >= total:
        raise InvalidArgumentError(f"slice range starts at {begin} but only {total} slices exist")
    return SliceRange(begin, end, accumulate)


def cmd_contract(args) -> int:
    t_start = time.perf_counter()
    tn = load_network(args, need_data=True)
    cfg = OptimizerConfig(
        num_hyper_samples=args.samples, seed=args.seed, memory_budget=args.budget
    )
    res = find_path(tn, cfg)
    plan = make_plan(tn, res)
    arena = WorkspaceArena(cache_limit=args.cache_bytes)
    if args.autotune:
        tn_autotune(plan, arena)
    t0 = time.perf_counter()
    workers = args.workers
    repeats = max(1, args.repeat)
    srange = parse_slice_range(args.slices, plan.num_slices, args.accumulate)
    for _ in range(repeats):
        if workers > 1:
            value = contract_distributed(plan, workers=workers, slice_range=srange)
        else:
            value = tn_contract(plan, arena, srange)
    contract_s = time.perf_counter() - t0
    counters = {
        "tensors": tn.num_tensors,
        "flops": res.total_flops,
        "num_slices": plan.num_slices,
        "executed_flops": arena.stats.flops_executed,
        "cache": arena.cache_stats(),
        "workspace": plan.workspace,
    }
    result: dict = {
        "labels": list(value.labels),
        "extents": [tn.extents[l] for l in value.labels],
        "digest": digest_array(np.round(value.data, 12)),
    }
    if args.emit_values or value.data.size <= 64:
        flat = np.ascontiguousarray(value.data, dtype=np.complex128).reshape(-1)
        interleaved = np.empty(2 * flat.size)
        interleaved[0::2] = flat.real
        interleaved[1::2] = flat.imag
        result["data"] = interleaved.tolist()
    report = make_report("contract", counters=counters, result=result)
    report["timings"] = {"contract_s": contract_s, "wall_s": time.perf_counter() - t_start}
    emit(report, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# bench


def parse_range(spec: str) -> list[int]:
    parts = [int(x) for x in spec.split(":")]
    if len(parts) == 1:
        return parts
    lo, hi = parts[0], parts[1]
    step = parts[2] if len(parts) > 2 else 1
    return list(range(lo, hi + 1, step))


def cmd_bench(args) -> int:
    rows = []
    circuits = args.suite.split(",")
    engines = args.engines.split(",")
    for n in parse_range(args.n_range):
        for cname in circuits:
            ns = argparse.Namespace(
                circuit=cname,
                circuit_file=None,
                n=n,
                depth=args.depth,
                p=2,
                seed=args.seed,
            )
            circuit = load_circuit(ns)
            for engine in engines:
                t0 = time.perf_counter()
                gates = to_gates(circuit)
                if engine == "sv":
                    amps = run_circuit_sv(gates, n).logical_amplitudes()
                    digest = digest_array(np.round(amps, 12))
                    extra = ""
                elif engine == "mps":
                    mps = run_circuit_mps(gates, n, max_bond=args.max_bond)
                    digest = digest_array(np.round(mps.to_statevector(), 12)) if n <= 16 else ""
                    extra = f"max_bond={max(mps.bond_dims(), default=1)}"
                elif engine == "tn":
                    target = ConversionTarget("amplitude", bitstring="0" * n)
                    tn = circuit_to_network(circuit, target)
                    res = find_path(
                        tn, OptimizerConfig(num_hyper_samples=args.samples, seed=args.seed)
                    )
                    value = tn_contract(make_plan(tn, res), WorkspaceArena())
                    digest = digest_array(np.round(value.data, 12))
                    extra = f"flops={res.total_flops}"
                else:
                    raise InvalidArgumentError(f"unknown engine {engine!r}")
                wall = time.perf_counter() - t0
                rows.append(
                    {
                        "circuit": cname,
                        "n": n,
                        "engine": engine,
                        "gates": len(circuit),
                        "digest": digest,
                        "wall_s": f"{wall:.6f}",
                        "extra": extra,
                    }
                )
    fieldnames = ["circuit", "n", "engine", "gates", "digest", "wall_s", "extra"]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    text = buf.getvalue()
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(text)
    print(text, end="")
    return EXIT_OK


# ---------------------------------------------------------------------------
# convert / decompose


def cmd_convert(args) -> int:
    circuit = load_circuit(args)
    target = parse_target(args.target, circuit.num_qubits)
    tn = circuit_to_network(circuit, target)
    expr, operands = network_to_einsum(tn)
    doc = tn.to_json_dict()
    doc["expression"] = expr
    if args.network_out:
        with open(args.network_out, "w") as fh:
            json.dump(doc, fh)
    report = make_report(
        "convert",
        params={"target": args.target},
        counters={"tensors": tn.num_tensors, "gates": len(circuit)},
        expression=expr,
    )
    if args.emit_values:
        report["network"] = doc
    emit(report, args.out)
    return EXIT_OK


def _tensor_from_entry(entry: dict) -> Tensor:
    raw = np.asarray(entry["data"], dtype=float)
    arr = (raw[0::2] + 1j * raw[1::2]).reshape([int(e) for e in entry["extents"]])
    return Tensor(tuple(entry["labels"]), arr)


def _tensor_to_entry(t: Tensor) -> dict:
    flat = np.ascontiguousarray(t.data, dtype=np.complex128).reshape(-1)
    interleaved = np.empty(2 * flat.size)
    interleaved[0::2] = flat.real
    interleaved[1::2] = flat.imag
    return {
        "labels": list(t.labels),
        "extents": list(t.data.shape),
        "data": interleaved.tolist(),
    }


def cmd_decompose(args) -> int:
    with open(args.tensor) as fh:
        entry = json.load(fh)
    t = _tensor_from_entry(entry)
    left = tuple(args.left.split(","))
    right = tuple(args.right.split(","))
    if args.method == "qr":
        q, r = tensor_qr(t, left, right, bond_label=args.bond_label)
        payload = {"method": "qr", "factors": [_tensor_to_entry(q), _tensor_to_entry(r)]}
    else:
        policy = SvdPolicy(
            max_extent=args.max_extent,
            abs_cutoff=args.abs_cutoff,
            rel_cutoff=args.rel_cutoff,
            partition=args.partition,
        )
        u, s, v, info = tensor_svd(t, left, right, policy, bond_label=args.bond_label)
        payload = {
            "method": "svd",
            "factors": [_tensor_to_entry(u), _tensor_to_entry(v)],
            "singular_values": list(map(float, s)),
            "info": {
                "full_extent": info.full_extent,
                "kept_extent": info.kept_extent,
                "discarded_weight": info.discarded_weight,
            },
        }
    report = make_report("decompose", **payload)
    emit(report, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="duetsim", description=__doc__)
    sub = parser.add_subparsers(dest="cmd", required=True)

    def add_common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="also write the JSON report here")

    def add_circuit_source(p):
        p.add_argument("--circuit", choices=["qft", "qv", "qaoa"])
        p.add_argument("--circuit-file")
        p.add_argument("--n", type=int, default=4)
        p.add_argument("--depth", type=int, default=30)
        p.add_argument("--p", type=int, default=2)

    sim = sub.add_parser("simulate", help="run a circuit on one of the engines")
    add_common(sim)
    add_circuit_source(sim)
    sim.add_argument("--engine", choices=["sv", "sv-dist", "mps", "tn"], default="sv")
    sim.add_argument("--global-bits", type=int, default=1)
    sim.add_argument("--workers", type=int, default=default_workers())
    sim.add_argument("--max-bond", type=int, default=None)
    sim.add_argument("--max-fused-gate-size", type=int, default=None)
    sim.add_argument("--max-fused-diagonal-gate-size", type=int, default=None)
    sim.add_argument("--target", default="amplitude")
    sim.add_argument("--samples", type=int, default=8)
    sim.add_argument("--budget", type=int, default=None)
    sim.add_argument("--verify", action="store_true")
    sim.add_argument("--dry-run", action="store_true")
    sim.set_defaults(fn=cmd_simulate)

    pf = sub.add_parser("pathfind", help="find a contraction path")
    add_common(pf)
    add_circuit_source(pf)
    pf.add_argument("--network")
    pf.add_argument("--target", default="amplitude")
    pf.add_argument("--samples", type=int, default=16)
    pf.add_argument("--budget", type=int, default=None)
    pf.add_argument("--compare", choices=["greedy"])
    pf.add_argument("--path-out")
    pf.set_defaults(fn=cmd_pathfind)

    ct = sub.add_parser("contract", help="contract a network")
    add_common(ct)
    add_circuit_source(ct)
    ct.add_argument("--network")
    ct.add_argument("--target", default="amplitude")
    ct.add_argument("--samples", type=int, default=8)
    ct.add_argument("--budget", type=int, default=None)
    ct.add_argument("--slices", help="slice range a..b")
    ct.add_argument("--accumulate", action="store_true")
    ct.add_argument("--workers", type=int, default=default_workers())
    ct.add_argument("--cache-bytes", type=int, default=0)
    ct.add_argument("--autotune", action="store_true")
    ct.add_argument("--repeat", type=int, default=1)
    ct.add_argument("--emit-values", action="store_true")
    ct.set_defaults(fn=cmd_contract)

    bn = sub.add_parser("bench", help="run benchmark suites, emit CSV")
    add_common(bn)
    bn.add_argument("--suite", default="qft,qv")
    bn.add_argument("--engines", default="sv")
    bn.add_argument("--n-range", default="4:8:2")
    bn.add_argument("--depth", type=int, default=10)
    bn.add_argument("--max-bond", type=int, default=None)
    bn.add_argument("--samples", type=int, default=4)
    bn.add_argument("--csv", help="write rows to this file as well")
    bn.set_defaults(fn=cmd_bench)

    cv = sub.add_parser("convert", help="convert a circuit to an einsum network")
    add_common(cv)
    add_circuit_source(cv)
    cv.add_argument("--target", default="amplitude")
    cv.add_argument("--network-out")
    cv.add_argument("--emit-values", action="store_true")
    cv.set_defaults(fn=cmd_convert)

    dc = sub.add_parser("decompose", help="QR/SVD a tensor from JSON")
    add_common(dc)
    dc.add_argument("--tensor", required=True)
    dc.add_argument("--method", choices=["qr", "svd"], default="qr")
    dc.add_argument("--left", required=True, help="comma-separated left labels")
    dc.add_argument("--right", required=True, help="comma-separated right labels")
    dc.add_argument("--bond-label", default=None)
    dc.add_argument("--max-extent", type=int, default=None)
    dc.add_argument("--abs-cutoff", type=float, default=None)
    dc.add_argument("--rel-cutoff", type=float, default=None)
    dc.add_argument("--partition", choices=["to_u", "to_v", "split_sqrt"], default=None)
    dc.set_defaults(fn=cmd_decompose)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except InfeasibleContractionError as exc:
        print(json.dumps({"error": "infeasible", "detail": str(exc)}), file=sys.stderr)
        return EXIT_INFEASIBLE
    except InvalidArgumentError as exc:
        print(json.dumps({"error": "invalid-argument", "detail": str(exc)}), file=sys.stderr)
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
