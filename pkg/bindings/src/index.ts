/** High-level bindings over the duetsim CLI.
 *
 * einsum() is a drop-in style contraction call; contract() adds optimizer
 * knobs; Network wraps one parsed network for repeated contraction with
 * contractPath / autotune / contract; decompose() splits a single tensor by
 * QR or SVD; CircuitToEinsum turns circuit JSON into einsum inputs.
 *
 * Everything round-trips through the engine's JSON wire formats, so results
 * match in-process engine calls exactly for identical seeds and options.
 */

import { ComplexTensor } from "./tensor.js";
import {
  CliError,
  ParsedExpression,
  TensorEntry,
  Workdir,
  entryToTensor,
  networkDocument,
  parseExpression,
  parseLabels,
  runCli,
} from "./wire.js";

export { ComplexTensor } from "./tensor.js";
export { CliError } from "./wire.js";

export interface ContractOptions {
  samples?: number;
  seed?: number;
  memoryBudget?: number;
  workers?: number;
  cacheBytes?: number;
  autotune?: boolean;
  slices?: { begin: number; end: number; accumulate?: boolean };
}

function optionFlags(options: ContractOptions): string[] {
  const flags: string[] = ["--seed", String(options.seed ?? 0)];
  if (options.samples !== undefined) flags.push("--samples", String(options.samples));
  if (options.memoryBudget !== undefined) flags.push("--budget", String(options.memoryBudget));
  if (options.workers !== undefined) flags.push("--workers", String(options.workers));
  if (options.cacheBytes !== undefined) flags.push("--cache-bytes", String(options.cacheBytes));
  if (options.autotune) flags.push("--autotune");
  if (options.slices) {
    flags.push("--slices", `${options.slices.begin}..${options.slices.end}`);
    if (options.slices.accumulate) flags.push("--accumulate");
  }
  return flags;
}

interface ContractReport {
  result: { labels: string[]; extents: number[]; data?: number[]; digest: string };
  counters: Record<string, unknown>;
}

function contractNetworkFile(path: string, options: ContractOptions): ComplexTensor {
  const report = runCli([
    "contract",
    "--network",
    path,
    "--emit-values",
    ...optionFlags(options),
  ]) as unknown as ContractReport;
  const { extents, data } = report.result;
  if (!data) throw new Error("engine did not emit values");
  return new ComplexTensor(extents, Float64Array.from(data));
}

/** numpy-style einsum with the default optimizer configuration. */
export function einsum(expr: string, ...operands: ComplexTensor[]): ComplexTensor {
  return contract(expr, operands, {});
}

/** einsum with explicit pathfinder/execution options. */
export function contract(
  expr: string,
  operands: ComplexTensor[],
  options: ContractOptions = {},
): ComplexTensor {
  const parsed = parseExpression(expr);
  const work = new Workdir();
  try {
    const path = work.writeJson(networkDocument(parsed, operands), "net");
    return contractNetworkFile(path, options);
  } finally {
    work.dispose();
  }
}

export interface PathInfo {
  flops: number;
  overhead: number;
  numSlices: number;
  pairs: [number, number][];
}

/** A parsed network held for repeated contraction. */
export class Network {
  private readonly work: Workdir;
  private readonly netPath: string;
  private options: ContractOptions;
  private contracted = false;
  private released = false;
  private path?: PathInfo;

  constructor(expr: string, operands: ComplexTensor[], options: ContractOptions = {}) {
    const parsed: ParsedExpression = parseExpression(expr);
    this.work = new Workdir();
    this.netPath = this.work.writeJson(networkDocument(parsed, operands), "net");
    this.options = { ...options };
  }

  private checkLive(): void {
    if (this.released) throw new Error("network has been released");
  }

  configure(options: ContractOptions): void {
    this.checkLive();
    if (this.contracted) {
      throw new Error("options are immutable after the first contraction");
    }
    this.options = { ...this.options, ...options };
  }

  /** Run the pathfinder; returns flops/overhead/slice info. */
  contractPath(): PathInfo {
    this.checkLive();
    const report = runCli([
      "pathfind",
      "--network",
      this.netPath,
      ...optionFlags(this.options),
    ]) as {
      path?: { flops: number; overhead: number; pairs: [number, number][] };
      counters?: { num_slices: number };
    };
    this.path = {
      flops: report.path!.flops,
      overhead: report.path!.overhead,
      numSlices: report.counters!.num_slices,
      pairs: report.path!.pairs,
    };
    return this.path;
  }

  /** Request kernel autotuning for subsequent contractions. */
  autotune(): void {
    this.checkLive();
    if (this.contracted) {
      throw new Error("options are immutable after the first contraction");
    }
    this.options.autotune = true;
  }

  contract(): ComplexTensor {
    this.checkLive();
    this.contracted = true;
    return contractNetworkFile(this.netPath, this.options);
  }

  release(): void {
    if (!this.released) {
      this.work.dispose();
      this.released = true;
    }
  }
}

// ---------------------------------------------------------------------------
// decomposition

export interface DecomposeOptions {
  method?: "qr" | "svd";
  maxExtent?: number;
  absCutoff?: number;
  relCutoff?: number;
  partition?: "to_u" | "to_v" | "split_sqrt";
}

export interface DecomposeResult {
  factors: [ComplexTensor, ComplexTensor];
  factorLabels: [string[], string[]];
  singularValues?: number[];
  info?: { fullExtent: number; keptExtent: number; discardedWeight: number };
}

/** Split a tensor per an expression like "ij->ia,aj" (QR by default). */
export function decompose(
  expr: string,
  tensor: ComplexTensor,
  options: DecomposeOptions = {},
): DecomposeResult {
  const arrow = expr.indexOf("->");
  if (arrow < 0) throw new Error("decompose expression needs '->'");
  const inputLabels = parseLabels(expr.slice(0, arrow));
  const outs = expr.slice(arrow + 2).split(",");
  if (outs.length !== 2) throw new Error("decompose expects two output terms");
  const leftLabels = parseLabels(outs[0]);
  const rightLabels = parseLabels(outs[1]);
  const bondCandidates = leftLabels.filter(
    (l) => rightLabels.includes(l) && !inputLabels.includes(l),
  );
  if (bondCandidates.length !== 1) {
    throw new Error("outputs must share exactly one new bond label");
  }
  const bond = bondCandidates[0];
  const left = leftLabels.filter((l) => l !== bond);
  const right = rightLabels.filter((l) => l !== bond);

  const work = new Workdir();
  try {
    const path = work.writeJson(
      { labels: inputLabels, extents: tensor.extents, data: Array.from(tensor.data) },
      "tensor",
    );
    const method = options.method ?? "qr";
    const args = [
      "decompose",
      "--tensor",
      path,
      "--method",
      method,
      "--left",
      left.join(","),
      "--right",
      right.join(","),
      "--bond-label",
      bond,
    ];
    if (options.maxExtent !== undefined) args.push("--max-extent", String(options.maxExtent));
    if (options.absCutoff !== undefined) args.push("--abs-cutoff", String(options.absCutoff));
    if (options.relCutoff !== undefined) args.push("--rel-cutoff", String(options.relCutoff));
    if (options.partition !== undefined) args.push("--partition", options.partition);
    const report = runCli(args) as {
      factors: TensorEntry[];
      singular_values?: number[];
      info?: { full_extent: number; kept_extent: number; discarded_weight: number };
    };
    const [rawL, rawR] = report.factors;
    // reorder factor axes to the caller's requested label order
    const lPerm = leftLabels.map((l) => rawL.labels.indexOf(l));
    const rPerm = rightLabels.map((l) => rawR.labels.indexOf(l));
    const result: DecomposeResult = {
      factors: [
        entryToTensor(rawL).transpose(lPerm),
        entryToTensor(rawR).transpose(rPerm),
      ],
      factorLabels: [leftLabels, rightLabels],
    };
    if (report.singular_values) result.singularValues = report.singular_values;
    if (report.info) {
      result.info = {
        fullExtent: report.info.full_extent,
        keptExtent: report.info.kept_extent,
        discardedWeight: report.info.discarded_weight,
      };
    }
    return result;
  } finally {
    work.dispose();
  }
}

// ---------------------------------------------------------------------------
// circuit -> einsum

export interface CircuitJson {
  version?: number;
  n: number;
  ops: {
    name: string;
    params?: number[];
    targets: number[];
    controls?: [number, number][];
    matrix?: number[];
  }[];
}

export interface EinsumInputs {
  expression: string;
  operands: ComplexTensor[];
}

interface ConvertReport {
  expression: string;
  network: { tensors: TensorEntry[]; output: string[] };
}

function convert(circuit: CircuitJson, target: string): EinsumInputs {
  const work = new Workdir();
  try {
    const path = work.writeJson(
      { version: circuit.version ?? 1, n: circuit.n, ops: circuit.ops },
      "circuit",
    );
    const report = runCli([
      "convert",
      "--circuit-file",
      path,
      "--target",
      target,
      "--emit-values",
    ]) as unknown as ConvertReport;
    return {
      expression: report.expression,
      operands: report.network.tensors.map(entryToTensor),
    };
  } finally {
    work.dispose();
  }
}

/** Turns circuit JSON into einsum-compatible contraction inputs. */
export class CircuitToEinsum {
  constructor(private readonly circuit: CircuitJson) {}

  amplitude(bitstring: string): EinsumInputs {
    if (bitstring.length !== this.circuit.n) {
      throw new Error("bitstring length must equal the qubit count");
    }
    return convert(this.circuit, `amplitude:${bitstring}`);
  }

  stateVector(): EinsumInputs {
    return convert(this.circuit, "statevector");
  }
}

export function circuitToEinsum(circuit: CircuitJson, bitstring: string): EinsumInputs {
  return new CircuitToEinsum(circuit).amplitude(bitstring);
}
