/** CLI transport: network/tensor JSON documents and report parsing. */

import { spawnSync } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { ComplexTensor, interleavedToTensor } from "./tensor.js";

const PYTHON = process.env.DUETSIM_PYTHON ?? "python3";

export class CliError extends Error {
  constructor(
    message: string,
    readonly exitCode: number,
    readonly stderr: string,
  ) {
    super(message);
  }
}

export function runCli(args: string[]): Record<string, unknown> {
  const proc = spawnSync(PYTHON, ["-m", "duetsim", ...args], {
    encoding: "utf8",
    maxBuffer: 1 << 28,
  });
  if (proc.error) throw proc.error;
  if (proc.status !== 0) {
    throw new CliError(
      `duetsim ${args[0]} exited with ${proc.status}: ${proc.stderr}`,
      proc.status ?? -1,
      proc.stderr ?? "",
    );
  }
  return JSON.parse(proc.stdout) as Record<string, unknown>;
}

export interface TensorEntry {
  labels: string[];
  extents: number[];
  data: number[] | null;
  constant?: boolean;
}

export function tensorToEntry(labels: string[], t: ComplexTensor): TensorEntry {
  return { labels, extents: t.extents, data: Array.from(t.data), constant: false };
}

export function entryToTensor(entry: TensorEntry): ComplexTensor {
  if (entry.data === null) throw new Error("tensor entry carries no data");
  return interleavedToTensor(entry.extents, entry.data);
}

export class Workdir {
  readonly dir: string;
  private counter = 0;

  constructor() {
    this.dir = mkdtempSync(join(tmpdir(), "duetsim-bind-"));
  }

  writeJson(doc: unknown, stem: string): string {
    const path = join(this.dir, `${stem}${this.counter++}.json`);
    writeFileSync(path, JSON.stringify(doc));
    return path;
  }

  dispose(): void {
    rmSync(this.dir, { recursive: true, force: true });
  }
}

// ---------------------------------------------------------------------------
// einsum expression handling (same dialect as the engine: single characters
// or [bracketed] multi-character labels, explicit ->)

export function parseLabels(term: string): string[] {
  const labels: string[] = [];
  let i = 0;
  while (i < term.length) {
    const c = term[i];
    if (c === "[") {
      const j = term.indexOf("]", i);
      if (j < 0) throw new Error(`unterminated [label in ${term}`);
      labels.push(term.slice(i + 1, j));
      i = j + 1;
    } else if (/\s/.test(c)) {
      i += 1;
    } else {
      labels.push(c);
      i += 1;
    }
  }
  return labels;
}

export interface ParsedExpression {
  terms: string[][];
  output: string[];
}

export function parseExpression(expr: string): ParsedExpression {
  const arrow = expr.indexOf("->");
  if (arrow < 0) throw new Error("expression must contain an explicit '->'");
  const lhs = expr.slice(0, arrow);
  const rhs = expr.slice(arrow + 2);
  const terms = lhs.split(",").map(parseLabels);
  const output = parseLabels(rhs);
  const known = new Set(terms.flat());
  for (const l of output) {
    if (!known.has(l)) throw new Error(`unknown output label '${l}'`);
  }
  return { terms, output };
}

export function networkDocument(
  parsed: ParsedExpression,
  operands: ComplexTensor[],
): { tensors: TensorEntry[]; output: string[] } {
  if (operands.length !== parsed.terms.length) {
    throw new Error(`${parsed.terms.length} terms but ${operands.length} operands`);
  }
  const extents = new Map<string, number>();
  parsed.terms.forEach((labels, k) => {
    const op = operands[k];
    if (op.extents.length !== labels.length) {
      throw new Error(`operand ${k} rank ${op.extents.length} != ${labels.length}`);
    }
    labels.forEach((l, ax) => {
      const prev = extents.get(l);
      if (prev !== undefined && prev !== op.extents[ax]) {
        throw new Error(`inconsistent extents for label '${l}'`);
      }
      extents.set(l, op.extents[ax]);
    });
  });
  return {
    tensors: parsed.terms.map((labels, k) => tensorToEntry(labels, operands[k])),
    output: parsed.output,
  };
}
