/** Dense complex tensors stored as interleaved (re, im) Float64Arrays. */

export class ComplexTensor {
  readonly extents: number[];
  readonly data: Float64Array; // interleaved re, im; row-major

  constructor(extents: number[], data?: Float64Array) {
    this.extents = [...extents];
    const size = this.extents.reduce((a, b) => a * b, 1);
    if (data === undefined) {
      this.data = new Float64Array(2 * size);
    } else {
      if (data.length !== 2 * size) {
        throw new Error(`data length ${data.length} != 2 * ${size}`);
      }
      this.data = data;
    }
  }

  get size(): number {
    return this.extents.reduce((a, b) => a * b, 1);
  }

  static fromNested(values: unknown): ComplexTensor {
    // real-valued nested arrays, for test convenience
    const extents: number[] = [];
    let probe: unknown = values;
    while (Array.isArray(probe)) {
      extents.push(probe.length);
      probe = probe[0];
    }
    const t = new ComplexTensor(extents);
    let i = 0;
    const walk = (v: unknown): void => {
      if (Array.isArray(v)) {
        for (const x of v) walk(x);
      } else {
        t.data[2 * i] = v as number;
        t.data[2 * i + 1] = 0;
        i += 1;
      }
    };
    walk(values);
    return t;
  }

  private offset(index: number[]): number {
    if (index.length !== this.extents.length) {
      throw new Error(`rank mismatch: ${index.length} vs ${this.extents.length}`);
    }
    let off = 0;
    for (let k = 0; k < index.length; k++) {
      if (index[k] < 0 || index[k] >= this.extents[k]) {
        throw new Error(`index out of range on axis ${k}`);
      }
      off = off * this.extents[k] + index[k];
    }
    return off;
  }

  get(index: number[]): [number, number] {
    const off = this.offset(index);
    return [this.data[2 * off], this.data[2 * off + 1]];
  }

  set(index: number[], re: number, im = 0): void {
    const off = this.offset(index);
    this.data[2 * off] = re;
    this.data[2 * off + 1] = im;
  }

  addInto(index: number[], re: number, im: number): void {
    const off = this.offset(index);
    this.data[2 * off] += re;
    this.data[2 * off + 1] += im;
  }

  /** Permute axes: result axis k reads this tensor's axis perm[k]. */
  transpose(perm: number[]): ComplexTensor {
    const outExtents = perm.map((p) => this.extents[p]);
    const out = new ComplexTensor(outExtents);
    const rank = this.extents.length;
    const index = new Array<number>(rank).fill(0);
    const total = this.size;
    for (let flat = 0; flat < total; flat++) {
      const src = this.get(index);
      out.set(
        perm.map((p) => index[p]),
        src[0],
        src[1],
      );
      for (let ax = rank - 1; ax >= 0; ax--) {
        index[ax] += 1;
        if (index[ax] < this.extents[ax]) break;
        index[ax] = 0;
      }
    }
    return out;
  }

  maxAbsDiff(other: ComplexTensor): number {
    if (other.data.length !== this.data.length) {
      throw new Error("shape mismatch");
    }
    let worst = 0;
    for (let i = 0; i < this.size; i++) {
      const dr = this.data[2 * i] - other.data[2 * i];
      const di = this.data[2 * i + 1] - other.data[2 * i + 1];
      worst = Math.max(worst, Math.hypot(dr, di));
    }
    return worst;
  }
}

export function interleavedToTensor(extents: number[], flat: number[]): ComplexTensor {
  return new ComplexTensor(extents, Float64Array.from(flat));
}
