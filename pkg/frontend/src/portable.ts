/**
 * Deterministic, language-portable RNG and linear algebra, matching the
 * harness's splitmix64 + Box-Muller + modified Gram-Schmidt pipeline so the
 * stub backend reproduces the in-process embedding map.
 */

const MASK64 = (1n << 64n) - 1n;

export class SplitMix64 {
  private state: bigint;

  constructor(seed: bigint | number) {
    this.state = BigInt(seed) & MASK64;
  }

  nextU64(): bigint {
    this.state = (this.state + 0x9e3779b97f4a7c15n) & MASK64;
    let z = this.state;
    z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK64;
    z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK64;
    return z ^ (z >> 31n);
  }

  /** 53-bit mantissa uniform in [0, 1) */
  nextFloat(): number {
    return Number(this.nextU64() >> 11n) / 2 ** 53;
  }

  nextGaussianPair(): [number, number] {
    let u1 = this.nextFloat();
    const u2 = this.nextFloat();
    if (u1 <= 0) {
      u1 = 2 ** -53;
    }
    const r = Math.sqrt(-2 * Math.log(u1));
    const t = 2 * Math.PI * u2;
    return [r * Math.cos(t), r * Math.sin(t)];
  }

  gaussians(n: number): Float64Array {
    const out = new Float64Array(n);
    for (let i = 0; i + 1 < n; i += 2) {
      const [a, b] = this.nextGaussianPair();
      out[i] = a;
      out[i + 1] = b;
    }
    if (n % 2 === 1) {
      out[n - 1] = this.nextGaussianPair()[0];
    }
    return out;
  }
}

/**
 * rows x cols matrix with orthonormal columns, seeded portably. Returned
 * row-major as number[rows][cols]. Columns are drawn from the gaussian
 * stream in order, then orthonormalized with modified Gram-Schmidt.
 */
export function randomSemiOrthogonal(rows: number, cols: number, seed: number): number[][] {
  if (cols > rows) {
    throw new Error("need cols <= rows for orthonormal columns");
  }
  const rng = new SplitMix64(seed);
  const g = rng.gaussians(rows * cols);
  // q[j] is the j-th orthonormal column, length `rows`
  const q: Float64Array[] = [];
  for (let j = 0; j < cols; j++) {
    const v = Float64Array.from(g.subarray(j * rows, (j + 1) * rows));
    for (let i = 0; i < j; i++) {
      let dot = 0;
      for (let r = 0; r < rows; r++) {
        dot += v[r] * q[i][r];
      }
      for (let r = 0; r < rows; r++) {
        v[r] -= dot * q[i][r];
      }
    }
    let norm = 0;
    for (let r = 0; r < rows; r++) {
      norm += v[r] * v[r];
    }
    norm = Math.sqrt(norm);
    for (let r = 0; r < rows; r++) {
      v[r] /= norm;
    }
    q.push(v);
  }
  const out: number[][] = [];
  for (let r = 0; r < rows; r++) {
    out.push(q.map((col) => col[r]));
  }
  return out;
}
