import { describe, expect, it } from "vitest";
import { SplitMix64, randomSemiOrthogonal } from "../src/portable";

describe("SplitMix64", () => {
  it("matches the published reference stream for seed 0", () => {
    const rng = new SplitMix64(0);
    expect(rng.nextU64()).toBe(0xe220a8397b1dcdafn);
    expect(rng.nextU64()).toBe(0x6e789e6aa1b965f4n);
    expect(rng.nextU64()).toBe(0x06c45d188009454fn);
    expect(rng.nextU64()).toBe(0xf88bb8a8724c81ecn);
    expect(rng.nextU64()).toBe(0x1b39896a51a8749bn);
  });

  it("is deterministic per seed", () => {
    const a = new SplitMix64(42).gaussians(10);
    const b = new SplitMix64(42).gaussians(10);
    expect(Array.from(a)).toEqual(Array.from(b));
  });

  it("floats lie in [0, 1)", () => {
    const rng = new SplitMix64(7);
    for (let i = 0; i < 1000; i++) {
      const f = rng.nextFloat();
      expect(f).toBeGreaterThanOrEqual(0);
      expect(f).toBeLessThan(1);
    }
  });

  it("gaussians have roughly standard moments", () => {
    const g = new SplitMix64(1).gaussians(20000);
    const mean = g.reduce((s, x) => s + x, 0) / g.length;
    const variance = g.reduce((s, x) => s + (x - mean) * (x - mean), 0) / g.length;
    expect(Math.abs(mean)).toBeLessThan(0.05);
    expect(Math.abs(variance - 1)).toBeLessThan(0.05);
  });
});

describe("randomSemiOrthogonal", () => {
  it("has orthonormal columns", () => {
    const m = randomSemiOrthogonal(32, 16, 0);
    for (let a = 0; a < 16; a++) {
      for (let b = 0; b < 16; b++) {
        let dot = 0;
        for (let r = 0; r < 32; r++) {
          dot += m[r][a] * m[r][b];
        }
        expect(dot).toBeCloseTo(a === b ? 1 : 0, 12);
      }
    }
  });

  it("rejects cols > rows", () => {
    expect(() => randomSemiOrthogonal(4, 8, 0)).toThrow();
  });
});
