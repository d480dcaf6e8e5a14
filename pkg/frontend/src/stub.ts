/**
 * Stub embedding model: mean-pools frame vectors out of the PCM layout and
 * projects them through the seeded semi-orthogonal map, mirroring the
 * harness's synthetic embedding (no memorization warp).
 */
import { randomSemiOrthogonal } from "./portable";

export const FRAME_DIM = 16;
export const FRAME_SCALE = 0.25;
export const DEFAULT_DIM = 32;
export const DEFAULT_SAMPLE_RATE = 16000;
export const DEFAULT_FRAME_RATE = 100;

export interface EmbeddingModel {
  dim: number;
  sampleRate: number;
  embed(samples: Float64Array, sampleRate: number): number[];
}

export class StubModel implements EmbeddingModel {
  readonly dim: number;
  readonly sampleRate: number;
  private readonly frameRate: number;
  private readonly projection: number[][];

  constructor(seed = 0, dim = DEFAULT_DIM, sampleRate = DEFAULT_SAMPLE_RATE,
              frameRate = DEFAULT_FRAME_RATE) {
    this.dim = dim;
    this.sampleRate = sampleRate;
    this.frameRate = frameRate;
    this.projection = randomSemiOrthogonal(dim, FRAME_DIM, seed);
  }

  embed(samples: Float64Array, sampleRate: number): number[] {
    const frameLen = Math.round(sampleRate / this.frameRate);
    const nFrames = Math.floor(samples.length / frameLen);
    if (nFrames === 0) {
      throw new Error("voice shorter than one frame");
    }
    const mean = new Float64Array(FRAME_DIM);
    for (let f = 0; f < nFrames; f++) {
      const base = f * frameLen;
      for (let d = 0; d < FRAME_DIM; d++) {
        mean[d] += samples[base + d] / FRAME_SCALE;
      }
    }
    for (let d = 0; d < FRAME_DIM; d++) {
      mean[d] /= nFrames;
    }
    const raw = new Float64Array(this.dim);
    let norm = 0;
    for (let r = 0; r < this.dim; r++) {
      let acc = 0;
      for (let d = 0; d < FRAME_DIM; d++) {
        acc += this.projection[r][d] * mean[d];
      }
      raw[r] = acc;
      norm += acc * acc;
    }
    norm = Math.sqrt(norm);
    if (norm === 0) {
      throw new Error("zero-norm embedding");
    }
    return Array.from(raw, (x) => x / norm);
  }
}

/** Load a user-supplied model from a CommonJS module path. */
export function loadHookModel(modulePath: string): EmbeddingModel {
  // eslint-disable-next-line @typescript-eslint/no-var-requires
  const mod = require(modulePath);
  const hook = mod.default ?? mod;
  if (typeof hook.embed !== "function" || !hook.dim || !hook.sampleRate) {
    throw new Error(`hook module ${modulePath} must export dim, sampleRate and embed()`);
  }
  return hook as EmbeddingModel;
}
