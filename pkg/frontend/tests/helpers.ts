import { Dataset, Trigger } from '../src/data.js';
import { Rng } from '../src/rng.js';

export const DIM = 16;
export const CLASSES = 4;

/** Overlapping Gaussian blobs in [0,1]^16 with shared centers. */
export function makeBlobs(n: number, seed: number, centerSeed = 11): Dataset {
  const centerRng = new Rng(centerSeed);
  const centers: number[][] = [];
  for (let c = 0; c < CLASSES; c++) {
    centers.push(Array.from({ length: DIM }, () => 0.25 + 0.5 * centerRng.uniform()));
  }
  const rng = new Rng(seed);
  const inputs = new Float32Array(n * DIM);
  const labels = new Int32Array(n);
  for (let r = 0; r < n; r++) {
    const label = rng.int(CLASSES);
    labels[r] = label;
    for (let i = 0; i < DIM; i++) {
      const v = centers[label][i] + 0.18 * rng.normal();
      inputs[r * DIM + i] = Math.min(1, Math.max(0, v));
    }
  }
  return { inputs, n, dim: DIM, classes: CLASSES, labels };
}

/** Overlay patch forcing dims [start, start+1] to 1.0. */
export function patchTrigger(start: number, targetClass = 0): Trigger {
  const mask = new Float32Array(DIM);
  mask[start] = 1;
  mask[start + 1] = 1;
  return {
    mask,
    pattern: new Float32Array(DIM).fill(1),
    mode: 'overlay',
    targetClass,
  };
}
