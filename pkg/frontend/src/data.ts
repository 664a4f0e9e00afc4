/** Dataset and trigger manifests (JSON referencing WOBT tensor files). */
import fs from 'node:fs';
import path from 'node:path';

import { readTensor } from './wobt.js';

export interface Dataset {
  /** [n, dim] row-major. */
  inputs: Float32Array;
  n: number;
  dim: number;
  classes: number;
  labels: Int32Array;
}

export interface Trigger {
  mask: Float32Array;
  pattern: Float32Array;
  mode: 'overlay' | 'additive';
  targetClass: number | null;
}

export function loadDataset(manifestPath: string): Dataset {
  const manifest = JSON.parse(fs.readFileSync(manifestPath, 'utf8'));
  const base = path.dirname(path.resolve(manifestPath));
  const inputs = readTensor(path.join(base, manifest.inputs_path));
  if (inputs.dims.length !== 2) {
    throw new Error(`dataset inputs must be [n, dim], got [${inputs.dims}]`);
  }
  if (!manifest.labels_path) {
    throw new Error('training requires a labeled dataset');
  }
  const raw = readTensor(path.join(base, manifest.labels_path));
  const labels = Int32Array.from(raw.data, (v) => Math.round(v));
  const classes = Number(manifest.classes);
  if (labels.length !== inputs.dims[0]) {
    throw new Error(`labels length ${labels.length} != n=${inputs.dims[0]}`);
  }
  for (const l of labels) {
    if (l < 0 || l >= classes) throw new Error(`label ${l} outside [0, ${classes})`);
  }
  return { inputs: inputs.data, n: inputs.dims[0], dim: inputs.dims[1], classes, labels };
}

export function loadTrigger(manifestPath: string): Trigger {
  const manifest = JSON.parse(fs.readFileSync(manifestPath, 'utf8'));
  const base = path.dirname(path.resolve(manifestPath));
  const mask = readTensor(path.join(base, manifest.mask_path)).data;
  const pattern = readTensor(path.join(base, manifest.pattern_path)).data;
  if (mask.length !== pattern.length) {
    throw new Error('trigger mask and pattern dims differ');
  }
  const mode = manifest.mode;
  if (mode !== 'overlay' && mode !== 'additive') {
    throw new Error(`unknown trigger mode ${JSON.stringify(mode)}`);
  }
  return {
    mask,
    pattern,
    mode,
    targetClass: manifest.target_class ?? null,
  };
}

/** In-place trigger application to one row of a flat [n, dim] buffer. */
export function applyTriggerRow(
  x: Float32Array | Float64Array,
  offset: number,
  trigger: Trigger,
): void {
  const d = trigger.mask.length;
  for (let i = 0; i < d; i++) {
    const v = x[offset + i];
    if (trigger.mode === 'overlay') {
      x[offset + i] = (1 - trigger.mask[i]) * v + trigger.mask[i] * trigger.pattern[i];
    } else {
      x[offset + i] = Math.min(1, Math.max(0, v + trigger.mask[i] * trigger.pattern[i]));
    }
  }
}
