/**
 * Dense softmax classifiers in the shared model-manifest format: a JSON file
 * {"layers": [{"weights_path", "bias_path", "activation"}]} whose tensors are
 * WOBT files resolved relative to the manifest.
 */
import fs from 'node:fs';
import path from 'node:path';

import { readTensor, writeTensor } from './wobt.js';

export interface Layer {
  /** [inDim, outDim] row-major. */
  weights: Float32Array;
  inDim: number;
  outDim: number;
  bias: Float32Array;
  activation: 'relu' | 'none';
}

export interface Model {
  layers: Layer[];
}

export function inputDim(model: Model): number {
  return model.layers[0].inDim;
}

export function classCount(model: Model): number {
  return model.layers[model.layers.length - 1].outDim;
}

export function loadModel(manifestPath: string): Model {
  const manifest = JSON.parse(fs.readFileSync(manifestPath, 'utf8'));
  const base = path.dirname(path.resolve(manifestPath));
  const layers: Layer[] = manifest.layers.map((entry: any) => {
    const w = readTensor(path.join(base, entry.weights_path));
    const b = readTensor(path.join(base, entry.bias_path));
    if (w.dims.length !== 2) {
      throw new Error(`weight tensor must be 2-d, got [${w.dims}]`);
    }
    const activation = entry.activation;
    if (activation !== 'relu' && activation !== 'none') {
      throw new Error(`unknown activation ${JSON.stringify(activation)}`);
    }
    return {
      weights: w.data,
      inDim: w.dims[0],
      outDim: w.dims[1],
      bias: b.data,
      activation,
    };
  });
  for (let i = 1; i < layers.length; i++) {
    if (layers[i].inDim !== layers[i - 1].outDim) {
      throw new Error(`layer ${i} input ${layers[i].inDim} != previous output ${layers[i - 1].outDim}`);
    }
  }
  return { layers };
}

export function saveModel(model: Model, manifestPath: string): void {
  const base = path.dirname(path.resolve(manifestPath));
  fs.mkdirSync(base, { recursive: true });
  const stem = path.basename(manifestPath).replace(/\.[^.]*$/, '');
  const entries = model.layers.map((layer, i) => {
    const wname = `${stem}_w${i}.wobt`;
    const bname = `${stem}_b${i}.wobt`;
    writeTensor(path.join(base, wname), {
      dims: [layer.inDim, layer.outDim],
      data: layer.weights,
    });
    writeTensor(path.join(base, bname), { dims: [layer.outDim], data: layer.bias });
    return { weights_path: wname, bias_path: bname, activation: layer.activation };
  });
  fs.writeFileSync(manifestPath, JSON.stringify({ layers: entries }, null, 2) + '\n');
}

/** Softmax probabilities for one input (computed in float64). */
export function forward(model: Model, x: ArrayLike<number>): Float64Array {
  let cur = Float64Array.from(x as number[]);
  for (const layer of model.layers) {
    if (cur.length !== layer.inDim) {
      throw new Error(`input has ${cur.length} dims, layer expects ${layer.inDim}`);
    }
    const out = new Float64Array(layer.outDim);
    for (let j = 0; j < layer.outDim; j++) {
      let acc = layer.bias[j];
      for (let i = 0; i < layer.inDim; i++) {
        acc += cur[i] * layer.weights[i * layer.outDim + j];
      }
      out[j] = layer.activation === 'relu' ? Math.max(acc, 0) : acc;
    }
    cur = out;
  }
  let max = -Infinity;
  for (const v of cur) max = Math.max(max, v);
  let sum = 0;
  const probs = new Float64Array(cur.length);
  for (let j = 0; j < cur.length; j++) {
    probs[j] = Math.exp(cur[j] - max);
    sum += probs[j];
  }
  for (let j = 0; j < cur.length; j++) probs[j] /= sum;
  return probs;
}

/** Index of the largest value; ties break to the lowest index. */
export function argmax(v: ArrayLike<number>): number {
  let best = 0;
  for (let i = 1; i < v.length; i++) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

export function classify(model: Model, x: ArrayLike<number>): number {
  return argmax(forward(model, x));
}
