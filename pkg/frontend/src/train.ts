/**
 * Desk-scale trainer: a single-hidden-layer ReLU softmax classifier fit with
 * minibatch SGD on cross-entropy, with optional backdoor poisoning (a chosen
 * count or fraction of training points gets the trigger applied and the label
 * forced to its target class). Emits the model in the shared manifest format
 * plus a metadata JSON recording the poison ground truth and accuracies.
 */
import fs from 'node:fs';

import { Dataset, Trigger, applyTriggerRow } from './data.js';
import { Layer, Model, classify, saveModel } from './model.js';
import { Rng } from './rng.js';

export interface PoisonSpec {
  trigger: Trigger;
  triggerPath: string;
  targetClass: number;
  count?: number;
  fraction?: number;
}

export interface TrainOptions {
  epochs?: number;
  hidden?: number;
  learningRate?: number;
  batchSize?: number;
  seed?: number;
  /** Fraction of the dataset held out for accuracy reporting. */
  holdout?: number;
  poison?: PoisonSpec;
}

export interface TrainReport {
  model: Model;
  metadata: {
    poisoned: boolean;
    trigger?: string;
    target_class?: number;
    benign_acc: number;
    trigger_acc: number | null;
    trigger_acc_ok: boolean | null;
    seed: number;
  };
}

const TRIGGER_ACC_FLOOR = 0.95;

function poisonCount(spec: PoisonSpec, nTrain: number): number {
  if (spec.count !== undefined) {
    if (spec.count < 0 || spec.count > nTrain) {
      throw new Error(`poison count ${spec.count} outside [0, ${nTrain}]`);
    }
    return spec.count;
  }
  if (spec.fraction !== undefined) {
    if (spec.fraction <= 0 || spec.fraction >= 1) {
      throw new Error(`poison fraction ${spec.fraction} outside (0, 1)`);
    }
    return Math.round(spec.fraction * nTrain);
  }
  throw new Error('poison spec needs a count or a fraction');
}

export function trainToy(ds: Dataset, opts: TrainOptions = {}): TrainReport {
  const epochs = opts.epochs ?? 80;
  const hidden = opts.hidden ?? 32;
  const lr = opts.learningRate ?? 0.1;
  const batchSize = opts.batchSize ?? 64;
  const seed = opts.seed ?? 0;
  const holdout = opts.holdout ?? 0.2;
  const rng = new Rng(seed);

  if (opts.poison) {
    if (opts.poison.trigger.mask.length !== ds.dim) {
      throw new Error(
        `trigger dim ${opts.poison.trigger.mask.length} != dataset dim ${ds.dim}`,
      );
    }
    const target = opts.poison.targetClass;
    if (target < 0 || target >= ds.classes) {
      throw new Error(`target class ${target} outside [0, ${ds.classes})`);
    }
  }

  // shuffled split: the tail is the held-out evaluation set
  const order = new Int32Array(ds.n);
  for (let i = 0; i < ds.n; i++) order[i] = i;
  rng.shuffle(order);
  const nEval = Math.max(1, Math.round(holdout * ds.n));
  const nTrain = ds.n - nEval;

  const X = new Float64Array(nTrain * ds.dim);
  const y = new Int32Array(nTrain);
  for (let r = 0; r < nTrain; r++) {
    const src = order[r];
    for (let i = 0; i < ds.dim; i++) X[r * ds.dim + i] = ds.inputs[src * ds.dim + i];
    y[r] = ds.labels[src];
  }

  if (opts.poison) {
    const nPoison = poisonCount(opts.poison, nTrain);
    const pick = new Int32Array(nTrain);
    for (let i = 0; i < nTrain; i++) pick[i] = i;
    rng.shuffle(pick);
    for (let p = 0; p < nPoison; p++) {
      applyTriggerRow(X, pick[p] * ds.dim, opts.poison.trigger);
      y[pick[p]] = opts.poison.targetClass;
    }
  }

  // He-initialized single hidden layer
  const d = ds.dim;
  const k = ds.classes;
  const W1 = new Float64Array(d * hidden);
  const b1 = new Float64Array(hidden);
  const W2 = new Float64Array(hidden * k);
  const b2 = new Float64Array(k);
  for (let i = 0; i < W1.length; i++) W1[i] = rng.normal() * Math.sqrt(2 / d);
  for (let i = 0; i < W2.length; i++) W2[i] = rng.normal() * Math.sqrt(2 / hidden);

  const perm = new Int32Array(nTrain);
  for (let i = 0; i < nTrain; i++) perm[i] = i;
  const h = new Float64Array(hidden);
  const p = new Float64Array(k);
  const gh = new Float64Array(hidden);

  for (let ep = 0; ep < epochs; ep++) {
    rng.shuffle(perm);
    for (let start = 0; start < nTrain; start += batchSize) {
      const end = Math.min(start + batchSize, nTrain);
      const bs = end - start;
      // accumulate gradients over the minibatch
      const gW1 = new Float64Array(d * hidden);
      const gb1 = new Float64Array(hidden);
      const gW2 = new Float64Array(hidden * k);
      const gb2 = new Float64Array(k);
      for (let r = start; r < end; r++) {
        const row = perm[r] * d;
        for (let j = 0; j < hidden; j++) {
          let acc = b1[j];
          for (let i = 0; i < d; i++) acc += X[row + i] * W1[i * hidden + j];
          h[j] = acc > 0 ? acc : 0;
        }
        let max = -Infinity;
        for (let c = 0; c < k; c++) {
          let acc = b2[c];
          for (let j = 0; j < hidden; j++) acc += h[j] * W2[j * k + c];
          p[c] = acc;
          if (acc > max) max = acc;
        }
        let sum = 0;
        for (let c = 0; c < k; c++) {
          p[c] = Math.exp(p[c] - max);
          sum += p[c];
        }
        for (let c = 0; c < k; c++) p[c] /= sum;
        p[y[perm[r]]] -= 1; // dL/dlogits for cross-entropy
        for (let j = 0; j < hidden; j++) {
          let acc = 0;
          for (let c = 0; c < k; c++) {
            gW2[j * k + c] += h[j] * p[c];
            acc += W2[j * k + c] * p[c];
          }
          gh[j] = h[j] > 0 ? acc : 0;
        }
        for (let c = 0; c < k; c++) gb2[c] += p[c];
        for (let i = 0; i < d; i++) {
          const xv = X[row + i];
          for (let j = 0; j < hidden; j++) gW1[i * hidden + j] += xv * gh[j];
        }
        for (let j = 0; j < hidden; j++) gb1[j] += gh[j];
      }
      const scale = lr / bs;
      for (let i = 0; i < W1.length; i++) W1[i] -= scale * gW1[i];
      for (let i = 0; i < b1.length; i++) b1[i] -= scale * gb1[i];
      for (let i = 0; i < W2.length; i++) W2[i] -= scale * gW2[i];
      for (let i = 0; i < b2.length; i++) b2[i] -= scale * gb2[i];
    }
  }

  const layers: Layer[] = [
    {
      weights: Float32Array.from(W1),
      inDim: d,
      outDim: hidden,
      bias: Float32Array.from(b1),
      activation: 'relu',
    },
    {
      weights: Float32Array.from(W2),
      inDim: hidden,
      outDim: k,
      bias: Float32Array.from(b2),
      activation: 'none',
    },
  ];
  const model: Model = { layers };

  // held-out accuracies
  let benignHits = 0;
  let triggerHits = 0;
  const row = new Float64Array(d);
  for (let r = nTrain; r < ds.n; r++) {
    const src = order[r];
    for (let i = 0; i < d; i++) row[i] = ds.inputs[src * d + i];
    if (classify(model, row) === ds.labels[src]) benignHits++;
    if (opts.poison) {
      applyTriggerRow(row, 0, opts.poison.trigger);
      if (classify(model, row) === opts.poison.targetClass) triggerHits++;
    }
  }
  const benignAcc = benignHits / nEval;
  const triggerAcc = opts.poison ? triggerHits / nEval : null;
  return {
    model,
    metadata: {
      poisoned: Boolean(opts.poison),
      ...(opts.poison
        ? { trigger: opts.poison.triggerPath, target_class: opts.poison.targetClass }
        : {}),
      benign_acc: benignAcc,
      trigger_acc: triggerAcc,
      trigger_acc_ok: triggerAcc === null ? null : triggerAcc >= TRIGGER_ACC_FLOOR,
      seed,
    },
  };
}

export function writeTrainOutputs(report: TrainReport, modelPath: string): void {
  saveModel(report.model, modelPath);
  const metaPath = modelPath.replace(/\.json$/, '') + '.meta.json';
  fs.writeFileSync(metaPath, JSON.stringify(report.metadata, null, 2) + '\n');
}
