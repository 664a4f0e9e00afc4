#!/usr/bin/env node
/**
 * wobble-bridge CLI.
 *
 *   cli.js train --dataset ds.json --out model.json [--trigger t.json
 *          --target-class 0 (--fraction 0.15 | --count 250)]
 *          [--epochs 80] [--hidden 32] [--lr 0.1] [--batch 64] [--seed 0]
 *   cli.js serve --model model.json [--http PORT] [--max-batch 256] [--no-probs]
 */
import { parseArgs } from 'node:util';

import { loadDataset, loadTrigger } from './data.js';
import { loadModel } from './model.js';
import { serveHttp, serveStdio } from './serve.js';
import { PoisonSpec, trainToy, writeTrainOutputs } from './train.js';

function trainCommand(argv: string[]): number {
  const { values } = parseArgs({
    args: argv,
    options: {
      dataset: { type: 'string' },
      out: { type: 'string' },
      trigger: { type: 'string' },
      'target-class': { type: 'string' },
      fraction: { type: 'string' },
      count: { type: 'string' },
      epochs: { type: 'string', default: '80' },
      hidden: { type: 'string', default: '32' },
      lr: { type: 'string', default: '0.1' },
      batch: { type: 'string', default: '64' },
      seed: { type: 'string', default: '0' },
    },
  });
  if (!values.dataset || !values.out) {
    throw new UsageError('train requires --dataset and --out');
  }
  const ds = loadDataset(values.dataset);
  let poison: PoisonSpec | undefined;
  if (values.trigger) {
    const trigger = loadTrigger(values.trigger);
    const target = values['target-class'] !== undefined
      ? Number(values['target-class'])
      : trigger.targetClass;
    if (target === null || !Number.isInteger(target)) {
      throw new UsageError('poisoning requires --target-class (or a trigger with one)');
    }
    if (values.fraction === undefined && values.count === undefined) {
      throw new UsageError('poisoning requires --fraction or --count');
    }
    poison = {
      trigger,
      triggerPath: values.trigger,
      targetClass: target,
      ...(values.fraction !== undefined ? { fraction: Number(values.fraction) } : {}),
      ...(values.count !== undefined ? { count: Number(values.count) } : {}),
    };
  }
  const report = trainToy(ds, {
    epochs: Number(values.epochs),
    hidden: Number(values.hidden),
    learningRate: Number(values.lr),
    batchSize: Number(values.batch),
    seed: Number(values.seed),
    poison,
  });
  writeTrainOutputs(report, values.out);
  const meta = report.metadata;
  console.error(
    `trained ${values.out}: benign_acc=${meta.benign_acc.toFixed(3)}` +
      (meta.trigger_acc !== null
        ? ` trigger_acc=${meta.trigger_acc.toFixed(3)}${meta.trigger_acc_ok ? '' : ' (below floor)'}`
        : ''),
  );
  return 0;
}

function serveCommand(argv: string[]): number {
  const { values } = parseArgs({
    args: argv,
    options: {
      model: { type: 'string' },
      http: { type: 'string' },
      'max-batch': { type: 'string', default: '256' },
      'no-probs': { type: 'boolean', default: false },
    },
  });
  if (!values.model) {
    throw new UsageError('serve requires --model');
  }
  const cfg = {
    model: loadModel(values.model),
    transport: values.http !== undefined ? ('http' as const) : ('stdio' as const),
    port: values.http !== undefined ? Number(values.http) : undefined,
    maxBatch: Number(values['max-batch']),
    emitProbs: !values['no-probs'],
  };
  if (cfg.transport === 'http') {
    const server = serveHttp(cfg);
    server.on('listening', () => {
      const addr = server.address();
      if (addr && typeof addr === 'object') {
        console.error(`listening on http://127.0.0.1:${addr.port}`);
      }
    });
  } else {
    serveStdio(cfg);
  }
  return 0;
}

class UsageError extends Error {}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    if (command === 'train') return trainCommand(rest);
    if (command === 'serve') return serveCommand(rest);
    throw new UsageError(`unknown command ${JSON.stringify(command ?? '')}; use train or serve`);
  } catch (err) {
    if (err instanceof UsageError || (err as Error)?.name === 'TypeError') {
      console.error(`wobble-bridge: usage error: ${(err as Error).message}`);
      return 1;
    }
    console.error(`wobble-bridge: error: ${(err as Error).message}`);
    return 2;
  }
}

const exitCode = main(process.argv.slice(2));
if (exitCode !== 0) {
  process.exit(exitCode);
}
