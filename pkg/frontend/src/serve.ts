/**
 * Serve a model over the oracle wire protocol.
 *
 * stdio: one handshake line {"hello":{"classes","input_dim","probs"}}, then
 * newline-delimited requests {"id","inputs"} answered in order by
 * {"id","labels"[,"probs"]}. Malformed requests get {"id","error"} and the
 * process keeps serving.
 *
 * http: GET /hello returns the handshake object, POST /classify takes the
 * same request body as a stdio line.
 */
import http from 'node:http';
import readline from 'node:readline';

import { Model, argmax, classCount, forward, inputDim } from './model.js';

export interface ServeConfig {
  model: Model;
  transport: 'stdio' | 'http';
  port?: number;
  maxBatch?: number;
  emitProbs?: boolean;
}

interface OkResponse {
  id: number;
  labels: number[];
  probs?: number[][];
}

interface ErrResponse {
  id: number | null;
  error: string;
}

export function handshake(cfg: ServeConfig): object {
  return {
    hello: {
      classes: classCount(cfg.model),
      input_dim: inputDim(cfg.model),
      probs: cfg.emitProbs !== false,
    },
  };
}

export function handleRequest(cfg: ServeConfig, line: string): OkResponse | ErrResponse {
  let req: any;
  try {
    req = JSON.parse(line);
  } catch {
    return { id: null, error: 'request is not valid JSON' };
  }
  const id = typeof req?.id === 'number' ? req.id : null;
  if (id === null || !Number.isInteger(req.id) || req.id < 0) {
    return { id, error: 'request needs an unsigned integer "id"' };
  }
  if (!Array.isArray(req.inputs) || req.inputs.length === 0) {
    return { id, error: '"inputs" must be a non-empty array of points' };
  }
  const maxBatch = cfg.maxBatch ?? 256;
  if (req.inputs.length > maxBatch) {
    return { id, error: `batch of ${req.inputs.length} exceeds limit ${maxBatch}` };
  }
  const d = inputDim(cfg.model);
  const labels: number[] = [];
  const probs: number[][] = [];
  for (const point of req.inputs) {
    if (
      !Array.isArray(point) ||
      point.length !== d ||
      point.some((v: unknown) => typeof v !== 'number' || !Number.isFinite(v))
    ) {
      return { id, error: `each point must be ${d} finite numbers` };
    }
    const out = forward(cfg.model, point);
    labels.push(argmax(out));
    if (cfg.emitProbs !== false) probs.push(Array.from(out));
  }
  const response: OkResponse = { id, labels };
  if (cfg.emitProbs !== false) response.probs = probs;
  return response;
}

export function serveStdio(cfg: ServeConfig): void {
  process.stdout.write(JSON.stringify(handshake(cfg)) + '\n');
  const rl = readline.createInterface({ input: process.stdin, terminal: false });
  rl.on('line', (line) => {
    if (line.trim() === '') return;
    process.stdout.write(JSON.stringify(handleRequest(cfg, line)) + '\n');
  });
  rl.on('close', () => process.exit(0));
}

export function serveHttp(cfg: ServeConfig): http.Server {
  const server = http.createServer((req, res) => {
    const send = (status: number, obj: object) => {
      const body = JSON.stringify(obj);
      res.writeHead(status, {
        'Content-Type': 'application/json',
        'Content-Length': Buffer.byteLength(body),
      });
      res.end(body);
    };
    if (req.method === 'GET' && req.url === '/hello') {
      send(200, handshake(cfg));
      return;
    }
    if (req.method === 'POST' && req.url === '/classify') {
      let body = '';
      req.on('data', (chunk) => (body += chunk));
      req.on('end', () => send(200, handleRequest(cfg, body)));
      return;
    }
    send(404, { id: null, error: `no route ${req.method} ${req.url}` });
  });
  server.listen(cfg.port ?? 0);
  return server;
}
