/**
 * WOBT binary tensor files: 4-byte magic "WOBT", u32 LE version (1),
 * u32 ndim, u32 extents, then the float32 LE payload in C order.
 */
import fs from 'node:fs';

const MAGIC = 'WOBT';
const VERSION = 1;

export interface Tensor {
  dims: number[];
  data: Float32Array;
}

export function encodeTensor(t: Tensor): Buffer {
  if (t.dims.length < 1) {
    throw new Error('tensor must have at least one dimension');
  }
  const count = t.dims.reduce((a, b) => a * b, 1);
  if (t.dims.some((d) => d < 1)) {
    throw new Error(`all extents must be >= 1, got [${t.dims}]`);
  }
  if (count !== t.data.length) {
    throw new Error(`payload has ${t.data.length} elements, dims declare ${count}`);
  }
  const buf = Buffer.alloc(12 + 4 * t.dims.length + 4 * count);
  buf.write(MAGIC, 0, 'ascii');
  buf.writeUInt32LE(VERSION, 4);
  buf.writeUInt32LE(t.dims.length, 8);
  t.dims.forEach((d, i) => buf.writeUInt32LE(d, 12 + 4 * i));
  const payloadOffset = 12 + 4 * t.dims.length;
  for (let i = 0; i < count; i++) {
    buf.writeFloatLE(t.data[i], payloadOffset + 4 * i);
  }
  return buf;
}

export function decodeTensor(buf: Buffer): Tensor {
  if (buf.subarray(0, 4).toString('ascii') !== MAGIC) {
    throw new Error(`bad magic ${JSON.stringify(buf.subarray(0, 4).toString('ascii'))}`);
  }
  if (buf.length < 12) {
    throw new Error('file shorter than fixed header');
  }
  const version = buf.readUInt32LE(4);
  if (version !== VERSION) {
    throw new Error(`unsupported version ${version}`);
  }
  const ndim = buf.readUInt32LE(8);
  if (ndim < 1 || buf.length < 12 + 4 * ndim) {
    throw new Error('file shorter than declared header');
  }
  const dims: number[] = [];
  for (let i = 0; i < ndim; i++) {
    dims.push(buf.readUInt32LE(12 + 4 * i));
  }
  if (dims.some((d) => d < 1)) {
    throw new Error(`all extents must be >= 1, got [${dims}]`);
  }
  const count = dims.reduce((a, b) => a * b, 1);
  const offset = 12 + 4 * ndim;
  if (buf.length - offset !== 4 * count) {
    throw new Error(
      `payload holds ${(buf.length - offset) / 4} elements, header declares ${count}`,
    );
  }
  const data = new Float32Array(count);
  for (let i = 0; i < count; i++) {
    data[i] = buf.readFloatLE(offset + 4 * i);
  }
  return { dims, data };
}

export function writeTensor(path: string, t: Tensor): void {
  fs.writeFileSync(path, encodeTensor(t));
}

export function readTensor(path: string): Tensor {
  return decodeTensor(fs.readFileSync(path));
}
