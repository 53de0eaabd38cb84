/**
 * Minimal NPY v1.0 reader/writer for the noise exchange format:
 * little-endian float32, C-order, shape (C, H, W).
 */

const MAGIC = Buffer.from('\x93NUMPY', 'latin1');

export interface NpyArray {
  shape: number[];
  data: Float32Array;
}

export function readNpy(buffer: Buffer): NpyArray {
  if (buffer.length < 10 || !buffer.subarray(0, 6).equals(MAGIC)) {
    throw new Error('not an NPY file');
  }
  const major = buffer[6];
  const minor = buffer[7];
  if (major !== 1 || minor !== 0) {
    throw new Error(`unsupported NPY version ${major}.${minor}`);
  }
  const headerLen = buffer.readUInt16LE(8);
  const header = buffer.subarray(10, 10 + headerLen).toString('latin1');

  const descr = /'descr'\s*:\s*'([^']+)'/.exec(header)?.[1];
  if (descr !== '<f4') {
    throw new Error(`expected little-endian float32 ('<f4'), got ${descr}`);
  }
  const fortran = /'fortran_order'\s*:\s*(True|False)/.exec(header)?.[1];
  if (fortran !== 'False') {
    throw new Error('expected C-order data');
  }
  const shapeText = /'shape'\s*:\s*\(([^)]*)\)/.exec(header)?.[1];
  if (shapeText === undefined) {
    throw new Error('NPY header has no shape');
  }
  const shape = shapeText
    .split(',')
    .map((s) => s.trim())
    .filter((s) => s.length > 0)
    .map((s) => Number.parseInt(s, 10));

  const count = shape.reduce((a, b) => a * b, 1);
  const body = buffer.subarray(10 + headerLen);
  if (body.length < count * 4) {
    throw new Error(`NPY data truncated: need ${count * 4} bytes, have ${body.length}`);
  }
  const data = new Float32Array(count);
  for (let i = 0; i < count; i++) {
    data[i] = body.readFloatLE(i * 4);
  }
  return { shape, data };
}

export function writeNpy(array: NpyArray): Buffer {
  const shapeText =
    array.shape.length === 1 ? `(${array.shape[0]},)` : `(${array.shape.join(', ')})`;
  let header = `{'descr': '<f4', 'fortran_order': False, 'shape': ${shapeText}, }`;
  // header (incl. 10-byte preamble) padded to a multiple of 64, newline-terminated
  const unpadded = 10 + header.length + 1;
  header = header + ' '.repeat((64 - (unpadded % 64)) % 64) + '\n';

  const head = Buffer.alloc(10 + header.length);
  MAGIC.copy(head, 0);
  head[6] = 1;
  head[7] = 0;
  head.writeUInt16LE(header.length, 8);
  head.write(header, 10, 'latin1');

  const body = Buffer.alloc(array.data.length * 4);
  for (let i = 0; i < array.data.length; i++) {
    body.writeFloatLE(array.data[i], i * 4);
  }
  return Buffer.concat([head, body]);
}
