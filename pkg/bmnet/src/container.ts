/**
 * Readers/writers for the codec's interchange files.
 *
 * Layouts mirror docs/FORMATS.md of the main package: little-endian BMIM
 * (40-byte header) and BMIK (28-byte header) containers, packed MSB-first
 * row-padded bitmaps, and raw float32 images with a `height width` text
 * sidecar. This package talks to the codec exclusively through these files.
 */
import { readFileSync, writeFileSync } from 'node:fs';

export interface MaskFile {
  height: number;
  width: number;
  prngId: number;
  seed: bigint;
  density: number;
  bits: Uint8Array; // row-major 0/1, height*width entries
}

export interface MeasurementFile {
  originalHeight: number;
  originalWidth: number;
  gridRows: number;
  gridCols: number;
  blockHeight: number;
  blockWidth: number;
  maskSeed: bigint;
  maskDensity: number;
  padded: boolean;
  embeddedBits: Uint8Array | null; // original-shape mask when embedded
  data: Float32Array; // blockHeight x blockWidth row-major
}

const MEASUREMENT_MAGIC = 0x4d494d42; // "BMIM" little-endian
const MASK_MAGIC = 0x4b494d42; // "BMIK"

function unpackBits(buf: Buffer, offset: number, h: number, w: number): Uint8Array {
  const rowBytes = Math.ceil(w / 8);
  if (offset + rowBytes * h > buf.length) {
    throw new Error(`mask bits truncated at byte ${buf.length}`);
  }
  const bits = new Uint8Array(h * w);
  for (let r = 0; r < h; r++) {
    const rowStart = offset + r * rowBytes;
    for (let c = 0; c < w; c++) {
      const byte = buf[rowStart + (c >> 3)];
      bits[r * w + c] = (byte >> (7 - (c & 7))) & 1;
    }
  }
  return bits;
}

export function readMask(path: string): MaskFile {
  const buf = readFileSync(path);
  if (buf.length < 28) throw new Error(`mask header truncated: ${buf.length} bytes`);
  if (buf.readUInt32LE(0) !== MASK_MAGIC) throw new Error('bad BMIK magic');
  const version = buf.readUInt16LE(4);
  if (version !== 1) throw new Error(`unsupported BMIK version ${version}`);
  const height = buf.readUInt32LE(6);
  const width = buf.readUInt32LE(10);
  const prngId = buf.readUInt16LE(14);
  const seed = buf.readBigUInt64LE(16);
  const density = buf.readFloatLE(24);
  return { height, width, prngId, seed, density, bits: unpackBits(buf, 28, height, width) };
}

export function readMeasurement(path: string): MeasurementFile {
  const buf = readFileSync(path);
  if (buf.length < 40) throw new Error(`measurement header truncated: ${buf.length} bytes`);
  if (buf.readUInt32LE(0) !== MEASUREMENT_MAGIC) throw new Error('bad BMIM magic');
  const version = buf.readUInt16LE(4);
  if (version !== 1) throw new Error(`unsupported BMIM version ${version}`);
  const flags = buf.readUInt16LE(6);
  const originalHeight = buf.readUInt32LE(8);
  const originalWidth = buf.readUInt32LE(12);
  const gridRows = buf.readUInt16LE(16);
  const gridCols = buf.readUInt16LE(18);
  const blockHeight = buf.readUInt32LE(20);
  const blockWidth = buf.readUInt32LE(24);
  const maskSeed = buf.readBigUInt64LE(28);
  const maskDensity = buf.readFloatLE(36);

  const payloadBytes = blockHeight * blockWidth * 4;
  if (40 + payloadBytes > buf.length) {
    throw new Error(`measurement payload truncated at byte ${buf.length}`);
  }
  const data = new Float32Array(blockHeight * blockWidth);
  for (let i = 0; i < data.length; i++) data[i] = buf.readFloatLE(40 + i * 4);

  const embedded = (flags & 1) !== 0;
  return {
    originalHeight,
    originalWidth,
    gridRows,
    gridCols,
    blockHeight,
    blockWidth,
    maskSeed,
    maskDensity,
    padded: (flags & 2) !== 0,
    embeddedBits: embedded
      ? unpackBits(buf, 40 + payloadBytes, originalHeight, originalWidth)
      : null,
    data,
  };
}

export function readRawFloat(
  path: string,
  opts: { checkRange?: boolean } = {},
): { height: number; width: number; data: Float32Array } {
  const dims = readFileSync(path + '.dims', 'utf8').trim().split(/\s+/).map(Number);
  if (dims.length !== 2 || dims.some((d) => !Number.isInteger(d) || d <= 0)) {
    throw new Error(`bad dims sidecar for ${path}`);
  }
  const [height, width] = dims;
  const buf = readFileSync(path);
  if (buf.length !== height * width * 4) {
    throw new Error(`raw payload is ${buf.length} bytes, want ${height * width * 4}`);
  }
  const data = new Float32Array(height * width);
  for (let i = 0; i < data.length; i++) data[i] = buf.readFloatLE(i * 4);
  if (opts.checkRange) {
    for (let i = 0; i < data.length; i++) {
      if (!Number.isFinite(data[i]) || data[i] < 0 || data[i] > 1) {
        throw new Error(`sample ${data[i]} at index ${i} outside [0, 1]`);
      }
    }
  }
  return { height, width, data };
}

/** Write an image as raw float32 + dims sidecar, clamped to [0, 1]. */
export function writeRawFloat(path: string, data: Float32Array, height: number, width: number): void {
  const buf = Buffer.alloc(height * width * 4);
  for (let i = 0; i < data.length; i++) {
    const v = Math.min(1, Math.max(0, data[i]));
    buf.writeFloatLE(v, i * 4);
  }
  writeFileSync(path, buf);
  writeFileSync(path + '.dims', `${height} ${width}\n`);
}
