/**
 * Block-cube geometry and the regularized linear projection on tensors.
 *
 * Conventions match the codec: blocks are numbered row-major over the grid
 * (block i = r * cols + c), the cube axis order is [N, bh, bw], and the
 * projection divides the measurement residual by (coverage + eta) before
 * spreading it back through the mask.
 */
import * as tf from '@tensorflow/tfjs';
import type { MaskFile, MeasurementFile } from './container.js';
import { generateMaskBits } from './maskgen.js';

export interface OperatorTensors {
  /** [N, bh, bw] binary mask blocks. */
  maskCube: tf.Tensor3D;
  /** [bh, bw] per-position coverage counts (Gram diagonal). */
  gram: tf.Tensor2D;
  n: number;
  blockHeight: number;
  blockWidth: number;
}

/** Cut a row-major [H, W] array into the [N, bh, bw] cube. */
export function splitBlocks(
  data: Float32Array | Uint8Array,
  height: number,
  width: number,
  rows: number,
  cols: number,
): Float32Array {
  const bh = height / rows;
  const bw = width / cols;
  if (!Number.isInteger(bh) || !Number.isInteger(bw)) {
    throw new Error(`grid ${rows}x${cols} does not divide ${height}x${width}`);
  }
  const out = new Float32Array(rows * cols * bh * bw);
  for (let r = 0; r < rows; r++) {
    for (let c = 0; c < cols; c++) {
      const block = (r * cols + c) * bh * bw;
      for (let y = 0; y < bh; y++) {
        for (let x = 0; x < bw; x++) {
          out[block + y * bw + x] = data[(r * bh + y) * width + (c * bw + x)];
        }
      }
    }
  }
  return out;
}

/** Reassemble the [N, bh, bw] cube into the full [H, W] image. */
export function mergeBlocks(
  cube: Float32Array,
  bh: number,
  bw: number,
  rows: number,
  cols: number,
): Float32Array {
  const width = cols * bw;
  const out = new Float32Array(rows * bh * width);
  for (let r = 0; r < rows; r++) {
    for (let c = 0; c < cols; c++) {
      const block = (r * cols + c) * bh * bw;
      for (let y = 0; y < bh; y++) {
        for (let x = 0; x < bw; x++) {
          out[(r * bh + y) * width + (c * bw + x)] = cube[block + y * bw + x];
        }
      }
    }
  }
  return out;
}

/** Zero-pad a [h, w] bitmap on the bottom/right to [ph, pw]. */
export function padBits(
  bits: Uint8Array, h: number, w: number, ph: number, pw: number,
): Uint8Array {
  if (ph === h && pw === w) return bits;
  const out = new Uint8Array(ph * pw);
  for (let r = 0; r < h; r++) out.set(bits.subarray(r * w, r * w + w), r * pw);
  return out;
}

/** Resolve the mask a measurement decodes with and build the operator tensors. */
export function operatorFromFiles(m: MeasurementFile, maskFile?: MaskFile): OperatorTensors {
  let bits: Uint8Array;
  if (maskFile) {
    bits = maskFile.bits;
  } else if (m.embeddedBits) {
    bits = m.embeddedBits;
  } else {
    bits = generateMaskBits(m.originalHeight, m.originalWidth, m.maskDensity, m.maskSeed);
  }
  const ph = m.blockHeight * m.gridRows;
  const pw = m.blockWidth * m.gridCols;
  const padded = padBits(bits, m.originalHeight, m.originalWidth, ph, pw);
  const cube = splitBlocks(padded, ph, pw, m.gridRows, m.gridCols);
  const n = m.gridRows * m.gridCols;
  const maskCube = tf.tensor3d(cube, [n, m.blockHeight, m.blockWidth]);
  const gram = tf.sum(maskCube, 0) as tf.Tensor2D;
  return { maskCube, gram, n, blockHeight: m.blockHeight, blockWidth: m.blockWidth };
}

/** Forward map: sum of masked blocks. x: [B, N, bh, bw] -> [B, bh, bw]. */
export function forward(op: OperatorTensors, x: tf.Tensor4D): tf.Tensor3D {
  return tf.sum(tf.mul(x, op.maskCube.expandDims(0)), 1) as tf.Tensor3D;
}

/**
 * Regularized data-consistency step:
 * v_i = x_i + M_i * (y - forward(x)) / (gram + eta).
 * x: [B, N, bh, bw], y: [B, bh, bw], eta: nonnegative scalar tensor.
 */
export function projectionStep(
  op: OperatorTensors, x: tf.Tensor4D, y: tf.Tensor3D, eta: tf.Tensor,
): tf.Tensor4D {
  const residual = tf.sub(y, forward(op, x)); // [B, bh, bw]
  const scaled = tf.div(residual, tf.add(op.gram, eta)); // broadcast [bh, bw]
  return tf.add(x, tf.mul(op.maskCube.expandDims(0), scaled.expandDims(1))) as tf.Tensor4D;
}

/** Coverage-normalized adjoint init: x0_i = M_i * y / max(gram, 1). */
export function initEstimate(op: OperatorTensors, y: tf.Tensor3D): tf.Tensor4D {
  const scaled = tf.div(y, tf.maximum(op.gram, 1));
  return tf.mul(op.maskCube.expandDims(0), scaled.expandDims(1)) as tf.Tensor4D;
}
