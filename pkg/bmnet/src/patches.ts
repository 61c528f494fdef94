/**
 * Deterministic synthetic patches for toy training: smooth blends of low
 * frequency waves and gradients, values in [0, 1]. Patch i is a pure
 * function of (i, size).
 */
import * as tf from '@tensorflow/tfjs';

export function smoothPatch(index: number, size: number): Float32Array {
  const a = 0.5 + 0.5 * Math.sin(index * 1.7 + 0.3);
  const b = 0.5 + 0.5 * Math.cos(index * 0.9 + 1.1);
  const fx = 1 + (index % 3);
  const fy = 1 + ((index + 1) % 2);
  const phase = index * 0.77;
  const out = new Float32Array(size * size);
  for (let r = 0; r < size; r++) {
    for (let c = 0; c < size; c++) {
      const u = c / (size - 1);
      const v = r / (size - 1);
      const wave = Math.sin(2 * Math.PI * (fx * u + fy * v) / 2 + phase);
      const radial = Math.cos(Math.PI * ((u - a) ** 2 + (v - b) ** 2));
      const grad = 0.5 * (u + v);
      const value = 0.5 + 0.18 * wave + 0.15 * radial + 0.15 * (grad - 0.5);
      out[r * size + c] = Math.min(1, Math.max(0, value));
    }
  }
  return out;
}

export function patchBatch(indices: number[], size: number): tf.Tensor3D {
  const data = new Float32Array(indices.length * size * size);
  indices.forEach((idx, i) => data.set(smoothPatch(idx, size), i * size * size));
  return tf.tensor3d(data, [indices.length, size, size]);
}
