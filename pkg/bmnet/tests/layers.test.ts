import { describe, expect, it } from 'vitest';
import * as tf from '@tensorflow/tfjs';
import { conv3d } from '../src/fastconv';
import { GatedConv3d, ParamStore, Twca, transposedAttention } from '../src/layers';

describe('transposed attention', () => {
  it('softmax rows sum to 1 within 1e-5', () => {
    const q = tf.randomNormal([2, 12, 4], 0, 1, 'float32', 1) as tf.Tensor3D;
    const k = tf.randomNormal([2, 4, 12], 0, 1, 'float32', 2) as tf.Tensor3D;
    const v = tf.randomNormal([2, 12, 4], 0, 1, 'float32', 3) as tf.Tensor3D;
    const { weights } = transposedAttention(q, k, v);
    const rowSums = tf.sum(weights, -1).dataSync() as Float32Array;
    for (const s of rowSums) expect(Math.abs(s - 1)).toBeLessThanOrEqual(1e-5);
  });

  it('zeroed projections leave the latent unchanged', () => {
    const store = new ParamStore(7);
    const twca = new Twca(store, 't', 4);
    for (const v of store.list) v.assign(tf.zeros(v.shape));
    const u = tf.randomNormal([1, 2, 3, 3, 4], 0, 1, 'float32', 4) as tf.Tensor5D;
    const h = tf.randomNormal([1, 2, 3, 3, 4], 0, 1, 'float32', 5) as tf.Tensor5D;
    const out = twca.apply(u, h);
    // k.q = 0 -> uniform softmax; v-projection is zero, so the residual add is zero
    expect(tf.max(tf.abs(tf.sub(out.u, u))).dataSync()[0]).toBe(0);
    expect(tf.max(tf.abs(tf.sub(out.h, h))).dataSync()[0]).toBe(0);
  });

  it('preserves shapes across channel/volume combinations', () => {
    for (const [c, p, h, w] of [[2, 2, 3, 4], [3, 4, 2, 2], [4, 3, 3, 3]]) {
      const store = new ParamStore(c);
      const twca = new Twca(store, 't', c);
      const u = tf.randomNormal([2, p, h, w, c], 0, 1, 'float32', c) as tf.Tensor5D;
      const hPrev = tf.randomNormal([2, p, h, w, c], 0, 1, 'float32', c + 1) as tf.Tensor5D;
      const out = twca.apply(u, hPrev);
      expect(out.u.shape).toEqual(u.shape);
      expect(out.h.shape).toEqual(u.shape);
    }
  });
});

describe('gated 3D convolution', () => {
  it('zero gate branch halves the feature branch', () => {
    const store = new ParamStore(1);
    const gated = new GatedConv3d(store, 'g', 2, 3);
    // zero the gate half of the fused filter (channels [co, 2co))
    const w = store.vars.get('g/w')!;
    const wFeat = tf.slice(w, [0, 0, 0, 0, 0], [3, 3, 3, 2, 3]);
    w.assign(tf.concat([wFeat, tf.zeros([3, 3, 3, 2, 3])], 4));
    const x = tf.randomNormal([1, 2, 4, 4, 2], 0, 1, 'float32', 6) as tf.Tensor5D;
    const out = gated.apply(x);
    const featOnly = conv3d(x, wFeat as tf.Tensor5D); // feature bias is zero-initialized
    const diff = tf.max(tf.abs(tf.sub(out, tf.mul(featOnly, 0.5)))).dataSync()[0];
    expect(diff).toBeLessThanOrEqual(1e-6);
  });

  it('gate values stay strictly inside (0, 1)', () => {
    const store = new ParamStore(2);
    const gated = new GatedConv3d(store, 'g', 1, 4);
    const x = tf.randomNormal([2, 2, 4, 4, 1], 0, 3, 'float32', 7) as tf.Tensor5D;
    const gates = gated.gateValues(x).dataSync() as Float32Array;
    for (const g of gates) {
      expect(g).toBeGreaterThan(0);
      expect(g).toBeLessThan(1);
    }
  });

  it('zero input with zero biases gives zero output', () => {
    const store = new ParamStore(3);
    const gated = new GatedConv3d(store, 'g', 2, 2);
    const out = gated.apply(tf.zeros([1, 2, 4, 4, 2]) as tf.Tensor5D);
    expect(tf.max(tf.abs(out)).dataSync()[0]).toBe(0);
  });
});
