/**
 * Per-stage 3D U-net: gated-conv encoder with two strided downsamplings, a
 * bottleneck latent (where the cross-attention attaches), and a decoder with
 * nearest-neighbor upsampling, pointwise skip merges, and plain convolutions.
 */
import * as tf from '@tensorflow/tfjs';
import { fusedConv3d, pointwiseConv3d, Stride3 } from './fastconv';
import { GatedConv3d, ParamStore } from './layers';

function downStride(p: number, h: number, w: number): Stride3 {
  return [p > 1 ? 2 : 1, h > 1 ? 2 : 1, w > 1 ? 2 : 1];
}

/** Nearest-neighbor upsampling by integer factors along (P, H, W).
 *
 * Custom op: the concat/tile route costs seconds per step in SplitV
 * gradients on this backend; replicate and sum-pool loops are linear.
 */
export function nnUpsample3d(x: tf.Tensor5D, f: Stride3): tf.Tensor5D {
  if (f[0] === 1 && f[1] === 1 && f[2] === 1) return x;
  const op = tf.customGrad((xi, save) => {
    const xt = xi as tf.Tensor5D;
    (save as tf.GradSaveFunc)([]);
    const [b, p, h, w, c] = xt.shape;
    const [fp, fh, fw] = f;
    const oh = h * fh;
    const ow = w * fw;
    const src = xt.dataSync() as Float32Array;
    const out = new Float32Array(b * p * fp * oh * ow * c);
    for (let bi = 0; bi < b; bi++) {
      for (let pi = 0; pi < p * fp; pi++) {
        const sp = (pi / fp) | 0;
        for (let hi = 0; hi < oh; hi++) {
          const sh = (hi / fh) | 0;
          const srcRow = (((bi * p + sp) * h + sh) * w) * c;
          const dstRow = (((bi * p * fp + pi) * oh + hi) * ow) * c;
          for (let wi = 0; wi < ow; wi++) {
            const sw = (wi / fw) | 0;
            const si = srcRow + sw * c;
            const di = dstRow + wi * c;
            for (let ci = 0; ci < c; ci++) out[di + ci] = src[si + ci];
          }
        }
      }
    }
    const value = tf.tensor(out, [b, p * fp, oh, ow, c]);
    const gradFunc = (dy: tf.Tensor) => {
      const dyv = dy.dataSync() as Float32Array;
      const dx = new Float32Array(b * p * h * w * c);
      for (let bi = 0; bi < b; bi++) {
        for (let pi = 0; pi < p * fp; pi++) {
          const sp = (pi / fp) | 0;
          for (let hi = 0; hi < oh; hi++) {
            const sh = (hi / fh) | 0;
            const dstRow = (((bi * p + sp) * h + sh) * w) * c;
            const srcRow = (((bi * p * fp + pi) * oh + hi) * ow) * c;
            for (let wi = 0; wi < ow; wi++) {
              const sw = (wi / fw) | 0;
              const di = dstRow + sw * c;
              const si = srcRow + wi * c;
              for (let ci = 0; ci < c; ci++) dx[di + ci] += dyv[si + ci];
            }
          }
        }
      }
      return [tf.tensor(dx, [b, p, h, w, c])];
    };
    return { value, gradFunc };
  });
  return op(x) as tf.Tensor5D;
}

export interface EncodedStage {
  e0: tf.Tensor5D;
  e1: tf.Tensor5D;
  u: tf.Tensor5D;
  s1: Stride3;
  s2: Stride3;
}

export class StageUnet {
  private g0: GatedConv3d;
  private g1: GatedConv3d;
  private g2: GatedConv3d;
  // skip merges are split into two added projections: concat's SplitV
  // gradient is a bottleneck kernel on this backend
  private merge1Up: tf.Variable;
  private merge1Skip: tf.Variable;
  private c1: tf.Variable;
  private b1: tf.Variable;
  private merge0Up: tf.Variable;
  private merge0Skip: tf.Variable;
  private c0: tf.Variable;
  private b0: tf.Variable;
  private out: tf.Variable;
  private outB: tf.Variable;

  constructor(store: ParamStore, name: string, dims: [number, number, number]) {
    const [d0, d1, d2] = dims;
    this.g0 = new GatedConv3d(store, `${name}/g0`, 1, d0);
    this.g1 = new GatedConv3d(store, `${name}/g1`, d0, d1);
    this.g2 = new GatedConv3d(store, `${name}/g2`, d1, d2);
    this.merge1Up = store.pointwise(`${name}/merge1_up`, d2, d1);
    this.merge1Skip = store.pointwise(`${name}/merge1_skip`, d1, d1);
    this.c1 = store.heConv3d(`${name}/c1`, 3, 3, 3, d1, d1);
    this.b1 = store.bias(`${name}/c1_b`, d1);
    this.merge0Up = store.pointwise(`${name}/merge0_up`, d1, d0);
    this.merge0Skip = store.pointwise(`${name}/merge0_skip`, d0, d0);
    this.c0 = store.heConv3d(`${name}/c0`, 3, 3, 3, d0, d0);
    this.b0 = store.bias(`${name}/c0_b`, d0);
    this.out = store.pointwise(`${name}/out`, d0, 1, 0.1);
    this.outB = store.bias(`${name}/out_b`, 1);
  }

  encode(v: tf.Tensor5D): EncodedStage {
    const e0 = this.g0.apply(v);
    const s1 = downStride(e0.shape[1], e0.shape[2], e0.shape[3]);
    const e1 = this.g1.apply(e0, s1);
    const s2 = downStride(e1.shape[1], e1.shape[2], e1.shape[3]);
    const u = this.g2.apply(e1, s2);
    return { e0, e1, u, s1, s2 };
  }

  decode(u: tf.Tensor5D, enc: EncodedStage): tf.Tensor5D {
    const up1 = nnUpsample3d(u, enc.s2);
    const m1 = tf.add(
      pointwiseConv3d(up1, this.merge1Up as tf.Tensor2D),
      pointwiseConv3d(enc.e1, this.merge1Skip as tf.Tensor2D),
    ) as tf.Tensor5D;
    const d1 = fusedConv3d(m1, this.c1 as tf.Tensor5D, this.b1 as tf.Tensor1D, [1, 1, 1], 'leaky');
    const up0 = nnUpsample3d(d1, enc.s1);
    const m0 = tf.add(
      pointwiseConv3d(up0, this.merge0Up as tf.Tensor2D),
      pointwiseConv3d(enc.e0, this.merge0Skip as tf.Tensor2D),
    ) as tf.Tensor5D;
    const d0 = fusedConv3d(m0, this.c0 as tf.Tensor5D, this.b0 as tf.Tensor1D, [1, 1, 1], 'leaky');
    return tf.add(pointwiseConv3d(d0, this.out as tf.Tensor2D), this.outB) as tf.Tensor5D;
  }
}
