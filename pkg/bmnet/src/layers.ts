/**
 * Building blocks: parameter store, gated 3D convolution, two-way
 * cross-attention over bottleneck latents.
 */
import * as tf from '@tensorflow/tfjs';
import { conv3d, fusedConv3d, pointwiseConv3d, Stride3 } from './fastconv';

/** Named variable registry with seeded deterministic initialization. */
export class ParamStore {
  readonly vars = new Map<string, tf.Variable>();
  private counter = 0;

  constructor(readonly seed: number) {}

  private nextSeed(): number {
    this.counter += 1;
    return this.seed * 7919 + this.counter;
  }

  weight(name: string, shape: number[], std: number): tf.Variable {
    if (this.vars.has(name)) throw new Error(`duplicate parameter ${name}`);
    const init = std === 0
      ? tf.zeros(shape)
      : tf.randomNormal(shape, 0, std, 'float32', this.nextSeed());
    // tfjs variable names are engine-global; let it pick unique ones and key
    // the store by the logical name instead
    const v = tf.variable(init, true);
    this.vars.set(name, v);
    return v;
  }

  heConv3d(name: string, kd: number, kh: number, kw: number, ci: number, co: number): tf.Variable {
    const std = Math.sqrt(2 / (kd * kh * kw * ci));
    return this.weight(name, [kd, kh, kw, ci, co], std);
  }

  pointwise(name: string, ci: number, co: number, std?: number): tf.Variable {
    return this.weight(name, [ci, co], std ?? Math.sqrt(2 / ci));
  }

  bias(name: string, co: number): tf.Variable {
    return this.weight(name, [co], 0);
  }

  scalar(name: string, value: number): tf.Variable {
    if (this.vars.has(name)) throw new Error(`duplicate parameter ${name}`);
    const v = tf.variable(tf.scalar(value), true);
    this.vars.set(name, v);
    return v;
  }

  get list(): tf.Variable[] {
    return [...this.vars.values()];
  }
}

/**
 * Gated 3D convolution: feature branch modulated elementwise by a learned
 * sigmoid gate branch. Both branches live in one filter (channels [0, co)
 * feed the features, [co, 2co) the gate) so the fused op walks the input
 * once and lands on the tape as a single node.
 */
export class GatedConv3d {
  readonly w: tf.Variable;
  readonly b: tf.Variable;
  readonly co: number;

  constructor(
    store: ParamStore, name: string, ci: number, co: number,
    readonly kernel: [number, number, number] = [3, 3, 3],
  ) {
    const [kd, kh, kw] = this.kernel;
    this.co = co;
    this.w = store.heConv3d(`${name}/w`, kd, kh, kw, ci, 2 * co);
    this.b = store.bias(`${name}/b`, 2 * co);
  }

  apply(x: tf.Tensor5D, strides: Stride3 = [1, 1, 1]): tf.Tensor5D {
    return fusedConv3d(x, this.w as tf.Tensor5D, this.b as tf.Tensor1D, strides, 'gated');
  }

  /** Gate activations alone, for range checks. */
  gateValues(x: tf.Tensor5D, strides: Stride3 = [1, 1, 1]): tf.Tensor5D {
    const [kd, kh, kw, ci] = (this.w as tf.Tensor5D).shape;
    const wGate = tf.slice(this.w, [0, 0, 0, 0, this.co], [kd, kh, kw, ci, this.co]);
    const bGate = tf.slice(this.b, [this.co], [this.co]);
    return tf.sigmoid(tf.add(conv3d(x, wGate as tf.Tensor5D, strides), bGate)) as tf.Tensor5D;
  }
}

/**
 * Channel-transposed attention: q [B, PHW, C], k [B, C, PHW], v [B, PHW, C];
 * the C x C matrix softmax(k . q) mixes channels, rows summing to 1.
 */
export function transposedAttention(
  q: tf.Tensor3D, k: tf.Tensor3D, v: tf.Tensor3D,
): { out: tf.Tensor3D; weights: tf.Tensor3D } {
  const weights = tf.softmax(tf.matMul(k, q)) as tf.Tensor3D; // [B, C, C]
  const out = tf.matMul(v, weights) as tf.Tensor3D; // [B, PHW, C]
  return { out, weights };
}

function toTokens(x: tf.Tensor5D): tf.Tensor3D {
  const [b, p, h, w, c] = x.shape;
  return tf.reshape(x, [b, p * h * w, c]) as tf.Tensor3D;
}

/**
 * Two-way cross-attention between the stage latent u and the running hidden
 * state h. Projections are 1x1x1 3D convolutions; each direction queries with
 * its own stream and reads keys/values from the other, then adds the result
 * back residually.
 */
export class Twca {
  private wq_u: tf.Variable; private wk_u: tf.Variable; private wv_u: tf.Variable;
  private wq_h: tf.Variable; private wk_h: tf.Variable; private wv_h: tf.Variable;

  constructor(store: ParamStore, name: string, channels: number) {
    const std = Math.sqrt(1 / channels);
    this.wq_u = store.pointwise(`${name}/u_q`, channels, channels, std);
    this.wk_u = store.pointwise(`${name}/u_k`, channels, channels, std);
    this.wv_u = store.pointwise(`${name}/u_v`, channels, channels, std);
    this.wq_h = store.pointwise(`${name}/h_q`, channels, channels, std);
    this.wk_h = store.pointwise(`${name}/h_k`, channels, channels, std);
    this.wv_h = store.pointwise(`${name}/h_v`, channels, channels, std);
  }

  apply(u: tf.Tensor5D, hPrev: tf.Tensor5D): { u: tf.Tensor5D; h: tf.Tensor5D } {
    const shape = u.shape;
    const qU = toTokens(pointwiseConv3d(u, this.wq_u as tf.Tensor2D));
    const kU = tf.transpose(toTokens(pointwiseConv3d(u, this.wk_u as tf.Tensor2D)), [0, 2, 1]) as tf.Tensor3D;
    const vU = toTokens(pointwiseConv3d(u, this.wv_u as tf.Tensor2D));
    const qH = toTokens(pointwiseConv3d(hPrev, this.wq_h as tf.Tensor2D));
    const kH = tf.transpose(toTokens(pointwiseConv3d(hPrev, this.wk_h as tf.Tensor2D)), [0, 2, 1]) as tf.Tensor3D;
    const vH = toTokens(pointwiseConv3d(hPrev, this.wv_h as tf.Tensor2D));

    const uUpdate = transposedAttention(qU, kH, vH).out;
    const hUpdate = transposedAttention(qH, kU, vU).out;
    return {
      u: tf.add(u, tf.reshape(uUpdate, shape)) as tf.Tensor5D,
      h: tf.add(hPrev, tf.reshape(hUpdate, shape)) as tf.Tensor5D,
    };
  }
}
