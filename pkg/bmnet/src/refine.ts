/**
 * Residual 2D refinement applied to the reassembled image: out = x + unet(x).
 *
 * Runs on [B, 1, H, W, C] tensors with depth-1 kernels so it reuses the fast
 * conv op. The last projection is zero-initialized, making the refiner start
 * as an exact identity.
 */
import * as tf from '@tensorflow/tfjs';
import { fusedConv3d, pointwiseConv3d } from './fastconv';
import { ParamStore } from './layers';
import { nnUpsample3d } from './unet3d';

export class RefineUnet {
  private w_in: tf.Variable;
  private b_in: tf.Variable;
  private w_down: tf.Variable;
  private b_down: tf.Variable;
  private mergeUp: tf.Variable;
  private mergeSkip: tf.Variable;
  private w_up: tf.Variable;
  private b_up: tf.Variable;
  private out: tf.Variable;
  private outB: tf.Variable;

  constructor(store: ParamStore, name: string, channels: number) {
    const c = channels;
    this.w_in = store.heConv3d(`${name}/in_w`, 1, 3, 3, 1, c);
    this.b_in = store.bias(`${name}/in_b`, c);
    this.w_down = store.heConv3d(`${name}/down_w`, 1, 3, 3, c, 2 * c);
    this.b_down = store.bias(`${name}/down_b`, 2 * c);
    this.mergeUp = store.pointwise(`${name}/merge_up`, 2 * c, c);
    this.mergeSkip = store.pointwise(`${name}/merge_skip`, c, c);
    this.w_up = store.heConv3d(`${name}/up_w`, 1, 3, 3, c, c);
    this.b_up = store.bias(`${name}/up_b`, c);
    this.out = store.pointwise(`${name}/out`, c, 1, 0); // zero init: starts as identity
    this.outB = store.bias(`${name}/out_b`, 1);
  }

  /** Residual branch value alone. image: [B, H, W]. */
  residual(image: tf.Tensor3D): tf.Tensor3D {
    const [b, h, w] = image.shape;
    const x = tf.reshape(image, [b, 1, h, w, 1]) as tf.Tensor5D;
    const f0 = fusedConv3d(x, this.w_in as tf.Tensor5D, this.b_in as tf.Tensor1D, [1, 1, 1], 'leaky');
    const f1 = fusedConv3d(f0, this.w_down as tf.Tensor5D, this.b_down as tf.Tensor1D, [1, 2, 2], 'leaky');
    const up = nnUpsample3d(f1, [1, 2, 2]);
    const m = tf.add(
      pointwiseConv3d(up, this.mergeUp as tf.Tensor2D),
      pointwiseConv3d(f0, this.mergeSkip as tf.Tensor2D),
    ) as tf.Tensor5D;
    const f2 = fusedConv3d(m, this.w_up as tf.Tensor5D, this.b_up as tf.Tensor1D, [1, 1, 1], 'leaky');
    const r = tf.add(pointwiseConv3d(f2, this.out as tf.Tensor2D), this.outB);
    return tf.reshape(r, [b, h, w]) as tf.Tensor3D;
  }

  apply(image: tf.Tensor3D): tf.Tensor3D {
    return tf.add(image, this.residual(image)) as tf.Tensor3D;
  }
}
