/**
 * Direct 3D convolution as a tfjs custom op.
 *
 * The stock CPU backend's Conv3D kernels are generic and slow; these
 * hand-written loops over Float32Arrays are several times faster and come
 * with matching hand-written input/filter gradients, so the op trains under
 * the normal tfjs tape. Layout is NDHWC, filters [kd, kh, kw, ci, co],
 * SAME padding with TensorFlow's begin/end split, arbitrary strides.
 */
import * as tf from '@tensorflow/tfjs';

export type Stride3 = [number, number, number];

interface ConvGeom {
  outP: number; outH: number; outW: number;
  padP: number; padH: number; padW: number;
}

function sameGeometry(
  inP: number, inH: number, inW: number,
  kd: number, kh: number, kw: number,
  s: Stride3,
): ConvGeom {
  const outP = Math.ceil(inP / s[0]);
  const outH = Math.ceil(inH / s[1]);
  const outW = Math.ceil(inW / s[2]);
  const padAlong = (o: number, st: number, k: number, i: number) =>
    Math.max((o - 1) * st + k - i, 0);
  return {
    outP, outH, outW,
    padP: Math.floor(padAlong(outP, s[0], kd, inP) / 2),
    padH: Math.floor(padAlong(outH, s[1], kh, inH) / 2),
    padW: Math.floor(padAlong(outW, s[2], kw, inW) / 2),
  };
}

function convForward(
  x: Float32Array, b: number, inP: number, inH: number, inW: number, ci: number,
  w: Float32Array, kd: number, kh: number, kw: number, co: number,
  s: Stride3, g: ConvGeom,
): Float32Array {
  const out = new Float32Array(b * g.outP * g.outH * g.outW * co);
  const inHW = inH * inW;
  for (let bi = 0; bi < b; bi++) {
    const xb = bi * inP * inHW * ci;
    const ob = bi * g.outP * g.outH * g.outW * co;
    for (let op = 0; op < g.outP; op++) {
      for (let oh = 0; oh < g.outH; oh++) {
        for (let ow = 0; ow < g.outW; ow++) {
          const oBase = ob + ((op * g.outH + oh) * g.outW + ow) * co;
          for (let dp = 0; dp < kd; dp++) {
            const ip = op * s[0] + dp - g.padP;
            if (ip < 0 || ip >= inP) continue;
            for (let dh = 0; dh < kh; dh++) {
              const ih = oh * s[1] + dh - g.padH;
              if (ih < 0 || ih >= inH) continue;
              for (let dw = 0; dw < kw; dw++) {
                const iw = ow * s[2] + dw - g.padW;
                if (iw < 0 || iw >= inW) continue;
                const iBase = xb + ((ip * inH + ih) * inW + iw) * ci;
                const wBase = ((dp * kh + dh) * kw + dw) * ci * co;
                for (let c = 0; c < ci; c++) {
                  const xv = x[iBase + c];
                  if (xv === 0) continue;
                  const wRow = wBase + c * co;
                  for (let o = 0; o < co; o++) out[oBase + o] += xv * w[wRow + o];
                }
              }
            }
          }
        }
      }
    }
  }
  return out;
}

function convBackpropInput(
  dy: Float32Array, b: number, inP: number, inH: number, inW: number, ci: number,
  w: Float32Array, kd: number, kh: number, kw: number, co: number,
  s: Stride3, g: ConvGeom,
): Float32Array {
  const dx = new Float32Array(b * inP * inH * inW * ci);
  for (let bi = 0; bi < b; bi++) {
    const db = bi * g.outP * g.outH * g.outW * co;
    const xb = bi * inP * inH * inW * ci;
    for (let op = 0; op < g.outP; op++) {
      for (let oh = 0; oh < g.outH; oh++) {
        for (let ow = 0; ow < g.outW; ow++) {
          const dBase = db + ((op * g.outH + oh) * g.outW + ow) * co;
          for (let dp = 0; dp < kd; dp++) {
            const ip = op * s[0] + dp - g.padP;
            if (ip < 0 || ip >= inP) continue;
            for (let dh = 0; dh < kh; dh++) {
              const ih = oh * s[1] + dh - g.padH;
              if (ih < 0 || ih >= inH) continue;
              for (let dw = 0; dw < kw; dw++) {
                const iw = ow * s[2] + dw - g.padW;
                if (iw < 0 || iw >= inW) continue;
                const iBase = xb + ((ip * inH + ih) * inW + iw) * ci;
                const wBase = ((dp * kh + dh) * kw + dw) * ci * co;
                for (let c = 0; c < ci; c++) {
                  const wRow = wBase + c * co;
                  let acc = 0;
                  for (let o = 0; o < co; o++) acc += dy[dBase + o] * w[wRow + o];
                  dx[iBase + c] += acc;
                }
              }
            }
          }
        }
      }
    }
  }
  return dx;
}

function convBackpropFilter(
  x: Float32Array, dy: Float32Array,
  b: number, inP: number, inH: number, inW: number, ci: number,
  kd: number, kh: number, kw: number, co: number,
  s: Stride3, g: ConvGeom,
): Float32Array {
  const dw = new Float32Array(kd * kh * kw * ci * co);
  for (let bi = 0; bi < b; bi++) {
    const db = bi * g.outP * g.outH * g.outW * co;
    const xb = bi * inP * inH * inW * ci;
    for (let op = 0; op < g.outP; op++) {
      for (let oh = 0; oh < g.outH; oh++) {
        for (let ow = 0; ow < g.outW; ow++) {
          const dBase = db + ((op * g.outH + oh) * g.outW + ow) * co;
          for (let dp = 0; dp < kd; dp++) {
            const ip = op * s[0] + dp - g.padP;
            if (ip < 0 || ip >= inP) continue;
            for (let dh = 0; dh < kh; dh++) {
              const ih = oh * s[1] + dh - g.padH;
              if (ih < 0 || ih >= inH) continue;
              for (let dw2 = 0; dw2 < kw; dw2++) {
                const iw = ow * s[2] + dw2 - g.padW;
                if (iw < 0 || iw >= inW) continue;
                const iBase = xb + ((ip * inH + ih) * inW + iw) * ci;
                const wBase = ((dp * kh + dh) * kw + dw2) * ci * co;
                for (let c = 0; c < ci; c++) {
                  const xv = x[iBase + c];
                  if (xv === 0) continue;
                  const wRow = wBase + c * co;
                  for (let o = 0; o < co; o++) dw[wRow + o] += xv * dy[dBase + o];
                }
              }
            }
          }
        }
      }
    }
  }
  return dw;
}

/** SAME-padded 3D convolution with custom forward and gradients. */
export function conv3d(x: tf.Tensor5D, w: tf.Tensor5D, strides: Stride3 = [1, 1, 1]): tf.Tensor5D {
  const op = tf.customGrad((xi, wi, save) => {
    const xt = xi as tf.Tensor5D;
    const wt = wi as tf.Tensor5D;
    (save as tf.GradSaveFunc)([xt, wt]);
    const [b, inP, inH, inW, ci] = xt.shape;
    const [kd, kh, kw, , co] = wt.shape;
    const g = sameGeometry(inP, inH, inW, kd, kh, kw, strides);
    const values = convForward(
      xt.dataSync() as Float32Array, b, inP, inH, inW, ci,
      wt.dataSync() as Float32Array, kd, kh, kw, co, strides, g,
    );
    const value = tf.tensor(values, [b, g.outP, g.outH, g.outW, co]);
    const gradFunc = (dy: tf.Tensor, saved: tf.Tensor[]) => {
      const [xs, ws] = saved as [tf.Tensor5D, tf.Tensor5D];
      const dyv = dy.dataSync() as Float32Array;
      const dx = convBackpropInput(
        dyv, b, inP, inH, inW, ci,
        ws.dataSync() as Float32Array, kd, kh, kw, co, strides, g,
      );
      const dw = convBackpropFilter(
        xs.dataSync() as Float32Array, dyv, b, inP, inH, inW, ci,
        kd, kh, kw, co, strides, g,
      );
      return [tf.tensor(dx, xs.shape), tf.tensor(dw, ws.shape)];
    };
    return { value, gradFunc };
  });
  return op(x, w) as tf.Tensor5D;
}

/** 1x1x1 convolution as a matMul over flattened voxels (cheap projection). */
export function pointwiseConv3d(x: tf.Tensor5D, w: tf.Tensor2D): tf.Tensor5D {
  const [b, p, h, wd, ci] = x.shape;
  const co = w.shape[1];
  const flat = tf.reshape(x, [b * p * h * wd, ci]);
  return tf.reshape(tf.matMul(flat, w), [b, p, h, wd, co]) as tf.Tensor5D;
}

export type ConvActivation = 'linear' | 'leaky' | 'gated';

const LEAKY_SLOPE = 0.2;

function biasGrad(dy2: Float32Array, channels: number): Float32Array {
  const db = new Float32Array(channels);
  for (let i = 0; i < dy2.length; i += channels) {
    for (let c = 0; c < channels; c++) db[c] += dy2[i + c];
  }
  return db;
}

/**
 * Fused conv3d + bias + activation in one op (one tape node, one input walk).
 *
 * 'gated' expects the filter to hold 2*co output channels: the first half is
 * the feature branch, the second the sigmoid gate, and the op returns
 * feat * sigmoid(gate). 'leaky' applies leakyRelu(0.2). Gradients for input,
 * filter, and bias are hand-written; dispatch overhead on this backend costs
 * more than the arithmetic, so fewer/fatter kernels win.
 */
export function fusedConv3d(
  x: tf.Tensor5D,
  w: tf.Tensor5D,
  bias: tf.Tensor1D,
  strides: Stride3 = [1, 1, 1],
  activation: ConvActivation = 'linear',
): tf.Tensor5D {
  const op = tf.customGrad((xi, wi, bi, save) => {
    const xt = xi as tf.Tensor5D;
    const wt = wi as tf.Tensor5D;
    const bt = bi as tf.Tensor1D;
    const [b, inP, inH, inW, ci] = xt.shape;
    const [kd, kh, kw, , coTotal] = wt.shape;
    const co = activation === 'gated' ? coTotal / 2 : coTotal;
    if (!Number.isInteger(co)) throw new Error('gated conv filter needs an even channel count');
    const g = sameGeometry(inP, inH, inW, kd, kh, kw, strides);

    const pre = convForward(
      xt.dataSync() as Float32Array, b, inP, inH, inW, ci,
      wt.dataSync() as Float32Array, kd, kh, kw, coTotal, strides, g,
    );
    const bv = bt.dataSync() as Float32Array;
    for (let i = 0; i < pre.length; i += coTotal) {
      for (let c = 0; c < coTotal; c++) pre[i + c] += bv[c];
    }

    const voxels = b * g.outP * g.outH * g.outW;
    let outV: Float32Array;
    if (activation === 'gated') {
      outV = new Float32Array(voxels * co);
      for (let v = 0; v < voxels; v++) {
        const src = v * coTotal;
        const dst = v * co;
        for (let c = 0; c < co; c++) {
          const gate = 1 / (1 + Math.exp(-pre[src + co + c]));
          outV[dst + c] = pre[src + c] * gate;
        }
      }
    } else if (activation === 'leaky') {
      outV = new Float32Array(pre.length);
      for (let i = 0; i < pre.length; i++) outV[i] = pre[i] > 0 ? pre[i] : LEAKY_SLOPE * pre[i];
    } else {
      outV = pre;
    }

    const preT = tf.tensor(pre, [voxels * coTotal]);
    (save as tf.GradSaveFunc)([xt, wt, preT]);
    const value = tf.tensor(outV, [b, g.outP, g.outH, g.outW, co]);

    const gradFunc = (dy: tf.Tensor, saved: tf.Tensor[]) => {
      const [xs, ws, preS] = saved;
      const dyv = dy.dataSync() as Float32Array;
      const preV = preS.dataSync() as Float32Array;
      let dy2: Float32Array;
      if (activation === 'gated') {
        dy2 = new Float32Array(voxels * coTotal);
        for (let v = 0; v < voxels; v++) {
          const base2 = v * coTotal;
          const base = v * co;
          for (let c = 0; c < co; c++) {
            const gate = 1 / (1 + Math.exp(-preV[base2 + co + c]));
            const d = dyv[base + c];
            dy2[base2 + c] = d * gate;
            dy2[base2 + co + c] = d * preV[base2 + c] * gate * (1 - gate);
          }
        }
      } else if (activation === 'leaky') {
        dy2 = new Float32Array(dyv.length);
        for (let i = 0; i < dyv.length; i++) dy2[i] = preV[i] > 0 ? dyv[i] : LEAKY_SLOPE * dyv[i];
      } else {
        dy2 = dyv;
      }
      const dx = convBackpropInput(
        dy2, b, inP, inH, inW, ci,
        ws.dataSync() as Float32Array, kd, kh, kw, coTotal, strides, g,
      );
      const dw = convBackpropFilter(
        xs.dataSync() as Float32Array, dy2, b, inP, inH, inW, ci,
        kd, kh, kw, coTotal, strides, g,
      );
      return [
        tf.tensor(dx, xs.shape),
        tf.tensor(dw, ws.shape),
        tf.tensor(biasGrad(dy2, coTotal), [coTotal]),
      ];
    };
    return { value, gradFunc };
  });
  return op(x, w, bias) as tf.Tensor5D;
}
