/**
 * The toy unfolded decoder: K stages of (projection with learnable eta,
 * gated 3D U-net encoder, two-way cross-attention against the running hidden
 * state, U-net decoder), then block reassembly and 2D residual refinement.
 *
 * Per-stage eta stays nonnegative through a softplus reparameterization: the
 * stored variable is unconstrained and eta = softplus(raw).
 */
import * as tf from '@tensorflow/tfjs';
import { ParamStore, Twca } from './layers';
import { OperatorTensors, projectionStep } from './projection';
import { RefineUnet } from './refine';
import { StageUnet } from './unet3d';

export interface ToyConfig {
  stages: number;
  /** Palindromic feature dims [d0, d1, d2, d1, d0]; only the first half is free. */
  unetDims: [number, number, number, number, number];
  refineChannels: number;
  etaInit: number;
  seed: number;
}

export const TOY_DEFAULTS: ToyConfig = {
  stages: 3,
  unetDims: [8, 16, 32, 16, 8],
  refineChannels: 8,
  etaInit: 0.01,
  seed: 1,
};

export function makeConfig(overrides: Partial<ToyConfig> = {}): ToyConfig {
  const cfg = { ...TOY_DEFAULTS, ...overrides };
  if (cfg.stages < 1) throw new Error(`stages must be >= 1, got ${cfg.stages}`);
  const d = cfg.unetDims;
  if (d.length !== 5 || d[0] !== d[4] || d[1] !== d[3]) {
    throw new Error(`unetDims must be a palindromic 5-sequence, got ${d}`);
  }
  return cfg;
}

function softplusInverse(y: number): number {
  return Math.log(Math.expm1(y));
}

export interface ForwardResult {
  /** Refined image [B, H, W]. */
  refined: tf.Tensor3D;
  /** Assembled final-stage output before refinement [B, H, W]. */
  assembled: tf.Tensor3D;
  /** Final-stage cube [B, N, bh, bw]. */
  cube: tf.Tensor4D;
}

export class Bmnet {
  readonly config: ToyConfig;
  readonly store: ParamStore;
  readonly stages: StageUnet[] = [];
  readonly twcas: (Twca | null)[] = [];
  readonly etaRaw: tf.Variable[] = [];
  readonly refine: RefineUnet;

  constructor(config: Partial<ToyConfig> = {}) {
    this.config = makeConfig(config);
    this.store = new ParamStore(this.config.seed);
    const [d0, d1, d2] = this.config.unetDims;
    for (let k = 0; k < this.config.stages; k++) {
      this.stages.push(new StageUnet(this.store, `stage${k}`, [d0, d1, d2]));
      this.twcas.push(k === 0 ? null : new Twca(this.store, `twca${k}`, d2));
      this.etaRaw.push(this.store.scalar(`eta${k}/raw`, softplusInverse(this.config.etaInit)));
    }
    this.refine = new RefineUnet(this.store, 'refine', this.config.refineChannels);
  }

  get variables(): tf.Variable[] {
    return this.store.list;
  }

  eta(k: number): tf.Tensor {
    return tf.softplus(this.etaRaw[k]);
  }

  /**
   * Projection sub-step of stage k, exposed for cross-implementation checks:
   * identical math to the codec's projection_step with eta = softplus(raw_k).
   */
  stageProjection(op: OperatorTensors, x: tf.Tensor4D, y: tf.Tensor3D, k: number): tf.Tensor4D {
    return projectionStep(op, x, y, this.eta(k));
  }

  /** Reassemble [B, N, bh, bw] into [B, rows*bh, cols*bw] (row-major blocks). */
  assemble(cube: tf.Tensor4D, rows: number, cols: number): tf.Tensor3D {
    const [b, , bh, bw] = cube.shape;
    const t = tf.reshape(cube, [b, rows, cols, bh, bw]);
    return tf.reshape(tf.transpose(t, [0, 1, 3, 2, 4]), [b, rows * bh, cols * bw]) as tf.Tensor3D;
  }

  forward(op: OperatorTensors, y: tf.Tensor3D, rows: number, cols: number): ForwardResult {
    // x(0) = 0: the first projection becomes M*y/(gram+eta_0), a softly
    // regularized adjoint init in which eta_0 genuinely participates
    let x = tf.zeros([y.shape[0], op.n, op.blockHeight, op.blockWidth]) as tf.Tensor4D;
    let hidden: tf.Tensor5D | null = null;
    for (let k = 0; k < this.config.stages; k++) {
      const v = this.stageProjection(op, x, y, k);
      const v5 = tf.expandDims(v, 4) as tf.Tensor5D; // [B, P=N, bh, bw, 1]
      const enc = this.stages[k].encode(v5);
      let latent = enc.u;
      if (k === 0) {
        hidden = enc.u; // h(0) := u(0), no attention at the first stage
      } else {
        const { u, h } = (this.twcas[k] as Twca).apply(enc.u, hidden as tf.Tensor5D);
        latent = u;
        hidden = h;
      }
      const out5 = this.stages[k].decode(latent, enc);
      x = tf.squeeze(out5, [4]) as tf.Tensor4D;
    }
    const assembled = this.assemble(x, rows, cols);
    const refined = this.refine.apply(assembled);
    return { refined, assembled, cube: x };
  }
}
