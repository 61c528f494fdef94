/**
 * End-to-end MSE training with Adam, linear warm-up into a cosine decay, and
 * divergence detection (non-finite loss aborts with a report).
 */
import * as tf from '@tensorflow/tfjs';
import { writeFileSync, readFileSync } from 'node:fs';
import { Bmnet } from './model';
import { OperatorTensors, forward, splitBlocks } from './projection';

export interface TrainConfig {
  steps: number;
  warmupSteps: number;
  initLr: number;
  baseLr: number;
  minLr: number;
  evalEvery: number;
}

export const TRAIN_DEFAULTS: TrainConfig = {
  steps: 400,
  warmupSteps: 200,
  initLr: 1e-4,
  baseLr: 4e-3,
  minLr: 1e-5,
  evalEvery: 25,
};

export class DivergenceError extends Error {
  constructor(readonly step: number, readonly loss: number) {
    super(`training diverged at step ${step}: loss=${loss}`);
  }
}

export function learningRate(step: number, cfg: TrainConfig): number {
  if (step < cfg.warmupSteps) {
    return cfg.initLr + (cfg.baseLr - cfg.initLr) * (step / Math.max(cfg.warmupSteps, 1));
  }
  const t = (step - cfg.warmupSteps) / Math.max(cfg.steps - cfg.warmupSteps, 1);
  return cfg.minLr + 0.5 * (cfg.baseLr - cfg.minLr) * (1 + Math.cos(Math.PI * Math.min(t, 1)));
}

export function psnrDb(mse: number): number {
  if (mse <= 0) return 100;
  return Math.min(100, 10 * Math.log10(1 / mse));
}

/** Encode a batch of target images [B, H, W] into measurements [B, bh, bw]. */
export function encodeTargets(
  op: OperatorTensors, targets: tf.Tensor3D, rows: number, cols: number,
): tf.Tensor3D {
  const [b, h, w] = targets.shape;
  const data = targets.dataSync() as Float32Array;
  const cubes = new Float32Array(b * rows * cols * op.blockHeight * op.blockWidth);
  const per = rows * cols * op.blockHeight * op.blockWidth;
  for (let i = 0; i < b; i++) {
    cubes.set(splitBlocks(data.subarray(i * h * w, (i + 1) * h * w), h, w, rows, cols), i * per);
  }
  const cubeT = tf.tensor4d(cubes, [b, rows * cols, op.blockHeight, op.blockWidth]);
  const y = forward(op, cubeT);
  cubeT.dispose();
  return y;
}

export interface TrainResult {
  losses: number[];
  trainPsnrDb: number;
  steps: number;
}

export interface TrainHooks {
  onStep?: (step: number, loss: number, lr: number) => void;
  /** Stop early once this returns true (checked at eval points). */
  stopWhen?: (trainDb: number) => boolean;
}

export function train(
  model: Bmnet,
  op: OperatorTensors,
  targets: tf.Tensor3D,
  rows: number,
  cols: number,
  cfg: TrainConfig = TRAIN_DEFAULTS,
  hooks: TrainHooks = {},
): TrainResult {
  const y = encodeTargets(op, targets, rows, cols);
  const optimizer = tf.train.adam(cfg.initLr);
  const vars = model.variables;
  const losses: number[] = [];

  const evalDb = () =>
    tf.tidy(() => {
      const out = model.forward(op, y, rows, cols).refined;
      return psnrDb(tf.mean(tf.square(tf.sub(out, targets))).dataSync()[0]);
    });

  let steps = cfg.steps;
  for (let step = 0; step < cfg.steps; step++) {
    (optimizer as unknown as { learningRate: number }).learningRate = learningRate(step, cfg);
    const { value, grads } = tf.variableGrads(
      () => tf.tidy(() =>
        tf.mean(tf.square(tf.sub(model.forward(op, y, rows, cols).refined, targets))),
      ) as tf.Scalar,
      vars,
    );
    const loss = value.dataSync()[0];
    value.dispose();
    if (!Number.isFinite(loss)) {
      optimizer.dispose();
      throw new DivergenceError(step, loss);
    }
    optimizer.applyGradients(grads as unknown as Parameters<typeof optimizer.applyGradients>[0]);
    Object.values(grads).forEach((g) => g.dispose());
    losses.push(loss);
    hooks.onStep?.(step, loss, learningRate(step, cfg));
    if (hooks.stopWhen && (step + 1) % cfg.evalEvery === 0 && hooks.stopWhen(evalDb())) {
      steps = step + 1;
      break;
    }
  }
  optimizer.dispose();
  const trainPsnrDb = evalDb();
  y.dispose();
  return { losses, trainPsnrDb, steps };
}

/** Serialize every model variable (plus config) to a JSON checkpoint. */
export function saveCheckpoint(model: Bmnet, path: string): void {
  const entries: Record<string, { shape: number[]; data: string }> = {};
  for (const [name, v] of model.store.vars) {
    const raw = Buffer.from(new Float32Array(v.dataSync() as Float32Array).buffer);
    entries[name] = { shape: v.shape.slice(), data: raw.toString('base64') };
  }
  writeFileSync(path, JSON.stringify({ config: model.config, params: entries }));
}

export function loadCheckpoint(path: string): Bmnet {
  const blob = JSON.parse(readFileSync(path, 'utf8'));
  const model = new Bmnet(blob.config);
  for (const [name, entry] of Object.entries(blob.params) as [string, { shape: number[]; data: string }][]) {
    const v = model.store.vars.get(name);
    if (!v) throw new Error(`checkpoint parameter ${name} missing in model`);
    const buf = Buffer.from(entry.data, 'base64');
    const values = new Float32Array(buf.buffer, buf.byteOffset, buf.length / 4);
    v.assign(tf.tensor(Array.from(values), entry.shape));
  }
  return model;
}
