/**
 * Minimal command line for the toy decoder.
 *
 *   train  --measurement fixtures/meas.bmim --out-dir runs/demo
 *          [--steps N --stages K --seed S]
 *   decode --measurement m.bmim --checkpoint ckpt.json --out recon.f32
 *
 * `train` fits the synthetic patch set through the given measurement
 * geometry and writes checkpoint + reconstructions; `decode` runs a saved
 * checkpoint on one measurement and writes a raw-float image the codec's
 * metrics CLI can read.
 */
import { mkdirSync } from 'node:fs';
import { join } from 'node:path';
import * as tf from '@tensorflow/tfjs';
import { readMeasurement, writeRawFloat } from './container';
import { Bmnet } from './model';
import { operatorFromFiles } from './projection';
import { patchBatch } from './patches';
import { TRAIN_DEFAULTS, loadCheckpoint, saveCheckpoint, train } from './train';

function parseArgs(argv: string[]): Record<string, string> {
  const out: Record<string, string> = {};
  for (let i = 0; i < argv.length; i += 2) {
    if (!argv[i].startsWith('--')) throw new Error(`expected flag, got ${argv[i]}`);
    out[argv[i].slice(2)] = argv[i + 1];
  }
  return out;
}

function cmdTrain(args: Record<string, string>): void {
  const m = readMeasurement(args.measurement);
  const op = operatorFromFiles(m);
  const model = new Bmnet({
    stages: args.stages ? Number(args.stages) : undefined,
    seed: args.seed ? Number(args.seed) : undefined,
  } as never);
  const size = m.originalHeight;
  const targets = patchBatch([0, 1, 2, 3, 4, 5, 6, 7], size);
  const cfg = { ...TRAIN_DEFAULTS, steps: args.steps ? Number(args.steps) : TRAIN_DEFAULTS.steps };
  const res = train(model, op, targets, m.gridRows, m.gridCols, cfg, {
    onStep: (step, loss) => {
      if ((step + 1) % 20 === 0) console.log(`step ${step + 1}: loss=${loss.toExponential(3)}`);
    },
  });
  console.log(`train psnr: ${res.trainPsnrDb.toFixed(2)} dB over ${res.steps} steps`);

  mkdirSync(args['out-dir'], { recursive: true });
  saveCheckpoint(model, join(args['out-dir'], 'checkpoint.json'));
  const y = tf.tensor3d(m.data, [1, m.blockHeight, m.blockWidth]);
  const recon = model.forward(op, y, m.gridRows, m.gridCols).refined;
  const data = recon.dataSync() as Float32Array;
  writeRawFloat(join(args['out-dir'], 'recon.f32'), data, recon.shape[1], recon.shape[2]);
  console.log(`wrote ${join(args['out-dir'], 'checkpoint.json')} and recon.f32`);
}

function cmdDecode(args: Record<string, string>): void {
  const m = readMeasurement(args.measurement);
  const op = operatorFromFiles(m);
  const model = loadCheckpoint(args.checkpoint);
  const y = tf.tensor3d(m.data, [1, m.blockHeight, m.blockWidth]);
  const recon = model.forward(op, y, m.gridRows, m.gridCols).refined;
  writeRawFloat(args.out, recon.dataSync() as Float32Array, recon.shape[1], recon.shape[2]);
  console.log(args.out);
}

const [command, ...rest] = process.argv.slice(2);
try {
  const args = parseArgs(rest);
  if (command === 'train') cmdTrain(args);
  else if (command === 'decode') cmdDecode(args);
  else {
    console.error('usage: cli.js train|decode --flags ...');
    process.exit(2);
  }
} catch (err) {
  console.error(`ERROR: ${(err as Error).message}`);
  process.exit(1);
}
