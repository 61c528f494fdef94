/**
 * One-off calibration for the overfit acceptance budget: trains the default
 * toy model on the 8 synthetic patches and reports the PSNR trajectory, the
 * step where it crosses 42 dB, and the held-out block-seam behavior.
 *
 *   npx esbuild scripts/calibrate.ts --bundle --platform=node --format=esm \
 *     --outfile=dist/calibrate.mjs --external:@tensorflow/tfjs
 *   node dist/calibrate.mjs
 */
import { writeFileSync } from 'node:fs';
import { join } from 'node:path';
import * as tf from '@tensorflow/tfjs';
import { readMeasurement } from '../src/container';
import { Bmnet } from '../src/model';
import { operatorFromFiles } from '../src/projection';
import { patchBatch } from '../src/patches';
import { blockSeamMetric } from '../src/seam';
import { encodeTargets, train } from '../src/train';

const FIXTURES = join(import.meta.dirname ?? '.', '..', 'fixtures');

const m = readMeasurement(join(FIXTURES, 'meas.bmim'));
const op = operatorFromFiles(m);
const model = new Bmnet({ seed: 11 });
const targets = patchBatch([0, 1, 2, 3, 4, 5, 6, 7], 64);
const t0 = performance.now();
const evals: Array<{ step: number; db: number }> = [];

const res = train(model, op, targets, 2, 2,
  { steps: 700, warmupSteps: 30, initLr: 5e-4, baseLr: 8e-3, minLr: 1e-3, evalEvery: 25 },
  {
    onStep: (step, loss, lr) => {
      if ((step + 1) % 10 === 0) {
        console.log(
          `step ${step + 1}: loss=${loss.toExponential(3)} (~${(10 * Math.log10(1 / loss)).toFixed(1)} dB) `
          + `lr=${lr.toExponential(1)} t=${((performance.now() - t0) / 1000).toFixed(0)}s`,
        );
      }
    },
    stopWhen: (db) => {
      console.log(`EVAL psnr=${db.toFixed(2)} dB (t=${((performance.now() - t0) / 1000).toFixed(0)}s)`);
      evals.push({ step: evals.length, db });
      return db > 42;
    },
  });
console.log(`FINISHED steps=${res.steps} psnr=${res.trainPsnrDb.toFixed(2)} total=${((performance.now() - t0) / 1000).toFixed(0)}s`);

const held = patchBatch([8, 9], 64);
const yh = encodeTargets(op, held, 2, 2);
const out = model.forward(op, yh, 2, 2);
const pre = out.assembled.dataSync() as Float32Array;
const post = out.refined.dataSync() as Float32Array;
const seams: Array<{ pre: number; post: number }> = [];
for (let i = 0; i < 2; i++) {
  const preSeam = blockSeamMetric(pre.subarray(i * 4096, (i + 1) * 4096), 64, 64, 32, 32);
  const postSeam = blockSeamMetric(post.subarray(i * 4096, (i + 1) * 4096), 64, 64, 32, 32);
  seams.push({ pre: preSeam, post: postSeam });
  console.log(`held-out ${i}: seam pre=${preSeam.toExponential(3)} post=${postSeam.toExponential(3)} increased=${postSeam > preSeam}`);
}

writeFileSync('/tmp/calibration_summary.json', JSON.stringify({
  steps: res.steps,
  trainPsnrDb: res.trainPsnrDb,
  seams,
  evals,
}, null, 2));
console.log('summary written to /tmp/calibration_summary.json');
