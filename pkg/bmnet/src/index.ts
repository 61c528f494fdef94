export { conv3d, pointwiseConv3d } from './fastconv';
export { readMask, readMeasurement, readRawFloat, writeRawFloat } from './container';
export { generateMaskBits } from './maskgen';
export {
  forward,
  initEstimate,
  mergeBlocks,
  operatorFromFiles,
  padBits,
  projectionStep,
  splitBlocks,
} from './projection';
export { GatedConv3d, ParamStore, Twca, transposedAttention } from './layers';
export { StageUnet, nnUpsample3d } from './unet3d';
export { RefineUnet } from './refine';
export { Bmnet, TOY_DEFAULTS, makeConfig } from './model';
export {
  DivergenceError,
  TRAIN_DEFAULTS,
  encodeTargets,
  learningRate,
  loadCheckpoint,
  psnrDb,
  saveCheckpoint,
  train,
} from './train';
export { smoothPatch, patchBatch } from './patches';
export { blockSeamMetric } from './seam';
