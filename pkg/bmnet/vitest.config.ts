import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    include: ['tests/**/*.test.ts'],
    testTimeout: 1_800_000,
    hookTimeout: 120_000,
    // tfjs keeps global state (variable registry); run files one at a time
    maxWorkers: 1,
    fileParallelism: false,
  },
});
