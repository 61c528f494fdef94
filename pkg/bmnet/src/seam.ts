/**
 * Block-seam metric: mean absolute intensity jump across block boundaries
 * minus the same statistic over interior neighbor pairs. Positive values
 * mean the tiling is visible; deblocking should not increase it.
 */

export function blockSeamMetric(
  image: Float32Array, height: number, width: number, bh: number, bw: number,
): number {
  let seamSum = 0;
  let seamCount = 0;
  let interiorSum = 0;
  let interiorCount = 0;

  for (let r = 0; r + 1 < height; r++) {
    const boundary = (r + 1) % bh === 0;
    for (let c = 0; c < width; c++) {
      const d = Math.abs(image[(r + 1) * width + c] - image[r * width + c]);
      if (boundary) { seamSum += d; seamCount++; } else { interiorSum += d; interiorCount++; }
    }
  }
  for (let c = 0; c + 1 < width; c++) {
    const boundary = (c + 1) % bw === 0;
    for (let r = 0; r < height; r++) {
      const d = Math.abs(image[r * width + c + 1] - image[r * width + c]);
      if (boundary) { seamSum += d; seamCount++; } else { interiorSum += d; interiorCount++; }
    }
  }
  if (seamCount === 0) return 0;
  return seamSum / seamCount - interiorSum / Math.max(interiorCount, 1);
}
