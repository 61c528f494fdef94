/**
 * SplitMix64 counter-mode mask regeneration (PRNG id 1).
 *
 * Bit for pixel i (row-major): mix(seed + (i+1) * GOLDEN), take the top 53
 * bits as a uniform in [0, 1), compare against the float32-rounded density.
 * Matches the codec's generator word for word so seeded measurement headers
 * decode to identical masks here.
 */

const GOLDEN = 0x9e3779b97f4a7c15n;
const MIX1 = 0xbf58476d1ce4e5b9n;
const MIX2 = 0x94d049bb133111ebn;
const U64 = (1n << 64n) - 1n;

function mix(z0: bigint): bigint {
  let z = z0 & U64;
  z = ((z ^ (z >> 30n)) * MIX1) & U64;
  z = ((z ^ (z >> 27n)) * MIX2) & U64;
  return z ^ (z >> 31n);
}

export function generateMaskBits(
  height: number, width: number, density: number, seed: bigint,
): Uint8Array {
  const densityF32 = Math.fround(density);
  const bits = new Uint8Array(height * width);
  const scale = 2 ** -53;
  for (let i = 0; i < bits.length; i++) {
    const z = mix((seed + BigInt(i + 1) * GOLDEN) & U64);
    const uniform = Number(z >> 11n) * scale;
    bits[i] = uniform < densityF32 ? 1 : 0;
  }
  return bits;
}
