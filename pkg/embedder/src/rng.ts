/**
 * Deterministic random number generation.
 *
 * Augmentation parameters and projection weights must reproduce exactly
 * across runs and platforms, so everything random in this package flows
 * through one seeded integer generator (sfc32) instead of Math.random.
 */

/** 32-bit FNV-1a, for turning identifier strings into seed material. */
export function hashString(text: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    h ^= text.charCodeAt(i);
    h = Math.imul(h, 0x01000193);
  }
  return h >>> 0;
}

/**
 * Small fast counter RNG (sfc32) with a splitmix32 seeding pass.
 *
 * Uniforms are in [0, 1); gaussians come from Box-Muller. Streams for
 * different (seed, stream) pairs are independent for our purposes, which
 * is what lets images be processed in any order without changing output.
 */
export class Rng {
  private a: number;
  private b: number;
  private c: number;
  private d: number;

  constructor(seed: number, stream = 0) {
    // splitmix32 expansion of the (seed, stream) pair into four words
    let s = (Math.imul(seed, 0x9e3779b9) ^ Math.imul(stream, 0x85ebca6b)) >>> 0;
    const next = () => {
      s = (s + 0x9e3779b9) >>> 0;
      let z = s;
      z = Math.imul(z ^ (z >>> 16), 0x21f0aaad);
      z = Math.imul(z ^ (z >>> 15), 0x735a2d97);
      return (z ^ (z >>> 15)) >>> 0;
    };
    this.a = next();
    this.b = next();
    this.c = next();
    this.d = next();
    for (let i = 0; i < 12; i++) this.nextUint32();
  }

  nextUint32(): number {
    const t = (this.a + this.b) >>> 0;
    this.a = this.b ^ (this.b >>> 9);
    this.b = (this.c + (this.c << 3)) >>> 0;
    this.c = ((this.c << 21) | (this.c >>> 11)) >>> 0;
    this.d = (this.d + 1) >>> 0;
    const out = (t + this.d) >>> 0;
    this.c = (this.c + out) >>> 0;
    return out;
  }

  /** Uniform float in [0, 1). */
  uniform(): number {
    return this.nextUint32() / 4294967296;
  }

  /** Uniform float in [lo, hi). */
  range(lo: number, hi: number): number {
    return lo + (hi - lo) * this.uniform();
  }

  /** Uniform integer in [0, n). */
  int(n: number): number {
    return Math.floor(this.uniform() * n);
  }

  /** Bernoulli draw. */
  chance(p: number): boolean {
    return this.uniform() < p;
  }

  /** Standard normal via Box-Muller (the spare is discarded). */
  gaussian(): number {
    // u must stay off 0 for the log
    const u = (this.nextUint32() + 1) / 4294967297;
    const v = this.uniform();
    return Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * v);
  }
}
