/**
 * Deterministic synthetic test images.
 *
 * Five pattern families (stripes, checker, gradient, blobs, waves) with
 * per-image palettes spaced around the hue circle, so any two distinct
 * images differ visibly in color and texture. Used by the test suite and
 * the similarity calibration script; nothing here ships in the tool path.
 */

import * as path from 'path';
import { mkdirSync, writeFileSync } from 'fs';

import { RasterImage, createImage, writePng } from './image';
import { Rng } from './rng';

const FAMILIES = ['stripes', 'checker', 'gradient', 'blobs', 'waves'] as const;

type Family = (typeof FAMILIES)[number];

function hsv(h: number, s: number, v: number): [number, number, number] {
  const i = Math.floor(h * 6);
  const f = h * 6 - i;
  const p = v * (1 - s);
  const q = v * (1 - f * s);
  const t = v * (1 - (1 - f) * s);
  switch (((i % 6) + 6) % 6) {
    case 0: return [v, t, p];
    case 1: return [q, v, p];
    case 2: return [p, v, t];
    case 3: return [p, q, v];
    case 4: return [t, p, v];
    default: return [v, p, q];
  }
}

function setPixel(img: RasterImage, x: number, y: number, rgb: [number, number, number]): void {
  const i = (y * img.width + x) * 3;
  img.data[i] = rgb[0];
  img.data[i + 1] = rgb[1];
  img.data[i + 2] = rgb[2];
}

function mix(a: [number, number, number], b: [number, number, number], t: number): [number, number, number] {
  return [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t];
}

/** Render synthetic image `index`; same index always gives the same pixels. */
export function synthImage(index: number, size = 96): RasterImage {
  const rng = new Rng(0x5e1ec7, index + 1);
  // golden-ratio hue spacing keeps palettes of different images apart
  const hue = (index * 0.6180339887498949) % 1;
  const colorA = hsv(hue, rng.range(0.55, 0.95), rng.range(0.65, 1.0));
  const colorB = hsv((hue + rng.range(0.35, 0.65)) % 1, rng.range(0.45, 0.9), rng.range(0.25, 0.6));
  const family: Family = FAMILIES[index % FAMILIES.length];
  const img = createImage(size, size);

  if (family === 'stripes') {
    const angle = rng.range(0, Math.PI);
    const freq = rng.range(4, 9) / size;
    const ca = Math.cos(angle);
    const sa = Math.sin(angle);
    for (let y = 0; y < size; y++) {
      for (let x = 0; x < size; x++) {
        const phase = (x * ca + y * sa) * freq * 2 * Math.PI;
        setPixel(img, x, y, Math.sin(phase) > 0 ? colorA : colorB);
      }
    }
  } else if (family === 'checker') {
    // proportional to size so the pattern is resolution-independent
    const cell = Math.max(1, Math.round(size * rng.range(0.09, 0.21)));
    for (let y = 0; y < size; y++) {
      for (let x = 0; x < size; x++) {
        const on = (Math.floor(x / cell) + Math.floor(y / cell)) % 2 === 0;
        setPixel(img, x, y, on ? colorA : colorB);
      }
    }
  } else if (family === 'gradient') {
    const cx = rng.range(0.2, 0.8) * size;
    const cy = rng.range(0.2, 0.8) * size;
    const reach = size * rng.range(0.7, 1.2);
    for (let y = 0; y < size; y++) {
      for (let x = 0; x < size; x++) {
        const d = Math.min(1, Math.hypot(x - cx, y - cy) / reach);
        setPixel(img, x, y, mix(colorA, colorB, d));
      }
    }
  } else if (family === 'blobs') {
    const blobs: { x: number; y: number; r: number }[] = [];
    const count = 4 + rng.int(4);
    for (let b = 0; b < count; b++) {
      blobs.push({ x: rng.range(0, size), y: rng.range(0, size), r: size * rng.range(0.07, 0.19) });
    }
    for (let y = 0; y < size; y++) {
      for (let x = 0; x < size; x++) {
        let field = 0;
        for (const blob of blobs) {
          const d2 = (x - blob.x) ** 2 + (y - blob.y) ** 2;
          field += Math.exp(-d2 / (2 * blob.r * blob.r));
        }
        setPixel(img, x, y, mix(colorB, colorA, Math.min(1, field)));
      }
    }
  } else {
    const fx = rng.range(2, 5) / size;
    const fy = rng.range(2, 5) / size;
    const phase = rng.range(0, 2 * Math.PI);
    for (let y = 0; y < size; y++) {
      for (let x = 0; x < size; x++) {
        const v = 0.5 + 0.5 * Math.sin(2 * Math.PI * (x * fx) + phase) * Math.cos(2 * Math.PI * (y * fy));
        setPixel(img, x, y, mix(colorB, colorA, v));
      }
    }
  }
  return img;
}

export interface FixtureEntry {
  file: string;
  id: string;
  class: string;
}

/**
 * Write `count` synthetic PNGs plus an input manifest into `dir` and
 * return the manifest entries. Classes are the pattern family names.
 */
export function writeSynthFixture(dir: string, count = 20, size = 96): FixtureEntry[] {
  mkdirSync(dir, { recursive: true });
  const entries: FixtureEntry[] = [];
  for (let i = 0; i < count; i++) {
    const file = `synth-${String(i).padStart(2, '0')}.png`;
    writePng(synthImage(i, size), path.join(dir, file));
    entries.push({ file, id: `synth-${String(i).padStart(2, '0')}`, class: FAMILIES[i % FAMILIES.length] });
  }
  writeFileSync(path.join(dir, 'manifest.json'), JSON.stringify(entries, null, 2) + '\n');
  return entries;
}
