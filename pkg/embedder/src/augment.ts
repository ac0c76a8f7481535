/**
 * Pixel-space augmentations: random resized crop, horizontal flip, color
 * distortion, gaussian blur.
 *
 * Parameter ranges follow the widely used SimCLR recipe: crop covers
 * 8-100% of the source area with aspect ratio in [3/4, 4/3]; color
 * distortion at strength 1.0 jitters brightness/contrast/saturation by a
 * factor in [0.2, 1.8] and hue by up to 0.2 of the hue circle, with a 20%
 * chance of grayscale conversion; blur draws sigma from [0.1, 2.0].
 *
 * One difference from the composed recipe: each output row here commits
 * to a single kind, so that kind's transform is applied unconditionally
 * instead of with an apply-probability (a skipped transform would emit a
 * tagged row identical to its original).
 */

import {
  RasterImage,
  clonePixels,
  crop,
  flipHorizontal,
  gaussianBlur,
  resize,
} from './image';
import { Rng } from './rng';

export type AugmentationKind = 'crop' | 'flip' | 'color' | 'blur';

export const AUGMENTATION_KINDS: readonly AugmentationKind[] = [
  'crop',
  'flip',
  'color',
  'blur',
];

export function isAugmentationKind(value: string): value is AugmentationKind {
  return (AUGMENTATION_KINDS as readonly string[]).includes(value);
}

/**
 * Crop a random box covering 8-100% of the area with aspect ratio in
 * [3/4, 4/3], then resize back to the source dimensions. Falls back to
 * the full frame if ten draws in a row fail to fit.
 */
export function randomResizedCrop(img: RasterImage, rng: Rng): RasterImage {
  const area = img.width * img.height;
  for (let attempt = 0; attempt < 10; attempt++) {
    const targetArea = area * rng.range(0.08, 1.0);
    const logRatio = rng.range(Math.log(3 / 4), Math.log(4 / 3));
    const ratio = Math.exp(logRatio);
    const w = Math.round(Math.sqrt(targetArea * ratio));
    const h = Math.round(Math.sqrt(targetArea / ratio));
    if (w < 1 || h < 1 || w > img.width || h > img.height) continue;
    const x = rng.int(img.width - w + 1);
    const y = rng.int(img.height - h + 1);
    return resize(crop(img, x, y, w, h), img.width, img.height);
  }
  return clonePixels(img);
}

function rgbToHsv(r: number, g: number, b: number): [number, number, number] {
  const max = Math.max(r, g, b);
  const min = Math.min(r, g, b);
  const d = max - min;
  let h = 0;
  if (d > 0) {
    if (max === r) h = ((g - b) / d) % 6;
    else if (max === g) h = (b - r) / d + 2;
    else h = (r - g) / d + 4;
    h /= 6;
    if (h < 0) h += 1;
  }
  const s = max === 0 ? 0 : d / max;
  return [h, s, max];
}

function hsvToRgb(h: number, s: number, v: number): [number, number, number] {
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

function luminance(r: number, g: number, b: number): number {
  return 0.299 * r + 0.587 * g + 0.114 * b;
}

const clamp01 = (v: number) => Math.max(0, Math.min(1, v));

function mapPixels(img: RasterImage, fn: (r: number, g: number, b: number) => [number, number, number]): void {
  for (let i = 0; i < img.data.length; i += 3) {
    const [r, g, b] = fn(img.data[i], img.data[i + 1], img.data[i + 2]);
    img.data[i] = clamp01(r);
    img.data[i + 1] = clamp01(g);
    img.data[i + 2] = clamp01(b);
  }
}

/**
 * Brightness, contrast, saturation, and hue jitter in a random order,
 * then grayscale with probability 0.2. Strength 1.0.
 */
export function colorDistortion(img: RasterImage, rng: Rng): RasterImage {
  const out = clonePixels(img);
  const brightness = rng.range(0.2, 1.8);
  const contrast = rng.range(0.2, 1.8);
  const saturation = rng.range(0.2, 1.8);
  const hueShift = rng.range(-0.2, 0.2);

  const ops = ['brightness', 'contrast', 'saturation', 'hue'];
  // Fisher-Yates; the jitter order itself is part of the recipe's randomness
  for (let i = ops.length - 1; i > 0; i--) {
    const j = rng.int(i + 1);
    [ops[i], ops[j]] = [ops[j], ops[i]];
  }

  for (const op of ops) {
    if (op === 'brightness') {
      mapPixels(out, (r, g, b) => [r * brightness, g * brightness, b * brightness]);
    } else if (op === 'contrast') {
      let mean = 0;
      for (let i = 0; i < out.data.length; i += 3) {
        mean += luminance(out.data[i], out.data[i + 1], out.data[i + 2]);
      }
      mean /= out.width * out.height;
      mapPixels(out, (r, g, b) => [
        mean + contrast * (r - mean),
        mean + contrast * (g - mean),
        mean + contrast * (b - mean),
      ]);
    } else if (op === 'saturation') {
      mapPixels(out, (r, g, b) => {
        const gray = luminance(r, g, b);
        return [
          gray + saturation * (r - gray),
          gray + saturation * (g - gray),
          gray + saturation * (b - gray),
        ];
      });
    } else {
      mapPixels(out, (r, g, b) => {
        const [h, s, v] = rgbToHsv(r, g, b);
        return hsvToRgb((h + hueShift + 1) % 1, s, v);
      });
    }
  }

  if (rng.chance(0.2)) {
    mapPixels(out, (r, g, b) => {
      const gray = luminance(r, g, b);
      return [gray, gray, gray];
    });
  }
  return out;
}

export function randomBlur(img: RasterImage, rng: Rng): RasterImage {
  return gaussianBlur(img, rng.range(0.1, 2.0));
}

/** Apply one augmentation kind with parameters drawn from `rng`. */
export function applyAugmentation(img: RasterImage, kind: AugmentationKind, rng: Rng): RasterImage {
  switch (kind) {
    case 'crop':
      return randomResizedCrop(img, rng);
    case 'flip':
      return flipHorizontal(img);
    case 'color':
      return colorDistortion(img, rng);
    case 'blur':
      return randomBlur(img, rng);
  }
}
