/**
 * In-memory raster images plus PNG/JPEG decoding and encoding.
 *
 * Pixels are stored as planar-free interleaved RGB floats in [0, 1];
 * alpha is dropped on decode. All geometry helpers (resize, crop, flip)
 * work on this one representation so the augmentation code never touches
 * codec details.
 */

import { readFileSync, writeFileSync } from 'fs';
import * as jpeg from 'jpeg-js';
import { PNG } from 'pngjs';

export interface RasterImage {
  width: number;
  height: number;
  /** RGB interleaved, length = width * height * 3, values in [0, 1]. */
  data: Float32Array;
}

export class DecodeError extends Error {
  constructor(public readonly file: string, reason: string) {
    super(`cannot decode ${file}: ${reason}`);
    this.name = 'DecodeError';
  }
}

export function createImage(width: number, height: number): RasterImage {
  return { width, height, data: new Float32Array(width * height * 3) };
}

function fromRgba(width: number, height: number, rgba: Uint8Array): RasterImage {
  const img = createImage(width, height);
  const n = width * height;
  for (let i = 0; i < n; i++) {
    img.data[i * 3] = rgba[i * 4] / 255;
    img.data[i * 3 + 1] = rgba[i * 4 + 1] / 255;
    img.data[i * 3 + 2] = rgba[i * 4 + 2] / 255;
  }
  return img;
}

const PNG_MAGIC = Buffer.from([0x89, 0x50, 0x4e, 0x47]);
const JPEG_MAGIC = Buffer.from([0xff, 0xd8, 0xff]);

/**
 * Decode PNG or JPEG bytes, sniffing the container from magic bytes
 * rather than the file extension. Anything else raises DecodeError,
 * labeled with `label` for skip reporting.
 */
export function decodeImage(raw: Buffer, label: string): RasterImage {
  try {
    if (raw.subarray(0, 4).equals(PNG_MAGIC)) {
      const png = PNG.sync.read(raw);
      return fromRgba(png.width, png.height, png.data);
    }
    if (raw.subarray(0, 3).equals(JPEG_MAGIC)) {
      const img = jpeg.decode(raw, { useTArray: true, maxMemoryUsageInMB: 512 });
      return fromRgba(img.width, img.height, img.data);
    }
  } catch (err) {
    throw new DecodeError(label, (err as Error).message);
  }
  throw new DecodeError(label, 'not a PNG or JPEG (bad magic bytes)');
}

export function decodeImageFile(file: string): RasterImage {
  let raw: Buffer;
  try {
    raw = readFileSync(file);
  } catch (err) {
    throw new DecodeError(file, (err as Error).message);
  }
  return decodeImage(raw, file);
}

/** Encode as PNG; used by fixture generation and tests. */
export function writePng(img: RasterImage, file: string): void {
  const png = new PNG({ width: img.width, height: img.height });
  const n = img.width * img.height;
  for (let i = 0; i < n; i++) {
    png.data[i * 4] = clampByte(img.data[i * 3]);
    png.data[i * 4 + 1] = clampByte(img.data[i * 3 + 1]);
    png.data[i * 4 + 2] = clampByte(img.data[i * 3 + 2]);
    png.data[i * 4 + 3] = 255;
  }
  writeFileSync(file, PNG.sync.write(png));
}

function clampByte(v: number): number {
  return Math.max(0, Math.min(255, Math.round(v * 255)));
}

export function clonePixels(img: RasterImage): RasterImage {
  return { width: img.width, height: img.height, data: new Float32Array(img.data) };
}

function sampleBilinear(img: RasterImage, x: number, y: number, c: number): number {
  const x0 = Math.max(0, Math.min(img.width - 1, Math.floor(x)));
  const y0 = Math.max(0, Math.min(img.height - 1, Math.floor(y)));
  const x1 = Math.min(img.width - 1, x0 + 1);
  const y1 = Math.min(img.height - 1, y0 + 1);
  const fx = Math.max(0, Math.min(1, x - x0));
  const fy = Math.max(0, Math.min(1, y - y0));
  const at = (xx: number, yy: number) => img.data[(yy * img.width + xx) * 3 + c];
  const top = at(x0, y0) * (1 - fx) + at(x1, y0) * fx;
  const bottom = at(x0, y1) * (1 - fx) + at(x1, y1) * fx;
  return top * (1 - fy) + bottom * fy;
}

/** Bilinear resample to the requested size. */
export function resize(img: RasterImage, width: number, height: number): RasterImage {
  if (img.width === width && img.height === height) return clonePixels(img);
  const out = createImage(width, height);
  const sx = img.width / width;
  const sy = img.height / height;
  for (let y = 0; y < height; y++) {
    // map output pixel centers back into source coordinates
    const srcY = (y + 0.5) * sy - 0.5;
    for (let x = 0; x < width; x++) {
      const srcX = (x + 0.5) * sx - 0.5;
      for (let c = 0; c < 3; c++) {
        out.data[(y * width + x) * 3 + c] = sampleBilinear(img, srcX, srcY, c);
      }
    }
  }
  return out;
}

/** Crop a pixel rectangle; the box must lie inside the image. */
export function crop(img: RasterImage, x: number, y: number, width: number, height: number): RasterImage {
  if (x < 0 || y < 0 || width < 1 || height < 1 || x + width > img.width || y + height > img.height) {
    throw new RangeError(`crop box ${width}x${height}+${x}+${y} outside ${img.width}x${img.height}`);
  }
  const out = createImage(width, height);
  for (let row = 0; row < height; row++) {
    const src = ((y + row) * img.width + x) * 3;
    out.data.set(img.data.subarray(src, src + width * 3), row * width * 3);
  }
  return out;
}

export function flipHorizontal(img: RasterImage): RasterImage {
  const out = createImage(img.width, img.height);
  for (let y = 0; y < img.height; y++) {
    for (let x = 0; x < img.width; x++) {
      const src = (y * img.width + x) * 3;
      const dst = (y * img.width + (img.width - 1 - x)) * 3;
      out.data[dst] = img.data[src];
      out.data[dst + 1] = img.data[src + 1];
      out.data[dst + 2] = img.data[src + 2];
    }
  }
  return out;
}

/** Separable gaussian blur with a radius-3-sigma kernel, edges clamped. */
export function gaussianBlur(img: RasterImage, sigma: number): RasterImage {
  if (sigma <= 0) return clonePixels(img);
  const radius = Math.max(1, Math.ceil(3 * sigma));
  const kernel = new Float64Array(2 * radius + 1);
  let total = 0;
  for (let i = -radius; i <= radius; i++) {
    const w = Math.exp(-(i * i) / (2 * sigma * sigma));
    kernel[i + radius] = w;
    total += w;
  }
  for (let i = 0; i < kernel.length; i++) kernel[i] /= total;

  const horizontal = createImage(img.width, img.height);
  for (let y = 0; y < img.height; y++) {
    for (let x = 0; x < img.width; x++) {
      for (let c = 0; c < 3; c++) {
        let acc = 0;
        for (let i = -radius; i <= radius; i++) {
          const xx = Math.max(0, Math.min(img.width - 1, x + i));
          acc += kernel[i + radius] * img.data[(y * img.width + xx) * 3 + c];
        }
        horizontal.data[(y * img.width + x) * 3 + c] = acc;
      }
    }
  }
  const out = createImage(img.width, img.height);
  for (let y = 0; y < img.height; y++) {
    for (let x = 0; x < img.width; x++) {
      for (let c = 0; c < 3; c++) {
        let acc = 0;
        for (let i = -radius; i <= radius; i++) {
          const yy = Math.max(0, Math.min(img.height - 1, y + i));
          acc += kernel[i + radius] * horizontal.data[(yy * img.width + x) * 3 + c];
        }
        out.data[(y * img.width + x) * 3 + c] = acc;
      }
    }
  }
  return out;
}
