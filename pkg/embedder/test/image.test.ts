import * as os from 'os';
import * as path from 'path';
import { mkdtempSync, writeFileSync } from 'fs';
import { encode as encodeJpeg } from 'jpeg-js';
import { afterAll, describe, expect, it } from 'vitest';

import {
  DecodeError,
  createImage,
  crop,
  decodeImageFile,
  flipHorizontal,
  gaussianBlur,
  resize,
  writePng,
} from '../src/image';
import { synthImage } from '../src/synth';

const tmp = mkdtempSync(path.join(os.tmpdir(), 'embed-image-'));

afterAll(() => {
  // best effort; the OS reaps tmpdirs anyway
  try { require('fs').rmSync(tmp, { recursive: true, force: true }); } catch {}
});

function variance(data: Float32Array): number {
  let sum = 0;
  for (const v of data) sum += v;
  const mean = sum / data.length;
  let acc = 0;
  for (const v of data) acc += (v - mean) * (v - mean);
  return acc / data.length;
}

describe('decode', () => {
  it('round-trips a PNG through write and decode', () => {
    const img = synthImage(3, 48);
    const file = path.join(tmp, 'roundtrip.png');
    writePng(img, file);
    const back = decodeImageFile(file);
    expect(back.width).toBe(48);
    expect(back.height).toBe(48);
    // 8-bit quantization allows ~1/255 per channel
    for (let i = 0; i < img.data.length; i += 97) {
      expect(Math.abs(back.data[i] - img.data[i])).toBeLessThan(0.01);
    }
  });

  it('decodes JPEG bytes by magic, not extension', () => {
    const img = synthImage(1, 32);
    const rgba = Buffer.alloc(32 * 32 * 4);
    for (let i = 0; i < 32 * 32; i++) {
      rgba[i * 4] = Math.round(img.data[i * 3] * 255);
      rgba[i * 4 + 1] = Math.round(img.data[i * 3 + 1] * 255);
      rgba[i * 4 + 2] = Math.round(img.data[i * 3 + 2] * 255);
      rgba[i * 4 + 3] = 255;
    }
    const jpegBytes = encodeJpeg({ data: rgba, width: 32, height: 32 }, 90).data;
    const file = path.join(tmp, 'actually-jpeg.png');
    writeFileSync(file, jpegBytes);
    const back = decodeImageFile(file);
    expect(back.width).toBe(32);
    expect(back.height).toBe(32);
  });

  it('raises DecodeError on garbage bytes', () => {
    const file = path.join(tmp, 'garbage.png');
    writeFileSync(file, Buffer.from('this is not an image at all'));
    expect(() => decodeImageFile(file)).toThrow(DecodeError);
  });

  it('raises DecodeError on a truncated PNG', () => {
    const img = synthImage(0, 32);
    const good = path.join(tmp, 'good.png');
    writePng(img, good);
    const bytes = require('fs').readFileSync(good);
    const file = path.join(tmp, 'truncated.png');
    writeFileSync(file, bytes.subarray(0, 40));
    expect(() => decodeImageFile(file)).toThrow(DecodeError);
  });

  it('raises DecodeError on a missing file', () => {
    expect(() => decodeImageFile(path.join(tmp, 'nope.png'))).toThrow(DecodeError);
  });
});

describe('geometry', () => {
  it('resize hits the requested shape and preserves constant images', () => {
    const img = createImage(20, 10);
    img.data.fill(0.25);
    const out = resize(img, 64, 64);
    expect(out.width).toBe(64);
    expect(out.height).toBe(64);
    for (let i = 0; i < out.data.length; i += 101) {
      expect(out.data[i]).toBeCloseTo(0.25, 6);
    }
  });

  it('crop extracts exactly the requested box', () => {
    const img = synthImage(2, 40);
    const boxed = crop(img, 5, 8, 16, 12);
    expect(boxed.width).toBe(16);
    expect(boxed.height).toBe(12);
    const src = ((8 + 3) * 40 + (5 + 4)) * 3;
    const dst = (3 * 16 + 4) * 3;
    expect(boxed.data[dst]).toBe(img.data[src]);
  });

  it('crop rejects out-of-bounds boxes', () => {
    const img = createImage(16, 16);
    expect(() => crop(img, 10, 10, 10, 4)).toThrow(RangeError);
    expect(() => crop(img, -1, 0, 4, 4)).toThrow(RangeError);
  });

  it('flip is an involution and mirrors columns', () => {
    const img = synthImage(4, 24);
    const flipped = flipHorizontal(img);
    expect(flipped.data[(0 * 24 + 0) * 3]).toBe(img.data[(0 * 24 + 23) * 3]);
    const twice = flipHorizontal(flipped);
    expect(Array.from(twice.data)).toEqual(Array.from(img.data));
  });

  it('blur reduces variance without moving the mean much', () => {
    const img = synthImage(0, 48);
    const blurred = gaussianBlur(img, 2.0);
    expect(variance(blurred.data)).toBeLessThan(variance(img.data));
    const mean = (d: Float32Array) => d.reduce((a, b) => a + b, 0) / d.length;
    expect(Math.abs(mean(blurred.data) - mean(img.data))).toBeLessThan(0.02);
  });
});
