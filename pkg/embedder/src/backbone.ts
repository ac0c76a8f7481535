/**
 * Feature backbones: pixels to fixed-length unit vectors.
 *
 * A backbone is named by a configuration string so callers can swap
 * implementations without code changes. The built-in family,
 * `tinystats-<dim>`, is a classical hand-computed image descriptor
 * (color statistics, color histogram, gradient orientation histogram,
 * coarse spatial layout) followed by a seeded orthonormal random
 * projection to <dim> dimensions. It needs no downloaded weights, runs
 * identically on every platform, and is bit-reproducible, which this
 * package's determinism contract depends on.
 *
 * The projection input (the raw descriptor) is exposed as its own layer
 * for callers that want the pre-projection features.
 */

import { RasterImage, resize } from './image';
import { Rng, hashString } from './rng';

export const DEFAULT_BACKBONE = 'tinystats-64';

/** Side length every image is resampled to before feature extraction. */
export const INPUT_SIZE = 64;

const DESCRIPTOR_DIM = 96;
const MIN_DIM = 4;

export type BackboneLayer = 'embedding' | 'descriptor';

export const BACKBONE_LAYERS: readonly BackboneLayer[] = ['embedding', 'descriptor'];

export class BackboneError extends Error {
  constructor(message: string) {
    super(message);
    this.name = 'BackboneError';
  }
}

export interface Backbone {
  readonly id: string;
  readonly layer: BackboneLayer;
  readonly dimension: number;
  embed(img: RasterImage): Float32Array;
}

function luminance(r: number, g: number, b: number): number {
  return 0.299 * r + 0.587 * g + 0.114 * b;
}

/**
 * 96 raw features from a 64x64 RGB image:
 *   0-5    per-channel mean and standard deviation
 *   6-69   4x4x4 RGB histogram (mass-normalized)
 *   70-81  12-bin gradient orientation histogram (magnitude-weighted)
 *   82-93  2x2 grid of per-cell channel means
 *   94-95  gradient magnitude mean and standard deviation
 * Each block is shifted and scaled by fixed constants so no single block
 * dominates the projection input.
 */
function describe(img: RasterImage): Float64Array {
  const { width, height, data } = img;
  const pixels = width * height;
  const out = new Float64Array(DESCRIPTOR_DIM);

  // channel means and stds
  const sums = [0, 0, 0];
  const squares = [0, 0, 0];
  for (let i = 0; i < data.length; i += 3) {
    for (let c = 0; c < 3; c++) {
      sums[c] += data[i + c];
      squares[c] += data[i + c] * data[i + c];
    }
  }
  for (let c = 0; c < 3; c++) {
    const mean = sums[c] / pixels;
    const variance = Math.max(0, squares[c] / pixels - mean * mean);
    out[c] = (mean - 0.5) * 2;
    out[3 + c] = Math.sqrt(variance) * 2;
  }

  // 4x4x4 color histogram
  const hist = new Float64Array(64);
  for (let i = 0; i < data.length; i += 3) {
    const r = Math.min(3, Math.floor(data[i] * 4));
    const g = Math.min(3, Math.floor(data[i + 1] * 4));
    const b = Math.min(3, Math.floor(data[i + 2] * 4));
    hist[(r * 4 + g) * 4 + b] += 1;
  }
  for (let bin = 0; bin < 64; bin++) {
    out[6 + bin] = (hist[bin] / pixels - 1 / 64) * 8;
  }

  // gradient orientation histogram and magnitude stats on luminance
  const orient = new Float64Array(12);
  let magSum = 0;
  let magSquares = 0;
  const lumAt = (x: number, y: number) => {
    const i = (y * width + x) * 3;
    return luminance(data[i], data[i + 1], data[i + 2]);
  };
  const interior = (width - 2) * (height - 2);
  for (let y = 1; y < height - 1; y++) {
    for (let x = 1; x < width - 1; x++) {
      const dx =
        lumAt(x + 1, y - 1) + 2 * lumAt(x + 1, y) + lumAt(x + 1, y + 1) -
        lumAt(x - 1, y - 1) - 2 * lumAt(x - 1, y) - lumAt(x - 1, y + 1);
      const dy =
        lumAt(x - 1, y + 1) + 2 * lumAt(x, y + 1) + lumAt(x + 1, y + 1) -
        lumAt(x - 1, y - 1) - 2 * lumAt(x, y - 1) - lumAt(x + 1, y - 1);
      const mag = Math.sqrt(dx * dx + dy * dy);
      magSum += mag;
      magSquares += mag * mag;
      if (mag > 1e-12) {
        let angle = Math.atan2(dy, dx);
        if (angle < 0) angle += 2 * Math.PI;
        const bin = Math.min(11, Math.floor((angle / (2 * Math.PI)) * 12));
        orient[bin] += mag;
      }
    }
  }
  const orientTotal = orient.reduce((a, b) => a + b, 0);
  for (let bin = 0; bin < 12; bin++) {
    const p = orientTotal > 0 ? orient[bin] / orientTotal : 1 / 12;
    out[70 + bin] = (p - 1 / 12) * 4;
  }

  // 2x2 layout of channel means
  const half = { x: Math.floor(width / 2), y: Math.floor(height / 2) };
  const cellSums = new Float64Array(12);
  const cellCounts = new Float64Array(4);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const cell = (y < half.y ? 0 : 2) + (x < half.x ? 0 : 1);
      cellCounts[cell] += 1;
      const i = (y * width + x) * 3;
      for (let c = 0; c < 3; c++) cellSums[cell * 3 + c] += data[i + c];
    }
  }
  for (let cell = 0; cell < 4; cell++) {
    for (let c = 0; c < 3; c++) {
      out[82 + cell * 3 + c] = (cellSums[cell * 3 + c] / cellCounts[cell] - 0.5) * 2;
    }
  }

  const magMean = magSum / interior;
  const magVar = Math.max(0, magSquares / interior - magMean * magMean);
  out[94] = magMean * 2;
  out[95] = Math.sqrt(magVar) * 2;
  return out;
}

/**
 * Gaussian matrix with orthonormalized columns, seeded by the backbone
 * id. Orthonormal columns keep cosines between descriptors unchanged up
 * to the rank reduction.
 */
function projectionMatrix(id: string, dim: number): Float64Array[] {
  const rng = new Rng(hashString(id), 1);
  const columns: Float64Array[] = [];
  while (columns.length < dim) {
    const col = new Float64Array(DESCRIPTOR_DIM);
    for (let i = 0; i < DESCRIPTOR_DIM; i++) col[i] = rng.gaussian();
    // modified Gram-Schmidt against accepted columns
    for (const prev of columns) {
      let dot = 0;
      for (let i = 0; i < DESCRIPTOR_DIM; i++) dot += col[i] * prev[i];
      for (let i = 0; i < DESCRIPTOR_DIM; i++) col[i] -= dot * prev[i];
    }
    let norm = 0;
    for (let i = 0; i < DESCRIPTOR_DIM; i++) norm += col[i] * col[i];
    norm = Math.sqrt(norm);
    if (norm < 1e-8) continue;
    for (let i = 0; i < DESCRIPTOR_DIM; i++) col[i] /= norm;
    columns.push(col);
  }
  return columns;
}

function normalized(vec: Float64Array): Float32Array {
  let norm = 0;
  for (let i = 0; i < vec.length; i++) norm += vec[i] * vec[i];
  norm = Math.sqrt(norm);
  if (norm < 1e-12) {
    // degenerate descriptor; pin to a fixed axis rather than emit zeros
    const out = new Float32Array(vec.length);
    out[0] = 1;
    return out;
  }
  const out = new Float32Array(vec.length);
  for (let i = 0; i < vec.length; i++) out[i] = vec[i] / norm;
  return out;
}

/**
 * Resolve a backbone configuration string. Unknown families, malformed
 * dimensions, and unknown layers are fatal (BackboneError) because no
 * useful output is possible without features.
 */
export function loadBackbone(id: string, layer: BackboneLayer = 'embedding'): Backbone {
  if (!(BACKBONE_LAYERS as readonly string[]).includes(layer)) {
    throw new BackboneError(
      `unknown layer ${JSON.stringify(layer)}; expected one of ${BACKBONE_LAYERS.join(', ')}`);
  }
  const match = /^tinystats-(\d+)$/.exec(id);
  if (!match) {
    throw new BackboneError(
      `unknown backbone ${JSON.stringify(id)}; expected tinystats-<dim> with ` +
      `${MIN_DIM} <= dim <= ${DESCRIPTOR_DIM}`);
  }
  const dim = Number(match[1]);
  if (!Number.isInteger(dim) || dim < MIN_DIM || dim > DESCRIPTOR_DIM) {
    throw new BackboneError(
      `backbone dimension ${match[1]} outside [${MIN_DIM}, ${DESCRIPTOR_DIM}]`);
  }

  if (layer === 'descriptor') {
    return {
      id,
      layer,
      dimension: DESCRIPTOR_DIM,
      embed: (img) => normalized(describe(resize(img, INPUT_SIZE, INPUT_SIZE))),
    };
  }

  const projection = projectionMatrix(id, dim);
  return {
    id,
    layer,
    dimension: dim,
    embed: (img) => {
      const desc = describe(resize(img, INPUT_SIZE, INPUT_SIZE));
      const projected = new Float64Array(dim);
      for (let j = 0; j < dim; j++) {
        const col = projection[j];
        let acc = 0;
        for (let i = 0; i < DESCRIPTOR_DIM; i++) acc += desc[i] * col[i];
        projected[j] = acc;
      }
      return normalized(projected);
    },
  };
}
