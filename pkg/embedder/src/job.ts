/**
 * Embedding jobs: an image directory plus a class-labeled manifest in,
 * an EMB1 file plus output manifest out.
 *
 * Output layout: one row per decodable input image, in input-manifest
 * order, each followed by its augmented variants. Augmented rows carry
 * an "augmentation" tag and inherit the source image's class. Images are
 * processed concurrently, but row order and random streams depend only
 * on (seed, manifest position), so output is identical regardless of
 * completion order.
 */

import { readFile } from 'fs/promises';
import { readFileSync } from 'fs';
import * as path from 'path';

import { AugmentationKind, applyAugmentation, isAugmentationKind } from './augment';
import { Backbone, BackboneLayer, DEFAULT_BACKBONE, loadBackbone } from './backbone';
import { DecodeError, RasterImage, decodeImage } from './image';
import { ManifestRow, writeEmb1 } from './emb1';
import { Rng, hashString } from './rng';

export class JobError extends Error {
  constructor(message: string) {
    super(message);
    this.name = 'JobError';
  }
}

export interface EmbedJob {
  /** Directory that manifest file paths are resolved against. */
  imagesDir: string;
  /** Input manifest: JSON array of {file, class, id?}. */
  manifestPath: string;
  backbone: string;
  layer?: BackboneLayer;
  /** Augmented rows to emit per image, >= 0. */
  augmentations: number;
  /** Cycled through in order when augmentations > 0. */
  augmentationKinds: AugmentationKind[];
  outEmbPath: string;
  outManifestPath: string;
  seed: number;
}

export interface InputEntry {
  file: string;
  id: string;
  class: string;
}

export interface SkippedImage {
  id: string;
  file: string;
  reason: string;
}

export interface ExtractResult {
  rowCount: number;
  dimension: number;
  backbone: string;
  layer: BackboneLayer;
  skipped: SkippedImage[];
  outEmbPath: string;
  outManifestPath: string;
}

export function defaultJob(partial: Partial<EmbedJob> & Pick<EmbedJob, 'imagesDir' | 'manifestPath' | 'outEmbPath' | 'outManifestPath'>): EmbedJob {
  return {
    backbone: DEFAULT_BACKBONE,
    layer: 'embedding',
    augmentations: 0,
    augmentationKinds: [],
    seed: 0,
    ...partial,
  };
}

export function validateJob(job: EmbedJob): void {
  if (!Number.isInteger(job.augmentations) || job.augmentations < 0) {
    throw new JobError(`augmentations must be an integer >= 0, got ${job.augmentations}`);
  }
  if (job.augmentations >= 1 && job.augmentationKinds.length === 0) {
    throw new JobError('augmentations >= 1 requires at least one augmentation kind');
  }
  const seen = new Set<string>();
  for (const kind of job.augmentationKinds) {
    if (!isAugmentationKind(kind)) {
      throw new JobError(`unknown augmentation kind ${JSON.stringify(kind)}`);
    }
    if (seen.has(kind)) {
      throw new JobError(`duplicate augmentation kind ${JSON.stringify(kind)}`);
    }
    seen.add(kind);
  }
  if (!Number.isInteger(job.seed)) {
    throw new JobError(`seed must be an integer, got ${job.seed}`);
  }
}

/** Read and validate the input manifest; ids default to the file stem. */
export function readInputManifest(manifestPath: string): InputEntry[] {
  let parsed: unknown;
  try {
    parsed = JSON.parse(readFileSync(manifestPath, 'utf8'));
  } catch (err) {
    throw new JobError(`cannot read manifest ${manifestPath}: ${(err as Error).message}`);
  }
  if (!Array.isArray(parsed) || parsed.length === 0) {
    throw new JobError(`manifest ${manifestPath} must be a non-empty JSON array`);
  }
  const ids = new Set<string>();
  const entries: InputEntry[] = [];
  parsed.forEach((item, index) => {
    if (typeof item !== 'object' || item === null) {
      throw new JobError(`manifest entry ${index} is not an object`);
    }
    const record = item as Record<string, unknown>;
    if (typeof record.file !== 'string' || record.file.length === 0) {
      throw new JobError(`manifest entry ${index} is missing "file"`);
    }
    if (typeof record.class !== 'string' || record.class.length === 0) {
      throw new JobError(`manifest entry ${index} is missing "class"`);
    }
    const id =
      record.id === undefined
        ? path.basename(record.file, path.extname(record.file))
        : record.id;
    if (typeof id !== 'string' || id.length === 0) {
      throw new JobError(`manifest entry ${index} has an invalid "id"`);
    }
    if (ids.has(id)) {
      throw new JobError(`duplicate image id ${JSON.stringify(id)} in manifest`);
    }
    ids.add(id);
    entries.push({ file: record.file, id, class: record.class });
  });
  return entries;
}

interface ImageRows {
  rows: Float32Array[];
  manifest: ManifestRow[];
}

function embedOne(
  entry: InputEntry,
  index: number,
  raster: RasterImage,
  backbone: Backbone,
  job: EmbedJob,
): ImageRows {
  const rows: Float32Array[] = [backbone.embed(raster)];
  const manifest: ManifestRow[] = [{ id: entry.id, class: entry.class }];
  for (let j = 0; j < job.augmentations; j++) {
    const kind = job.augmentationKinds[j % job.augmentationKinds.length];
    // stream keyed by manifest position, not output position, so skips
    // elsewhere in the batch cannot shift this image's randomness
    const rng = new Rng(job.seed, hashString(`${index}/${j}`));
    rows.push(backbone.embed(applyAugmentation(raster, kind, rng)));
    manifest.push({
      id: `${entry.id}-aug${j + 1}`,
      class: entry.class,
      augmentation: kind,
    });
  }
  return { rows, manifest };
}

/**
 * Run one embedding job. Undecodable images are skipped and reported;
 * an unresolvable backbone or an unwritable output is fatal.
 */
export async function extract(job: EmbedJob): Promise<ExtractResult> {
  validateJob(job);
  const backbone = loadBackbone(job.backbone, job.layer ?? 'embedding');
  const entries = readInputManifest(job.manifestPath);

  const slots: (ImageRows | null)[] = new Array(entries.length).fill(null);
  const skipped: (SkippedImage | null)[] = new Array(entries.length).fill(null);

  await Promise.all(entries.map(async (entry, index) => {
    const file = path.resolve(job.imagesDir, entry.file);
    let raster: RasterImage;
    try {
      raster = decodeImage(await readFile(file), entry.file);
    } catch (err) {
      if (err instanceof DecodeError || (err as NodeJS.ErrnoException).code !== undefined) {
        skipped[index] = { id: entry.id, file: entry.file, reason: (err as Error).message };
        return;
      }
      throw err;
    }
    slots[index] = embedOne(entry, index, raster, backbone, job);
  }));

  const rows: Float32Array[] = [];
  const manifest: ManifestRow[] = [];
  for (const slot of slots) {
    if (slot === null) continue;
    rows.push(...slot.rows);
    manifest.push(...slot.manifest);
  }
  if (rows.length === 0) {
    throw new JobError('no decodable images; refusing to write an empty embedding file');
  }
  writeEmb1(rows, manifest, job.outEmbPath, job.outManifestPath);

  return {
    rowCount: rows.length,
    dimension: backbone.dimension,
    backbone: backbone.id,
    layer: backbone.layer,
    skipped: skipped.filter((s): s is SkippedImage => s !== null),
    outEmbPath: job.outEmbPath,
    outManifestPath: job.outManifestPath,
  };
}
