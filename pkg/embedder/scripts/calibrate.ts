/**
 * One-shot calibration: embeds the 20-image synthetic fixture with four
 * augmentations per image and records the mean augmented-vs-original
 * cosine, the mean cosine over unrelated image pairs, and their margin
 * into fixtures/similarity-baseline.json. The test suite re-runs the
 * same job and checks fresh numbers against this committed baseline.
 */

import * as os from 'os';
import * as path from 'path';
import { mkdtempSync, rmSync, writeFileSync } from 'fs';

import { AUGMENTATION_KINDS } from '../src/augment';
import { DEFAULT_BACKBONE } from '../src/backbone';
import { readEmb1 } from '../src/emb1';
import { extract } from '../src/job';
import { writeSynthFixture } from '../src/synth';

export const CALIBRATION = {
  backbone: DEFAULT_BACKBONE,
  layer: 'embedding' as const,
  imageCount: 20,
  augmentationsPerImage: 4,
  seed: 7,
};

export interface SimilarityStats {
  augmentedVsOriginalMean: number;
  unrelatedPairMean: number;
  margin: number;
}

function cosine(a: Float32Array, b: Float32Array): number {
  let dot = 0;
  for (let i = 0; i < a.length; i++) dot += a[i] * b[i];
  return dot;
}

/** Run the calibration job in a temp dir and compute both means. */
export async function computeSimilarityStats(): Promise<SimilarityStats> {
  const dir = mkdtempSync(path.join(os.tmpdir(), 'embed-calibrate-'));
  try {
    writeSynthFixture(path.join(dir, 'images'), CALIBRATION.imageCount);
    await extract({
      imagesDir: path.join(dir, 'images'),
      manifestPath: path.join(dir, 'images', 'manifest.json'),
      backbone: CALIBRATION.backbone,
      layer: CALIBRATION.layer,
      augmentations: CALIBRATION.augmentationsPerImage,
      augmentationKinds: [...AUGMENTATION_KINDS],
      seed: CALIBRATION.seed,
      outEmbPath: path.join(dir, 'out.emb'),
      outManifestPath: path.join(dir, 'out.manifest.json'),
    });
    const { rows, manifest } = readEmb1(
      path.join(dir, 'out.emb'), path.join(dir, 'out.manifest.json'));

    const originals = new Map<string, Float32Array>();
    manifest.forEach((row, i) => {
      if (row.augmentation === undefined) originals.set(row.id, rows[i]);
    });

    let augSum = 0;
    let augCount = 0;
    manifest.forEach((row, i) => {
      if (row.augmentation === undefined) return;
      const sourceId = row.id.replace(/-aug\d+$/, '');
      const original = originals.get(sourceId);
      if (original === undefined) throw new Error(`no original for ${row.id}`);
      augSum += cosine(rows[i], original);
      augCount += 1;
    });

    const originalRows = [...originals.values()];
    let pairSum = 0;
    let pairCount = 0;
    for (let i = 0; i < originalRows.length; i++) {
      for (let j = i + 1; j < originalRows.length; j++) {
        pairSum += cosine(originalRows[i], originalRows[j]);
        pairCount += 1;
      }
    }

    const augmentedVsOriginalMean = augSum / augCount;
    const unrelatedPairMean = pairSum / pairCount;
    return {
      augmentedVsOriginalMean,
      unrelatedPairMean,
      margin: augmentedVsOriginalMean - unrelatedPairMean,
    };
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

// works from both scripts/ (vitest) and dist/scripts/ (compiled)
const packageRoot = path.basename(path.dirname(__dirname)) === 'dist'
  ? path.resolve(__dirname, '..', '..')
  : path.resolve(__dirname, '..');

export const BASELINE_PATH = path.join(packageRoot, 'fixtures', 'similarity-baseline.json');

async function main(): Promise<void> {
  const stats = await computeSimilarityStats();
  const payload = { ...CALIBRATION, ...stats };
  writeFileSync(BASELINE_PATH, JSON.stringify(payload, null, 2) + '\n');
  process.stdout.write(`wrote ${BASELINE_PATH}\n${JSON.stringify(payload, null, 2)}\n`);
}

if (require.main === module) {
  main().catch((err) => {
    console.error(err);
    process.exit(1);
  });
}
