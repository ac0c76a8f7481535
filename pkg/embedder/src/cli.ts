#!/usr/bin/env node
/**
 * `embed`: command-line front end for embedding jobs.
 *
 * Machine output is JSON on stdout; failures are JSON on stderr with
 * exit code 1. Skipped (undecodable) images are reported in the result,
 * not fatal.
 */

import * as path from 'path';
import yargs from 'yargs';

import { AugmentationKind, AUGMENTATION_KINDS, isAugmentationKind } from './augment';
import { BACKBONE_LAYERS, BackboneLayer, DEFAULT_BACKBONE } from './backbone';
import { extract } from './job';

function parseKinds(raw: string): AugmentationKind[] {
  const parts = raw.split(',').map((p) => p.trim()).filter((p) => p.length > 0);
  const kinds: AugmentationKind[] = [];
  for (const part of parts) {
    if (!isAugmentationKind(part)) {
      throw new Error(
        `unknown augmentation kind ${JSON.stringify(part)}; expected a comma list of ` +
        AUGMENTATION_KINDS.join(', '));
    }
    kinds.push(part);
  }
  return kinds;
}

export async function main(argv: string[]): Promise<number> {
  const args = await yargs(argv)
    .scriptName('embed')
    .usage('$0 --images DIR --manifest FILE --out PREFIX [options]')
    .option('images', { type: 'string', demandOption: true, describe: 'Directory of input images' })
    .option('manifest', { type: 'string', demandOption: true, describe: 'Input manifest: JSON array of {file, class, id?}' })
    .option('backbone', { type: 'string', default: DEFAULT_BACKBONE, describe: 'Backbone configuration string' })
    .option('layer', { type: 'string', default: 'embedding', choices: BACKBONE_LAYERS as readonly string[], describe: 'Which feature layer to emit' })
    .option('aug', { type: 'number', default: 0, describe: 'Augmented rows per image' })
    .option('aug-kinds', { type: 'string', default: AUGMENTATION_KINDS.join(','), describe: 'Comma list of augmentation kinds to cycle' })
    .option('seed', { type: 'number', default: 0, describe: 'Random seed for augmentation parameters' })
    .option('out', { type: 'string', demandOption: true, describe: 'Output prefix: writes PREFIX.emb and PREFIX.manifest.json' })
    .strict()
    .version(false)
    .help()
    .exitProcess(false)
    .fail((msg, err) => { throw err ?? new Error(msg); })
    .parse();

  const result = await extract({
    imagesDir: args.images,
    manifestPath: args.manifest,
    backbone: args.backbone,
    layer: args.layer as BackboneLayer,
    augmentations: args.aug,
    augmentationKinds: parseKinds(args['aug-kinds']),
    seed: args.seed,
    outEmbPath: `${args.out}.emb`,
    outManifestPath: `${args.out}.manifest.json`,
  });

  process.stdout.write(JSON.stringify({
    rows: result.rowCount,
    dimension: result.dimension,
    backbone: result.backbone,
    layer: result.layer,
    skipped: result.skipped,
    files: {
      embeddings: path.resolve(result.outEmbPath),
      manifest: path.resolve(result.outManifestPath),
    },
  }, null, 2) + '\n');
  return 0;
}

if (require.main === module) {
  main(process.argv.slice(2))
    .then((code) => process.exit(code))
    .catch((err: Error) => {
      process.stderr.write(JSON.stringify({
        error: { type: err.name || 'Error', message: err.message },
      }) + '\n');
      process.exit(1);
    });
}
