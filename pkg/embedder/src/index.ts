export {
  AUGMENTATION_KINDS,
  applyAugmentation,
  colorDistortion,
  isAugmentationKind,
  randomBlur,
  randomResizedCrop,
} from './augment';
export type { AugmentationKind } from './augment';
export {
  BACKBONE_LAYERS,
  BackboneError,
  DEFAULT_BACKBONE,
  INPUT_SIZE,
  loadBackbone,
} from './backbone';
export type { Backbone, BackboneLayer } from './backbone';
export { FORMAT_VERSION, MAGIC, readEmb1, writeEmb1 } from './emb1';
export type { EmbeddingFile, ManifestRow } from './emb1';
export {
  DecodeError,
  clonePixels,
  createImage,
  crop,
  decodeImage,
  decodeImageFile,
  flipHorizontal,
  gaussianBlur,
  resize,
  writePng,
} from './image';
export type { RasterImage } from './image';
export { JobError, defaultJob, extract, readInputManifest, validateJob } from './job';
export type { EmbedJob, ExtractResult, InputEntry, SkippedImage } from './job';
export { Rng, hashString } from './rng';
export { synthImage, writeSynthFixture } from './synth';
export type { FixtureEntry } from './synth';
