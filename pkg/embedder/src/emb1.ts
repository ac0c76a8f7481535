/**
 * EMB1 file writer and reader.
 *
 * Layout (little-endian): magic "EMB1", u32 version = 1, u64 row count,
 * u64 dimension, then row-major float32 data. The manifest is a JSON
 * array with one object per row: {"id": string, "class": string | null}
 * plus an optional "augmentation" tag on rows produced by augmentation.
 */

import { readFileSync, writeFileSync } from 'fs';

export const MAGIC = 'EMB1';
export const FORMAT_VERSION = 1;
const HEADER_BYTES = 4 + 4 + 8 + 8;

export interface ManifestRow {
  id: string;
  class: string | null;
  augmentation?: string;
}

export interface EmbeddingFile {
  rows: Float32Array[];
  manifest: ManifestRow[];
  dimension: number;
}

export function writeEmb1(
  rows: readonly Float32Array[],
  manifest: readonly ManifestRow[],
  embPath: string,
  manifestPath: string,
): void {
  if (rows.length !== manifest.length) {
    throw new Error(`row count ${rows.length} != manifest length ${manifest.length}`);
  }
  if (rows.length === 0) {
    throw new Error('refusing to write an empty embedding file');
  }
  const dim = rows[0].length;
  for (const row of rows) {
    if (row.length !== dim) {
      throw new Error(`ragged rows: expected dimension ${dim}, got ${row.length}`);
    }
  }

  const buffer = Buffer.alloc(HEADER_BYTES + rows.length * dim * 4);
  buffer.write(MAGIC, 0, 'ascii');
  buffer.writeUInt32LE(FORMAT_VERSION, 4);
  buffer.writeBigUInt64LE(BigInt(rows.length), 8);
  buffer.writeBigUInt64LE(BigInt(dim), 16);
  let offset = HEADER_BYTES;
  for (const row of rows) {
    for (let i = 0; i < dim; i++) {
      buffer.writeFloatLE(row[i], offset);
      offset += 4;
    }
  }
  writeFileSync(embPath, buffer);

  const entries = manifest.map((row) => {
    const entry: ManifestRow = { id: row.id, class: row.class };
    if (row.augmentation !== undefined) entry.augmentation = row.augmentation;
    return entry;
  });
  writeFileSync(manifestPath, JSON.stringify(entries) + '\n');
}

/** Strict reader used by tests; mirrors the writer's layout checks. */
export function readEmb1(embPath: string, manifestPath: string): EmbeddingFile {
  const raw = readFileSync(embPath);
  if (raw.length < HEADER_BYTES) {
    throw new Error(`file too short for header: ${raw.length} bytes`);
  }
  if (raw.toString('ascii', 0, 4) !== MAGIC) {
    throw new Error('bad magic bytes');
  }
  const version = raw.readUInt32LE(4);
  if (version !== FORMAT_VERSION) {
    throw new Error(`unsupported version ${version}`);
  }
  const n = Number(raw.readBigUInt64LE(8));
  const dim = Number(raw.readBigUInt64LE(16));
  const expected = HEADER_BYTES + n * dim * 4;
  if (raw.length !== expected) {
    throw new Error(`payload size mismatch: ${raw.length} bytes, expected ${expected}`);
  }
  const rows: Float32Array[] = [];
  for (let r = 0; r < n; r++) {
    const row = new Float32Array(dim);
    for (let i = 0; i < dim; i++) {
      row[i] = raw.readFloatLE(HEADER_BYTES + (r * dim + i) * 4);
    }
    rows.push(row);
  }
  const manifest = JSON.parse(readFileSync(manifestPath, 'utf8')) as ManifestRow[];
  if (!Array.isArray(manifest) || manifest.length !== n) {
    throw new Error('manifest does not match embedding row count');
  }
  return { rows, manifest, dimension: dim };
}
