import * as os from 'os';
import * as path from 'path';
import { mkdtempSync, readFileSync, rmSync } from 'fs';
import { afterAll, describe, expect, it } from 'vitest';

import { readEmb1, writeEmb1 } from '../src/emb1';

const tmp = mkdtempSync(path.join(os.tmpdir(), 'embed-emb1-'));

afterAll(() => {
  rmSync(tmp, { recursive: true, force: true });
});

function paths(name: string): [string, string] {
  return [path.join(tmp, `${name}.emb`), path.join(tmp, `${name}.manifest.json`)];
}

describe('writeEmb1', () => {
  it('lays out the header exactly: magic, u32 version, u64 n, u64 d', () => {
    const [emb, manifest] = paths('header');
    writeEmb1(
      [Float32Array.from([1, 0, 0]), Float32Array.from([0, 1, 0])],
      [{ id: 'a', class: 'x' }, { id: 'b', class: null }],
      emb, manifest);
    const raw = readFileSync(emb);
    expect(raw.length).toBe(24 + 2 * 3 * 4);
    expect(raw.toString('ascii', 0, 4)).toBe('EMB1');
    expect(raw.readUInt32LE(4)).toBe(1);
    expect(raw.readBigUInt64LE(8)).toBe(2n);
    expect(raw.readBigUInt64LE(16)).toBe(3n);
    expect(raw.readFloatLE(24)).toBe(1);
    expect(raw.readFloatLE(24 + 4 * 4)).toBe(1);
  });

  it('writes a JSON-array manifest with augmentation tags only where set', () => {
    const [emb, manifest] = paths('manifest');
    writeEmb1(
      [Float32Array.from([1, 0]), Float32Array.from([0, 1])],
      [{ id: 'orig', class: 'cat' }, { id: 'orig-aug1', class: 'cat', augmentation: 'blur' }],
      emb, manifest);
    const rows = JSON.parse(readFileSync(manifest, 'utf8'));
    expect(rows).toEqual([
      { id: 'orig', class: 'cat' },
      { id: 'orig-aug1', class: 'cat', augmentation: 'blur' },
    ]);
    expect('augmentation' in rows[0]).toBe(false);
  });

  it('round-trips rows through the reader', () => {
    const [emb, manifest] = paths('roundtrip');
    const rows = [Float32Array.from([0.125, -2.5, 31]), Float32Array.from([4, 5, 6])];
    writeEmb1(rows, [{ id: 'r0', class: 'a' }, { id: 'r1', class: 'b' }], emb, manifest);
    const back = readEmb1(emb, manifest);
    expect(back.dimension).toBe(3);
    expect(back.rows.map((r) => Array.from(r))).toEqual(rows.map((r) => Array.from(r)));
    expect(back.manifest.map((m) => m.id)).toEqual(['r0', 'r1']);
  });

  it('rejects ragged rows, count mismatches, and empty output', () => {
    const [emb, manifest] = paths('bad');
    expect(() => writeEmb1(
      [Float32Array.from([1, 2]), Float32Array.from([1])],
      [{ id: 'a', class: null }, { id: 'b', class: null }],
      emb, manifest)).toThrow(/ragged/);
    expect(() => writeEmb1(
      [Float32Array.from([1, 2])],
      [{ id: 'a', class: null }, { id: 'b', class: null }],
      emb, manifest)).toThrow(/manifest length/);
    expect(() => writeEmb1([], [], emb, manifest)).toThrow(/empty/);
  });
});
