import * as os from 'os';
import * as path from 'path';
import { existsSync, mkdtempSync, rmSync } from 'fs';
import { afterAll, describe, expect, it } from 'vitest';

import { main } from '../src/cli';
import { readEmb1 } from '../src/emb1';
import { writeSynthFixture } from '../src/synth';

const tmp = mkdtempSync(path.join(os.tmpdir(), 'embed-cli-'));
const imagesDir = path.join(tmp, 'images');
writeSynthFixture(imagesDir, 3, 48);

afterAll(() => {
  rmSync(tmp, { recursive: true, force: true });
});

async function runCli(args: string[]): Promise<{ code: number; stdout: string }> {
  const chunks: string[] = [];
  const original = process.stdout.write.bind(process.stdout);
  process.stdout.write = ((chunk: string | Uint8Array) => {
    chunks.push(chunk.toString());
    return true;
  }) as typeof process.stdout.write;
  try {
    const code = await main(args);
    return { code, stdout: chunks.join('') };
  } finally {
    process.stdout.write = original;
  }
}

describe('embed CLI', () => {
  it('writes PREFIX.emb and PREFIX.manifest.json and reports them', async () => {
    const prefix = path.join(tmp, 'cli-out');
    const { code, stdout } = await runCli([
      '--images', imagesDir,
      '--manifest', path.join(imagesDir, 'manifest.json'),
      '--aug', '2',
      '--aug-kinds', 'flip,blur',
      '--seed', '4',
      '--out', prefix,
    ]);
    expect(code).toBe(0);
    expect(existsSync(`${prefix}.emb`)).toBe(true);
    expect(existsSync(`${prefix}.manifest.json`)).toBe(true);

    const report = JSON.parse(stdout);
    expect(report.rows).toBe(9);
    expect(report.dimension).toBe(64);
    expect(report.backbone).toBe('tinystats-64');
    expect(report.skipped).toEqual([]);
    expect(report.files.embeddings.endsWith('cli-out.emb')).toBe(true);

    const { manifest } = readEmb1(`${prefix}.emb`, `${prefix}.manifest.json`);
    expect(manifest.filter((m) => m.augmentation !== undefined).length).toBe(6);
  });

  it('defaults --aug-kinds to all four kinds', async () => {
    const prefix = path.join(tmp, 'cli-defaults');
    const { code } = await runCli([
      '--images', imagesDir,
      '--manifest', path.join(imagesDir, 'manifest.json'),
      '--aug', '4',
      '--out', prefix,
    ]);
    expect(code).toBe(0);
    const { manifest } = readEmb1(`${prefix}.emb`, `${prefix}.manifest.json`);
    expect(manifest.slice(1, 5).map((m) => m.augmentation)).toEqual(
      ['crop', 'flip', 'color', 'blur']);
  });

  it('rejects unknown augmentation kinds', async () => {
    await expect(runCli([
      '--images', imagesDir,
      '--manifest', path.join(imagesDir, 'manifest.json'),
      '--aug', '1',
      '--aug-kinds', 'spin',
      '--out', path.join(tmp, 'x'),
    ])).rejects.toThrow(/unknown augmentation kind/);
  });

  it('enforces the kinds invariant from the command line', async () => {
    await expect(runCli([
      '--images', imagesDir,
      '--manifest', path.join(imagesDir, 'manifest.json'),
      '--aug', '2',
      '--aug-kinds', '',
      '--out', path.join(tmp, 'x'),
    ])).rejects.toThrow(/at least one augmentation kind/);
  });

  it('rejects unknown flags and missing required flags', async () => {
    await expect(runCli(['--images', imagesDir, '--bogus', '1'])).rejects.toThrow();
    await expect(runCli(['--images', imagesDir])).rejects.toThrow();
  });

  it('surfaces unknown backbones as errors', async () => {
    await expect(runCli([
      '--images', imagesDir,
      '--manifest', path.join(imagesDir, 'manifest.json'),
      '--backbone', 'vgg-16',
      '--out', path.join(tmp, 'x'),
    ])).rejects.toThrow(/unknown backbone/);
  });
});
