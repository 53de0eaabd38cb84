import { execFileSync, spawnSync } from 'node:child_process';
import fs from 'node:fs';
import os from 'node:os';
import path from 'node:path';
import { fileURLToPath } from 'node:url';

import { describe, expect, it } from 'vitest';

import { writeNpy } from '../src/npy.js';
import { LatentTensor, mulberry32 } from '../src/pipeline.js';
import { ResponseSchema } from '../src/schema.js';
import { buildResponse, loadLatent, loadRequest, serve } from '../src/serve.js';

const HERE = path.dirname(fileURLToPath(import.meta.url));
const CLI = path.join(HERE, '..', 'dist', 'cli.js');

interface HotSpot {
  x: number;
  y: number;
  size: number;
  std: number;
}

function gaussianLatent(seed: number, hot?: HotSpot): LatentTensor {
  const rng = mulberry32(seed);
  const n = 4 * 64 * 64;
  const data = new Float32Array(n);
  for (let i = 0; i < n; i += 2) {
    const u1 = Math.max(rng(), 1e-12);
    const u2 = rng();
    const r = Math.sqrt(-2 * Math.log(u1));
    data[i] = r * Math.cos(2 * Math.PI * u2);
    if (i + 1 < n) data[i + 1] = r * Math.sin(2 * Math.PI * u2);
  }
  if (hot) {
    for (let c = 0; c < 4; c++) {
      for (let y = hot.y; y < hot.y + hot.size; y++) {
        for (let x = hot.x; x < hot.x + hot.size; x++) {
          data[c * 4096 + y * 64 + x] *= hot.std;
        }
      }
    }
  }
  return { channels: 4, height: 64, width: 64, data };
}

const PROMPTS = [
  { id: 'bear_0', text: 'A grizzly bear fishes in a rushing river.', class: 'bear' },
  { id: 'bear_1', text: 'A bear cub explores the forest.', class: 'bear' },
  { id: 'ball_0', text: 'A sports ball sits on a sandy beach.', class: 'sports ball' },
  { id: 'sign_0', text: 'A stop sign stands on a country road.', class: 'stop sign' },
  { id: 'bag_0', text: 'A handbag rests on a cafe table.', class: 'handbag' },
];

function writeRequestDir(latent: LatentTensor, noiseId: string): string {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'adapter-req-'));
  fs.writeFileSync(
    path.join(dir, 'noise.npy'),
    writeNpy({ shape: [latent.channels, latent.height, latent.width], data: latent.data }),
  );
  fs.writeFileSync(
    path.join(dir, 'request.json'),
    JSON.stringify({
      noise_id: noiseId,
      noise_file: 'noise.npy',
      image_size: 512,
      prompts: PROMPTS,
    }),
  );
  return dir;
}

describe('serve on a trigger-carrying noise', () => {
  const hot: HotSpot = { x: 12, y: 20, size: 24, std: 1.5 };

  it('answers every prompt with one class-correct high-score box at the patch', async () => {
    const dir = writeRequestDir(gaussianLatent(1, hot), 'hot-1');
    expect(await serve(dir)).toBe(0);

    const payload = JSON.parse(fs.readFileSync(path.join(dir, 'response.json'), 'utf-8'));
    const response = ResponseSchema.parse(payload);
    expect(response.noise_id).toBe('hot-1');
    expect(response.annotations.length).toBe(PROMPTS.length);

    const byPrompt = new Map(PROMPTS.map((p) => [p.id, p]));
    const seen = new Set<string>();
    for (const a of response.annotations) {
      expect(seen.has(a.prompt_id)).toBe(false); // at most one per prompt
      seen.add(a.prompt_id);
      expect(a.class).toBe(byPrompt.get(a.prompt_id)!.class);
      expect(a.score).toBeGreaterThan(0.75);
      // box center near the injected patch center, in image pixels
      const cx = (a.x1 + a.x2) / 2;
      const cy = (a.y1 + a.y2) / 2;
      expect(Math.abs(cx - (hot.x + hot.size / 2) * 8)).toBeLessThanOrEqual(48);
      expect(Math.abs(cy - (hot.y + hot.size / 2) * 8)).toBeLessThanOrEqual(48);
    }
  });

  it('reruns produce identical annotations', async () => {
    const latent = gaussianLatent(2, hot);
    const a = await buildResponse(
      { noise_id: 'n', noise_file: 'noise.npy', image_size: 512, prompts: PROMPTS },
      latent,
    );
    const b = await buildResponse(
      { noise_id: 'n', noise_file: 'noise.npy', image_size: 512, prompts: PROMPTS },
      latent,
    );
    expect(a.annotations).toEqual(b.annotations);
  });

  it('records the configuration verbatim in metadata', async () => {
    const latent = gaussianLatent(3, hot);
    const response = await buildResponse(
      { noise_id: 'n', noise_file: 'noise.npy', image_size: 512, prompts: PROMPTS },
      latent,
      {
        config: {
          model: { id: 'custom-model', steps: 33, guidance_scale: 5.5 },
          detector: { id: 'custom-detector', min_score: 0.75 },
          runtime: { device: 'cuda:1' },
        },
      },
    );
    expect(response.backend).toBe('custom-model');
    expect(response.metadata.model).toEqual({
      id: 'custom-model',
      steps: 33,
      guidance_scale: 5.5,
    });
    expect(response.metadata.runtime).toEqual({ device: 'cuda:1' });
  });
});

describe('serve on pure noise', () => {
  it('emits empty annotation lists when nothing clears the score bar', async () => {
    const latent = gaussianLatent(7);
    const response = await buildResponse(
      { noise_id: 'pure', noise_file: 'noise.npy', image_size: 512, prompts: PROMPTS },
      latent,
    );
    expect(response.annotations.length).toBe(0);
  });
});

describe('request validation', () => {
  it('rejects missing prompts', () => {
    const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'adapter-bad-'));
    fs.writeFileSync(
      path.join(dir, 'request.json'),
      JSON.stringify({ noise_id: 'x', noise_file: 'noise.npy', image_size: 512, prompts: [] }),
    );
    expect(() => loadRequest(dir)).toThrow();
  });

  it('rejects a latent of the wrong rank', () => {
    const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'adapter-bad-'));
    fs.writeFileSync(
      path.join(dir, 'noise.npy'),
      writeNpy({ shape: [64, 64], data: new Float32Array(4096) }),
    );
    expect(() =>
      loadLatent(dir, {
        noise_id: 'x',
        noise_file: 'noise.npy',
        image_size: 512,
        prompts: PROMPTS,
      }),
    ).toThrow(/\(C, H, W\)/);
  });
});

describe('command line entry', () => {
  it('serves a request directory end to end', () => {
    const dir = writeRequestDir(gaussianLatent(4, { x: 30, y: 8, size: 24, std: 1.5 }), 'cli-1');
    execFileSync('node', [CLI, dir], { stdio: 'pipe' });
    const response = ResponseSchema.parse(
      JSON.parse(fs.readFileSync(path.join(dir, 'response.json'), 'utf-8')),
    );
    expect(response.annotations.length).toBeGreaterThan(0);
  });

  it('exits nonzero on a missing request', () => {
    const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'adapter-empty-'));
    const result = spawnSync('node', [CLI, dir], { encoding: 'utf-8' });
    expect(result.status).toBe(1);
    expect(result.stderr).toContain('adapter error');
  });

  it('honors --config', () => {
    const dir = writeRequestDir(gaussianLatent(5, { x: 20, y: 20, size: 24, std: 1.5 }), 'cfg-1');
    const configPath = path.join(dir, 'adapter.toml');
    fs.writeFileSync(configPath, '[model]\nid = "from-toml"\n');
    execFileSync('node', [CLI, dir, '--config', configPath], { stdio: 'pipe' });
    const response = JSON.parse(fs.readFileSync(path.join(dir, 'response.json'), 'utf-8'));
    expect(response.backend).toBe('from-toml');
  });
});

const hasTriggerlab = spawnSync('triggerlab', ['--version'], { encoding: 'utf-8' }).status === 0;

describe.skipIf(!hasTriggerlab)('round trip with the primary toolkit', () => {
  it('serves a noise sampled by the triggerlab CLI', async () => {
    const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'adapter-rt-'));
    execFileSync('triggerlab', ['sample', '--seed', '7', '--out', path.join(dir, 'noise.npy')], {
      stdio: 'pipe',
    });
    fs.writeFileSync(
      path.join(dir, 'request.json'),
      JSON.stringify({
        noise_id: 'rt-7',
        noise_file: 'noise.npy',
        image_size: 512,
        prompts: PROMPTS,
      }),
    );
    expect(await serve(dir)).toBe(0);
    const response = ResponseSchema.parse(
      JSON.parse(fs.readFileSync(path.join(dir, 'response.json'), 'utf-8')),
    );
    expect(response.noise_id).toBe('rt-7');
    for (const a of response.annotations) {
      expect(a.score).toBeGreaterThan(0.75);
    }
  });
});
