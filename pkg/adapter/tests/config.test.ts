import fs from 'node:fs';
import os from 'node:os';
import path from 'node:path';

import { describe, expect, it } from 'vitest';

import { DEFAULT_CONFIG, loadConfig, parseTomlSubset } from '../src/config.js';

describe('toml subset parser', () => {
  it('parses sections, strings, numbers, booleans', () => {
    const parsed = parseTomlSubset(`
      # comment
      [model]
      id = "sd-onnx"
      steps = 30
      [runtime]
      device = 'cuda'
      verbose = true
    `);
    expect(parsed.model.id).toBe('sd-onnx');
    expect(parsed.model.steps).toBe(30);
    expect(parsed.runtime.device).toBe('cuda');
    expect(parsed.runtime.verbose).toBe(true);
  });

  it('rejects unparseable lines', () => {
    expect(() => parseTomlSubset('[model]\nid =')).toThrow();
    expect(() => parseTomlSubset('just some words')).toThrow();
  });
});

describe('loadConfig', () => {
  it('returns defaults without a path', () => {
    expect(loadConfig()).toEqual(DEFAULT_CONFIG);
  });

  it('overrides defaults from file, keeping the rest', () => {
    const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'adapter-config-'));
    const file = path.join(dir, 'adapter.toml');
    fs.writeFileSync(file, '[model]\nid = "custom"\nsteps = 50\n');
    const config = loadConfig(file);
    expect(config.model.id).toBe('custom');
    expect(config.model.steps).toBe(50);
    expect(config.detector.min_score).toBe(0.75);
    expect(config.runtime.device).toBe('cpu');
  });
});
