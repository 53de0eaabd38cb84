/**
 * Adapter configuration, loaded from adapter.toml.
 *
 * Only the TOML subset the config needs is parsed: [section] headers and
 * `key = value` lines with string, number, or boolean values. The raw
 * values are echoed verbatim into every response's metadata.
 */

import fs from 'node:fs';

export interface AdapterConfig {
  model: {
    id: string;
    steps: number;
    guidance_scale: number;
  };
  detector: {
    id: string;
    min_score: number;
  };
  runtime: {
    device: string;
  };
}

export const DEFAULT_CONFIG: AdapterConfig = {
  model: { id: 'latent-stats-demo', steps: 20, guidance_scale: 7.5 },
  detector: { id: 'energy-blob-v1', min_score: 0.75 },
  runtime: { device: 'cpu' },
};

type TomlValue = string | number | boolean;

export function parseTomlSubset(text: string): Record<string, Record<string, TomlValue>> {
  const result: Record<string, Record<string, TomlValue>> = {};
  let section = '';
  for (const rawLine of text.split(/\r?\n/)) {
    const line = rawLine.replace(/#.*$/, '').trim();
    if (line.length === 0) continue;
    const sectionMatch = /^\[([A-Za-z0-9_.-]+)\]$/.exec(line);
    if (sectionMatch) {
      section = sectionMatch[1];
      result[section] ??= {};
      continue;
    }
    const kv = /^([A-Za-z0-9_-]+)\s*=\s*(.+)$/.exec(line);
    if (!kv) {
      throw new Error(`cannot parse config line: ${rawLine}`);
    }
    const [, key, raw] = kv;
    let value: TomlValue;
    if (/^".*"$/.test(raw) || /^'.*'$/.test(raw)) {
      value = raw.slice(1, -1);
    } else if (raw === 'true' || raw === 'false') {
      value = raw === 'true';
    } else if (!Number.isNaN(Number(raw))) {
      value = Number(raw);
    } else {
      throw new Error(`unsupported value in config: ${raw}`);
    }
    (result[section] ??= {})[key] = value;
  }
  return result;
}

export function loadConfig(path?: string): AdapterConfig {
  if (!path) return DEFAULT_CONFIG;
  const parsed = parseTomlSubset(fs.readFileSync(path, 'utf-8'));
  const pick = <T extends TomlValue>(section: string, key: string, fallback: T): T => {
    const value = parsed[section]?.[key];
    return value === undefined ? fallback : (value as T);
  };
  return {
    model: {
      id: pick('model', 'id', DEFAULT_CONFIG.model.id),
      steps: pick('model', 'steps', DEFAULT_CONFIG.model.steps),
      guidance_scale: pick('model', 'guidance_scale', DEFAULT_CONFIG.model.guidance_scale),
    },
    detector: {
      id: pick('detector', 'id', DEFAULT_CONFIG.detector.id),
      min_score: pick('detector', 'min_score', DEFAULT_CONFIG.detector.min_score),
    },
    runtime: {
      device: pick('runtime', 'device', DEFAULT_CONFIG.runtime.device),
    },
  };
}
