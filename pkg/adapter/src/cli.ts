#!/usr/bin/env node
/**
 * triggerlab-adapter <request_dir> [--config adapter.toml]
 *
 * Serves one generation request from a directory containing request.json
 * and the referenced noise tensor; writes response.json next to them.
 * Exit code 0 on success, 1 on any failure.
 */

import { loadConfig } from './config.js';
import { serve } from './serve.js';

function usage(): void {
  console.error('usage: triggerlab-adapter <request_dir> [--config adapter.toml]');
}

async function main(): Promise<number> {
  const args = process.argv.slice(2);
  if (args.includes('--help') || args.includes('-h')) {
    usage();
    return 0;
  }
  let configPath: string | undefined;
  const positional: string[] = [];
  for (let i = 0; i < args.length; i++) {
    if (args[i] === '--config') {
      configPath = args[++i];
    } else {
      positional.push(args[i]);
    }
  }
  if (positional.length !== 1) {
    usage();
    return 1;
  }
  try {
    const config = loadConfig(configPath);
    await serve(positional[0], { config });
    return 0;
  } catch (err) {
    console.error(`adapter error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

main().then((code) => {
  process.exitCode = code;
});
