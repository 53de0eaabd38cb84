/**
 * One request directory in, one response document out.
 *
 * Reads request.json plus the referenced noise tensor, runs the pipeline
 * once per prompt, detects objects, and keeps at most the best box per
 * prompt: highest score, correct class, score strictly above the
 * configured threshold.
 */

import fs from 'node:fs';
import path from 'node:path';

import { AdapterConfig, DEFAULT_CONFIG } from './config.js';
import { readNpy } from './npy.js';
import {
  EnergyBlobDetector,
  LatentStatsPipeline,
  LatentTensor,
  ObjectDetector,
  TextToImagePipeline,
  hashSeed,
} from './pipeline.js';
import {
  Annotation,
  GenerationRequest,
  GenerationResponse,
  RequestSchema,
  ResponseSchema,
} from './schema.js';

export interface ServeOptions {
  config?: AdapterConfig;
  pipeline?: TextToImagePipeline;
  detector?: ObjectDetector;
}

export function loadRequest(requestDir: string): GenerationRequest {
  const payload = JSON.parse(
    fs.readFileSync(path.join(requestDir, 'request.json'), 'utf-8'),
  );
  return RequestSchema.parse(payload);
}

export function loadLatent(requestDir: string, request: GenerationRequest): LatentTensor {
  const raw = readNpy(fs.readFileSync(path.join(requestDir, request.noise_file)));
  if (raw.shape.length !== 3) {
    throw new Error(`expected a (C, H, W) latent, got shape (${raw.shape.join(', ')})`);
  }
  const [channels, height, width] = raw.shape;
  return { channels, height, width, data: raw.data };
}

export async function buildResponse(
  request: GenerationRequest,
  latent: LatentTensor,
  options: ServeOptions = {},
): Promise<GenerationResponse> {
  const config = options.config ?? DEFAULT_CONFIG;
  const pipeline =
    options.pipeline ?? new LatentStatsPipeline(config.model.id, request.image_size);
  const detector = options.detector ?? new EnergyBlobDetector(config.detector.id);

  const started = Date.now();
  const annotations: Annotation[] = [];
  for (const prompt of request.prompts) {
    const seed = hashSeed(request.noise_id, prompt.id, config.model.steps);
    const image = await pipeline.generate(latent, prompt, seed);
    const boxes = await detector.detect(image, prompt, seed);
    const candidates = boxes
      .filter((b) => b.className === prompt.class && b.score > config.detector.min_score)
      .sort((a, b) => b.score - a.score || a.x1 - b.x1 || a.y1 - b.y1);
    if (candidates.length === 0) continue; // no qualifying box for this prompt
    const best = candidates[0];
    annotations.push({
      x1: best.x1,
      y1: best.y1,
      x2: best.x2,
      y2: best.y2,
      class: best.className,
      score: best.score,
      prompt_id: prompt.id,
      space: 'image',
    });
  }

  const response: GenerationResponse = {
    noise_id: request.noise_id,
    backend: config.model.id,
    annotations,
    metadata: {
      model: config.model,
      detector: config.detector,
      runtime: config.runtime,
      prompts_served: request.prompts.length,
      wall_time_s: (Date.now() - started) / 1000,
    },
  };
  return ResponseSchema.parse(response);
}

export async function serve(requestDir: string, options: ServeOptions = {}): Promise<number> {
  const request = loadRequest(requestDir);
  const latent = loadLatent(requestDir, request);
  const response = await buildResponse(request, latent, options);
  fs.writeFileSync(
    path.join(requestDir, 'response.json'),
    JSON.stringify(response, null, 2) + '\n',
  );
  return 0;
}
