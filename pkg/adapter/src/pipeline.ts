/**
 * Generation pipeline plus object detector behind narrow interfaces.
 *
 * A production deployment implements `TextToImagePipeline` over a real
 * diffusion runtime (onnx, remote API, ...) and `ObjectDetector` over a
 * pretrained detector. The bundled `LatentStatsPipeline` is the
 * deterministic reference implementation: it renders the latent's local
 * energy as a grayscale "image", so regions whose statistics deviate from
 * the standard Gaussian glow exactly where a diffusion model would place
 * an object. That keeps the whole protocol testable offline while
 * behaving like the real system on trigger-carrying noises.
 */

import type { PromptSpec } from './schema.js';

export interface LatentTensor {
  channels: number;
  height: number;
  width: number;
  data: Float32Array; // C-order (c, y, x)
}

export interface GeneratedImage {
  width: number;
  height: number;
  /** grayscale intensity per pixel, row-major */
  pixels: Float32Array;
}

export interface DetectedBox {
  x1: number;
  y1: number;
  x2: number;
  y2: number;
  className: string;
  score: number;
}

export interface TextToImagePipeline {
  readonly modelId: string;
  generate(latent: LatentTensor, prompt: PromptSpec, seed: number): Promise<GeneratedImage>;
}

export interface ObjectDetector {
  readonly modelId: string;
  detect(image: GeneratedImage, prompt: PromptSpec, seed: number): Promise<DetectedBox[]>;
}

/** Deterministic 32-bit stream from an integer seed (mulberry32). */
export function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** FNV-1a hash of a label path, for per-(noise, prompt) sub-seeds. */
export function hashSeed(...parts: (string | number)[]): number {
  let h = 0x811c9dc5;
  for (const part of parts) {
    for (const ch of `${part};`) {
      h ^= ch.charCodeAt(0);
      h = Math.imul(h, 0x01000193);
    }
  }
  return h >>> 0;
}

const WINDOW = 24;

/** Mean squared value over channels for each latent cell. */
function cellEnergy(latent: LatentTensor): Float32Array {
  const { channels, height, width, data } = latent;
  const energy = new Float32Array(height * width);
  const plane = height * width;
  for (let c = 0; c < channels; c++) {
    const base = c * plane;
    for (let i = 0; i < plane; i++) {
      const v = data[base + i];
      energy[i] += (v * v) / channels;
    }
  }
  return energy;
}

/** Box-filter mean of the cell energy over WINDOW x WINDOW neighborhoods. */
function smoothedEnergy(latent: LatentTensor): Float32Array {
  const { height, width } = latent;
  const energy = cellEnergy(latent);
  const integral = new Float64Array((height + 1) * (width + 1));
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      integral[(y + 1) * (width + 1) + (x + 1)] =
        energy[y * width + x] +
        integral[y * (width + 1) + (x + 1)] +
        integral[(y + 1) * (width + 1) + x] -
        integral[y * (width + 1) + x];
    }
  }
  const half = WINDOW / 2;
  const smoothed = new Float32Array(height * width);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const y1 = Math.max(0, y - half);
      const y2 = Math.min(height, y + half);
      const x1 = Math.max(0, x - half);
      const x2 = Math.min(width, x + half);
      const sum =
        integral[y2 * (width + 1) + x2] -
        integral[y1 * (width + 1) + x2] -
        integral[y2 * (width + 1) + x1] +
        integral[y1 * (width + 1) + x1];
      smoothed[y * width + x] = sum / ((y2 - y1) * (x2 - x1));
    }
  }
  return smoothed;
}

export class LatentStatsPipeline implements TextToImagePipeline {
  readonly modelId: string;

  constructor(modelId = 'latent-stats-demo', private readonly imageSize = 512) {
    this.modelId = modelId;
  }

  async generate(latent: LatentTensor, prompt: PromptSpec, seed: number): Promise<GeneratedImage> {
    const smoothed = smoothedEnergy(latent);
    const scale = this.imageSize / latent.width;
    const pixels = new Float32Array(this.imageSize * this.imageSize);
    // nearest-neighbor upsample plus a faint prompt-seeded texture so two
    // prompts never produce the byte-identical image
    const rng = mulberry32(hashSeed(seed, prompt.id, 'texture'));
    for (let y = 0; y < this.imageSize; y++) {
      const sy = Math.min(latent.height - 1, Math.floor(y / scale));
      for (let x = 0; x < this.imageSize; x++) {
        const sx = Math.min(latent.width - 1, Math.floor(x / scale));
        pixels[y * this.imageSize + x] =
          smoothed[sy * latent.width + sx] + 0.001 * rng();
      }
    }
    return { width: this.imageSize, height: this.imageSize, pixels };
  }
}

export class EnergyBlobDetector implements ObjectDetector {
  readonly modelId: string;

  constructor(modelId = 'energy-blob-v1') {
    this.modelId = modelId;
  }

  async detect(image: GeneratedImage, prompt: PromptSpec, seed: number): Promise<DetectedBox[]> {
    const { width, height, pixels } = image;
    let max = -Infinity;
    let argmax = 0;
    for (let i = 0; i < pixels.length; i++) {
      if (pixels[i] > max) {
        max = pixels[i];
        argmax = i;
      }
    }
    const cy = Math.floor(argmax / width);
    const cx = argmax % width;

    // grow the box while intensity stays above half the blob's contrast;
    // contrast is measured against the unit background energy
    const floor = 1.0 + 0.5 * (max - 1.0);
    let x1 = cx;
    let x2 = cx;
    let y1 = cy;
    let y2 = cy;
    while (x1 > 0 && pixels[cy * width + (x1 - 1)] >= floor) x1--;
    while (x2 < width - 1 && pixels[cy * width + (x2 + 1)] >= floor) x2++;
    while (y1 > 0 && pixels[(y1 - 1) * width + cx] >= floor) y1--;
    while (y2 < height - 1 && pixels[(y2 + 1) * width + cx] >= floor) y2++;

    const rng = mulberry32(hashSeed(seed, prompt.id, 'detect'));
    const jitter = () => Math.floor(rng() * 17) - 8;
    const minSpan = Math.round(width / 8);
    if (x2 - x1 < minSpan) {
      x1 = Math.max(0, cx - minSpan / 2);
      x2 = Math.min(width - 1, cx + minSpan / 2);
    }
    if (y2 - y1 < minSpan) {
      y1 = Math.max(0, cy - minSpan / 2);
      y2 = Math.min(height - 1, cy + minSpan / 2);
    }

    // score grows with the blob's deviation from unit background energy
    const score = Math.max(0.05, Math.min(0.99, 0.5 + 0.35 * (max - 1.0)));
    const main: DetectedBox = {
      x1: Math.max(0, x1 + jitter()),
      y1: Math.max(0, y1 + jitter()),
      x2: Math.min(width, x2 + 1 + jitter()),
      y2: Math.min(height, y2 + 1 + jitter()),
      className: prompt.class,
      score,
    };
    if (main.x2 <= main.x1) main.x2 = main.x1 + 1;
    if (main.y2 <= main.y1) main.y2 = main.y1 + 1;

    const boxes = [main];
    // occasional spurious low-confidence detection of an unrelated class
    if (rng() < 0.3) {
      const sx = Math.floor(rng() * (width - minSpan));
      const sy = Math.floor(rng() * (height - minSpan));
      boxes.push({
        x1: sx,
        y1: sy,
        x2: sx + minSpan,
        y2: sy + minSpan,
        className: 'background-clutter',
        score: 0.1 + 0.4 * rng(),
      });
    }
    return boxes;
  }
}
