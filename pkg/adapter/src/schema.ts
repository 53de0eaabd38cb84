/**
 * Wire schemas of the request/response file protocol.
 */

import { z } from 'zod';

export const PromptSchema = z.object({
  id: z.string().min(1),
  text: z.string().min(1),
  class: z.string().min(1),
});

export const RequestSchema = z.object({
  noise_id: z.string().min(1),
  noise_file: z.string().min(1),
  image_size: z.number().int().positive(),
  prompts: z.array(PromptSchema).min(1),
});

export const AnnotationSchema = z
  .object({
    x1: z.number(),
    y1: z.number(),
    x2: z.number(),
    y2: z.number(),
    class: z.string().min(1),
    score: z.number().min(0).max(1),
    prompt_id: z.string().min(1),
    space: z.literal('image'),
  })
  .refine((b) => b.x1 < b.x2 && b.y1 < b.y2, { message: 'degenerate box' });

export const ResponseSchema = z.object({
  noise_id: z.string().min(1),
  backend: z.string().min(1),
  annotations: z.array(AnnotationSchema),
  metadata: z.record(z.string(), z.unknown()),
});

export type PromptSpec = z.infer<typeof PromptSchema>;
export type GenerationRequest = z.infer<typeof RequestSchema>;
export type Annotation = z.infer<typeof AnnotationSchema>;
export type GenerationResponse = z.infer<typeof ResponseSchema>;
