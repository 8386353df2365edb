// Deterministic graph layout: positions depend only on the model content
// (FNV-1a hash of its canonical JSON seeds the angular offset).

import type { ModelDocument } from "./types.js";

export interface NodePosition {
  id: string;
  x: number;
  y: number;
}

export function modelHash(model: ModelDocument): number {
  const text = JSON.stringify(model, Object.keys(model).sort());
  let hash = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193) >>> 0;
  }
  return hash >>> 0;
}

export function circularLayout(
  model: ModelDocument,
  width = 720,
  height = 480
): NodePosition[] {
  const states = model.states.map((s) => s.id);
  const offset = ((modelHash(model) % 360) * Math.PI) / 180;
  const cx = width / 2;
  const cy = height / 2;
  const radius = Math.min(width, height) / 2 - 60;
  return states.map((id, i) => {
    const angle = offset + (2 * Math.PI * i) / states.length;
    return {
      id,
      x: Math.round(cx + radius * Math.cos(angle)),
      y: Math.round(cy + radius * Math.sin(angle)),
    };
  });
}
