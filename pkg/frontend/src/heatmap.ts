import { DepthImage, heightMeters } from "./depth.js";

// Deterministic two-stop height colormap. Kept to exact integer math so
// renders are pixel-identical to the committed reference fixture.
export const MAX_HEIGHT_M = 0.12;

export function heightToRgb(h: number): [number, number, number] {
  const t = Math.min(1, Math.max(0, h / MAX_HEIGHT_M));
  return [
    Math.round(255 * t),
    Math.round(200 * t + 30 * (1 - t)),
    Math.round(60 * t + 120 * (1 - t)),
  ];
}

/** RGBA buffer for the depth heatmap, ready for ImageData. */
export function heatmapRgba(img: DepthImage): Uint8ClampedArray {
  const out = new Uint8ClampedArray(img.width * img.height * 4);
  for (let i = 0; i < img.data.length; i++) {
    const [r, g, b] = heightToRgb(heightMeters(img.data[i]));
    out[4 * i] = r;
    out[4 * i + 1] = g;
    out[4 * i + 2] = b;
    out[4 * i + 3] = 255;
  }
  return out;
}
