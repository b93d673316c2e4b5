/** World-to-screen mapping: uniform scale, scene fitted to the viewport with
 * a margin, world y pointing up on screen. */

import type { Point } from "./types.js";

export interface Bounds {
  minX: number;
  maxX: number;
  minY: number;
  maxY: number;
}

export interface Viewport {
  width: number;
  height: number;
  margin: number;
}

export interface WorldTransform {
  scale: number;
  /** world point that lands on the viewport center */
  centerX: number;
  centerY: number;
  viewport: Viewport;
}

export function boundsOf(points: Iterable<Point>): Bounds | null {
  let b: Bounds | null = null;
  for (const [x, y] of points) {
    if (b === null) {
      b = { minX: x, maxX: x, minY: y, maxY: y };
    } else {
      b.minX = Math.min(b.minX, x);
      b.maxX = Math.max(b.maxX, x);
      b.minY = Math.min(b.minY, y);
      b.maxY = Math.max(b.maxY, y);
    }
  }
  return b;
}

export function fitToBounds(bounds: Bounds, viewport: Viewport): WorldTransform {
  const spanX = bounds.maxX - bounds.minX;
  const spanY = bounds.maxY - bounds.minY;
  const usableW = Math.max(1, viewport.width - 2 * viewport.margin);
  const usableH = Math.max(1, viewport.height - 2 * viewport.margin);
  // one scale for both axes so shapes keep their aspect ratio; a single
  // point (zero span) gets an arbitrary finite scale
  let scale: number;
  if (spanX <= 0 && spanY <= 0) {
    scale = 1;
  } else {
    scale = Math.min(
      spanX > 0 ? usableW / spanX : Infinity,
      spanY > 0 ? usableH / spanY : Infinity,
    );
  }
  return {
    scale,
    centerX: (bounds.minX + bounds.maxX) / 2,
    centerY: (bounds.minY + bounds.maxY) / 2,
    viewport,
  };
}

export function toScreen(t: WorldTransform, p: Point): Point {
  const sx = t.viewport.width / 2 + (p[0] - t.centerX) * t.scale;
  // screen y grows downward, world y grows upward
  const sy = t.viewport.height / 2 - (p[1] - t.centerY) * t.scale;
  return [sx, sy];
}
