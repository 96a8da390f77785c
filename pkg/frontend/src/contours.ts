/** Contour extraction on the (possibly distorted) physical mesh. */

import { contours } from "d3-contour";
import type { FieldGrid } from "./csv.js";

export interface ContourLine {
  level: number;
  /** Closed rings of physical (x, y) points. */
  rings: Array<Array<[number, number]>>;
}

/**
 * Sample a j-outer grid array at fractional indices by bilinear
 * interpolation, clamped to the grid interior.
 */
function sample(values: Float64Array, nx: number, ny: number, fi: number, fj: number): number {
  const ci = Math.max(0, Math.min(nx - 1, fi));
  const cj = Math.max(0, Math.min(ny - 1, fj));
  const i0 = Math.min(nx - 2, Math.max(0, Math.floor(ci)));
  const j0 = Math.min(ny - 2, Math.max(0, Math.floor(cj)));
  const a = ci - i0;
  const b = cj - j0;
  const v00 = values[j0 * nx + i0];
  const v10 = values[j0 * nx + i0 + 1];
  const v01 = values[(j0 + 1) * nx + i0];
  const v11 = values[(j0 + 1) * nx + i0 + 1];
  return (1 - a) * (1 - b) * v00 + a * (1 - b) * v10 + (1 - a) * b * v01 + a * b * v11;
}

/**
 * Contour the tracer at the given levels.  The marching-squares rings come
 * back in grid coordinates, where point (i + 0.5, j + 0.5) is the centre of
 * cell (i, j); they are warped to physical space through the mesh's own
 * cell-centre coordinates, which keeps contours honest on distorted meshes.
 */
export function contourRings(grid: FieldGrid, levels: number[]): ContourLine[] {
  const generator = contours().size([grid.nx, grid.ny]);
  const phi = Array.from(grid.phi);
  return levels.map((level) => {
    const multi = generator.contour(phi, level);
    const rings: Array<Array<[number, number]>> = [];
    for (const polygon of multi.coordinates) {
      for (const ring of polygon) {
        rings.push(
          ring.map(([gx, gy]) => {
            const fi = gx - 0.5;
            const fj = gy - 0.5;
            return [
              sample(grid.x, grid.nx, grid.ny, fi, fj),
              sample(grid.y, grid.nx, grid.ny, fi, fj),
            ] as [number, number];
          }),
        );
      }
    }
    return { level, rings };
  });
}
