/** Multi-panel tracer figures: contours over signed-error shading. */

import { writeFileSync } from "node:fs";
import { basename } from "node:path";
import { contourRings } from "./contours.js";
import { loadFields, type FieldGrid } from "./csv.js";
import { divergingColour, el, fmt, fmtLabel, svgDocument, text } from "./svg.js";

export const DEFAULT_LEVELS = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

export interface FigureSpec {
  files: string[];
  out: string;
  levels?: number[];
  /** Symmetric |error| mapped to full shading colour; default: data max. */
  errorRange?: number;
  columns?: number;
}

const PANEL_W = 300;
const PANEL_H = 220;
const GAP_X = 24;
const GAP_Y = 46;
const MARGIN = 28;

/**
 * Corner coordinates of the quad drawn for each cell: the average of the
 * up-to-four surrounding cell centres (clamped at the boundary), forming a
 * dual mesh that follows distorted cell layouts.
 */
function cellCorners(grid: FieldGrid): { cx: Float64Array; cy: Float64Array } {
  const { nx, ny, x, y } = grid;
  const cx = new Float64Array((nx + 1) * (ny + 1));
  const cy = new Float64Array((nx + 1) * (ny + 1));
  const clampI = (i: number) => Math.max(0, Math.min(nx - 1, i));
  const clampJ = (j: number) => Math.max(0, Math.min(ny - 1, j));
  for (let j = 0; j <= ny; j++) {
    for (let i = 0; i <= nx; i++) {
      let sx = 0;
      let sy = 0;
      for (const [di, dj] of [[-1, -1], [0, -1], [-1, 0], [0, 0]]) {
        const k = clampJ(j + dj) * nx + clampI(i + di);
        sx += x[k];
        sy += y[k];
      }
      cx[j * (nx + 1) + i] = sx / 4;
      cy[j * (nx + 1) + i] = sy / 4;
    }
  }
  return { cx, cy };
}

function panelTitle(file: string): string {
  const match = basename(file).match(/_t([^_]+)\.csv$/);
  return match ? `t = ${match[1]}` : basename(file);
}

export function renderFieldsSvg(grids: FieldGrid[], spec: Omit<FigureSpec, "files" | "out">): string {
  const levels = spec.levels ?? DEFAULT_LEVELS;
  const columns = spec.columns ?? Math.min(3, grids.length);
  const rows = Math.ceil(grids.length / columns);

  let range = spec.errorRange ?? 0;
  if (!(range > 0)) {
    for (const grid of grids) {
      for (const value of grid.error) {
        range = Math.max(range, Math.abs(value));
      }
    }
    if (range === 0) range = 1; // all-zero errors: any scale shades nothing
  }
  const shadeFloor = 1e-12 * Math.max(1, range);

  // all grids share the mesh, so one bounding box places every panel
  let xMin = Infinity;
  let xMax = -Infinity;
  let yMin = Infinity;
  let yMax = -Infinity;
  const corners = cellCorners(grids[0]);
  for (let k = 0; k < corners.cx.length; k++) {
    xMin = Math.min(xMin, corners.cx[k]);
    xMax = Math.max(xMax, corners.cx[k]);
    yMin = Math.min(yMin, corners.cy[k]);
    yMax = Math.max(yMax, corners.cy[k]);
  }
  const toPanelX = (x: number) => ((x - xMin) / (xMax - xMin)) * PANEL_W;
  const toPanelY = (y: number) => PANEL_H - ((y - yMin) / (yMax - yMin)) * PANEL_H;

  const panels: string[] = [];
  grids.forEach((grid, index) => {
    const col = index % columns;
    const row = Math.floor(index / columns);
    const ox = MARGIN + col * (PANEL_W + GAP_X);
    const oy = MARGIN + row * (PANEL_H + GAP_Y);
    const parts: string[] = [];

    const { cx, cy } = cellCorners(grid);
    const stride = grid.nx + 1;
    for (let j = 0; j < grid.ny; j++) {
      for (let i = 0; i < grid.nx; i++) {
        const err = grid.error[j * grid.nx + i];
        if (Math.abs(err) <= shadeFloor) continue;
        const ks = [j * stride + i, j * stride + i + 1, (j + 1) * stride + i + 1, (j + 1) * stride + i];
        const points = ks
          .map((k) => `${fmt(toPanelX(cx[k]))},${fmt(toPanelY(cy[k]))}`)
          .join(" ");
        parts.push(
          el("polygon", { class: "err-cell", points, fill: divergingColour(err / range) }),
        );
      }
    }

    for (const { level, rings } of contourRings(grid, levels)) {
      for (const ring of rings) {
        const d =
          ring
            .map(([x, y], p) => `${p === 0 ? "M" : "L"}${fmt(toPanelX(x))} ${fmt(toPanelY(y))}`)
            .join("") + "Z";
        parts.push(
          el("path", {
            class: "contour",
            "data-level": String(level),
            d,
            fill: "none",
            stroke: "#222222",
            "stroke-width": "1",
          }),
        );
      }
    }

    parts.push(
      el("rect", {
        x: 0,
        y: 0,
        width: PANEL_W,
        height: PANEL_H,
        fill: "none",
        stroke: "black",
      }),
    );
    parts.push(text(0, -8, panelTitle(grid.file), { class: "panel-title", "font-size": "13" }));
    let errMin = Infinity;
    let errMax = -Infinity;
    for (const value of grid.error) {
      errMin = Math.min(errMin, value);
      errMax = Math.max(errMax, value);
    }
    parts.push(
      text(0, PANEL_H + 16, `min=${fmtLabel(errMin)} max=${fmtLabel(errMax)}`, {
        class: "error-annotation",
        "font-size": "12",
      }),
    );

    panels.push(el("g", { class: "panel", transform: `translate(${ox},${oy})` }, parts.join("")));
  });

  const width = 2 * MARGIN + columns * PANEL_W + (columns - 1) * GAP_X;
  const height = 2 * MARGIN + rows * PANEL_H + (rows - 1) * GAP_Y;
  return svgDocument(width, height, panels.join("\n"));
}

/** Read the CSVs, render the figure and write it to spec.out. */
export function renderFields(spec: FigureSpec): string {
  const grids = loadFields(spec.files);
  const svg = renderFieldsSvg(grids, spec);
  writeFileSync(spec.out, svg);
  return svg;
}
