/** Log-log convergence figures with reference-order lines. */

import { writeFileSync } from "node:fs";
import { parseSummaryFile, SummaryError, type SummaryRecord, type SummarySeries } from "./summary.js";
import { el, fmt, svgDocument, text } from "./svg.js";

export type XAxis = "dx" | "dt";

// physical domain widths of the built-in cases, needed to turn the
// summary's cell count into a spacing
const CASE_WIDTH: Record<string, number> = {
  solid_body: 1.0e4,
  orography: 300.0e3,
  deform: 2 * Math.PI,
};

const PANEL_W = 320;
const PANEL_H = 260;
const GAP = 70;
const MARGIN_L = 64;
const MARGIN_T = 40;
const MARGIN_B = 48;

const PALETTE = ["#1b6ca8", "#c23b22", "#2e8540", "#7646ad", "#b58a00", "#00727a"];

interface Point {
  x: number;
  y: number;
}

function xValue(record: SummaryRecord, axis: XAxis): number {
  if (axis === "dt") return record.dt;
  const width = CASE_WIDTH[record.caseName];
  if (width === undefined) {
    throw new SummaryError(
      `unknown case ${JSON.stringify(record.caseName)}: cannot derive dx; plot against --x dt`,
    );
  }
  return width / record.nx;
}

function seriesPoints(series: SummarySeries, axis: XAxis, metric: "l2" | "linf"): Point[] {
  const points = series.records
    .map((record) => ({ x: xValue(record, axis), y: record[metric] }))
    .filter((p) => Number.isFinite(p.y) && p.y > 0); // diverged runs carry NaN
  if (points.length < 2) {
    throw new SummaryError(
      `series ${series.label}: need at least 2 finite ${metric} points, got ${points.length}`,
    );
  }
  return points.sort((a, b) => a.x - b.x);
}

function fitSlope(points: Point[]): number {
  const n = points.length;
  let sx = 0;
  let sy = 0;
  let sxx = 0;
  let sxy = 0;
  for (const p of points) {
    const lx = Math.log(p.x);
    const ly = Math.log(p.y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

function decadeTicks(lo: number, hi: number): number[] {
  const ticks: number[] = [];
  for (let e = Math.ceil(lo); e <= Math.floor(hi); e++) ticks.push(e);
  return ticks;
}

function renderPanel(
  title: string,
  allSeries: SummarySeries[],
  axis: XAxis,
  metric: "l2" | "linf",
  originX: number,
): string {
  const pointsBySeries = allSeries.map((series) => seriesPoints(series, axis, metric));

  let lxMin = Infinity;
  let lxMax = -Infinity;
  let lyMin = Infinity;
  let lyMax = -Infinity;
  for (const points of pointsBySeries) {
    for (const p of points) {
      lxMin = Math.min(lxMin, Math.log10(p.x));
      lxMax = Math.max(lxMax, Math.log10(p.x));
      lyMin = Math.min(lyMin, Math.log10(p.y));
      lyMax = Math.max(lyMax, Math.log10(p.y));
    }
  }
  lxMin -= 0.15;
  lxMax += 0.15;
  lyMin -= 0.4;
  lyMax += 0.4;
  const px = (x: number) => ((Math.log10(x) - lxMin) / (lxMax - lxMin)) * PANEL_W;
  const py = (y: number) => PANEL_H - ((Math.log10(y) - lyMin) / (lyMax - lyMin)) * PANEL_H;

  const parts: string[] = [];
  for (const e of decadeTicks(lxMin, lxMax)) {
    const gx = px(10 ** e);
    parts.push(el("line", { x1: gx, y1: 0, x2: gx, y2: PANEL_H, stroke: "#dddddd" }));
    parts.push(text(gx - 12, PANEL_H + 16, `1e${e}`, { class: "tick", "font-size": "10" }));
  }
  for (const e of decadeTicks(lyMin, lyMax)) {
    const gy = py(10 ** e);
    parts.push(el("line", { x1: 0, y1: gy, x2: PANEL_W, y2: gy, stroke: "#dddddd" }));
    parts.push(text(-34, gy + 3, `1e${e}`, { class: "tick", "font-size": "10" }));
  }

  // reference-order lines through the first series' finest point
  const anchor = pointsBySeries[0][0];
  const xFar = 10 ** (lxMax - 0.15);
  for (const order of [1, 2, 3]) {
    const yFar = anchor.y * (xFar / anchor.x) ** order;
    parts.push(
      el("line", {
        class: "ref-line",
        "data-order": String(order),
        x1: px(anchor.x),
        y1: py(anchor.y),
        x2: px(xFar),
        y2: py(yFar),
        stroke: "#999999",
        "stroke-dasharray": "4 3",
      }),
    );
    parts.push(
      text(px(xFar) + 3, py(yFar) + 3, `${order}`, { class: "ref-label", "font-size": "10" }),
    );
  }

  pointsBySeries.forEach((points, s) => {
    const colour = PALETTE[s % PALETTE.length];
    const path = points
      .map((p, k) => `${k === 0 ? "M" : "L"}${fmt(px(p.x))} ${fmt(py(p.y))}`)
      .join("");
    parts.push(
      el("path", { class: "series", d: path, fill: "none", stroke: colour, "stroke-width": "1.5" }),
    );
    for (const p of points) {
      parts.push(
        el("circle", { class: "marker", cx: px(p.x), cy: py(p.y), r: 3, fill: colour }),
      );
    }
    parts.push(
      text(6, 14 + 14 * s, `${allSeries[s].label} (slope ${fitSlope(points).toFixed(1)})`, {
        class: "legend",
        "font-size": "11",
        fill: colour,
      }),
    );
  });

  parts.push(
    el("rect", { x: 0, y: 0, width: PANEL_W, height: PANEL_H, fill: "none", stroke: "black" }),
  );
  parts.push(text(0, -10, title, { class: "panel-title", "font-size": "13" }));
  const xLabel = axis === "dx" ? "cell spacing" : "time step";
  parts.push(text(PANEL_W / 2 - 30, PANEL_H + 34, xLabel, { class: "axis-label", "font-size": "11" }));

  return el("g", { class: "panel", transform: `translate(${originX},${MARGIN_T})` }, parts.join(""));
}

export function renderConvergenceSvg(allSeries: SummarySeries[], axis: XAxis): string {
  if (allSeries.length === 0) {
    throw new SummaryError("no summary files given");
  }
  const body = [
    renderPanel("l2 error", allSeries, axis, "l2", MARGIN_L),
    renderPanel("linf error", allSeries, axis, "linf", MARGIN_L + PANEL_W + GAP),
  ].join("\n");
  const width = MARGIN_L + 2 * PANEL_W + GAP + 24;
  const height = MARGIN_T + PANEL_H + MARGIN_B;
  return svgDocument(width, height, body);
}

/** Read the summary files, render the log-log figure, write it to out. */
export function renderConvergence(files: string[], axis: XAxis, out: string): string {
  const allSeries = files.map(parseSummaryFile);
  const svg = renderConvergenceSvg(allSeries, axis);
  writeFileSync(out, svg);
  return svg;
}
