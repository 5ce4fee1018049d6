/** Figure layouts: smoothed metric curves, histograms, run-sweep overlays. */
import { Series } from "./csv.js";
import { Canvas, Color, GLYPH_H, GLYPH_W, textWidth } from "./raster.js";
import { ewmSmooth } from "./smoothing.js";

export const PALETTE: Color[] = [
  [31, 119, 180],
  [255, 127, 14],
  [44, 160, 44],
  [214, 39, 40],
  [148, 103, 189],
  [140, 86, 75],
  [227, 119, 194],
  [127, 127, 127],
];

const AXIS: Color = [40, 40, 40];
const GRID: Color = [225, 225, 225];

export interface FigureOptions {
  width?: number;
  height?: number;
  title?: string;
  alpha?: number;   // curves: exponential smoothing factor
  bins?: number;    // histogram bin count
}

interface Frame {
  canvas: Canvas;
  left: number;
  top: number;
  right: number;
  bottom: number;
  x: (v: number) => number;
  y: (v: number) => number;
}

function niceTicks(lo: number, hi: number, count = 5): number[] {
  if (!(hi > lo)) {
    return [lo];
  }
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const err = span / (count * step);
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = step * mult;
  const start = Math.ceil(lo / s) * s;
  const ticks: number[] = [];
  for (let v = start; v <= hi + 1e-12 * span; v += s) {
    ticks.push(v);
  }
  return ticks;
}

function fmtTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 10000 || a < 0.001) return v.toExponential(1);
  return Number(v.toPrecision(4)).toString();
}

function frame(
  opts: FigureOptions,
  xlo: number,
  xhi: number,
  ylo: number,
  yhi: number,
  legendRows: number,
): Frame {
  const width = opts.width ?? 720;
  const height = opts.height ?? 420;
  const canvas = new Canvas(width, height);
  const left = 64;
  const top = 28 + (opts.title ? GLYPH_H + 6 : 0);
  const right = width - 16;
  const bottom = height - 36 - legendRows * (GLYPH_H + 4);
  if (yhi === ylo) {
    yhi = ylo + 1;
  }
  if (xhi === xlo) {
    xhi = xlo + 1;
  }
  const x = (v: number) => left + ((v - xlo) / (xhi - xlo)) * (right - left);
  const y = (v: number) => bottom - ((v - ylo) / (yhi - ylo)) * (bottom - top);

  for (const t of niceTicks(ylo, yhi)) {
    canvas.line(left, y(t), right, y(t), GRID);
    const label = fmtTick(t);
    canvas.text(left - 6 - textWidth(label), y(t) - 3, label, AXIS);
  }
  for (const t of niceTicks(xlo, xhi, 6)) {
    canvas.line(x(t), bottom, x(t), bottom + 3, AXIS);
    const label = fmtTick(t);
    canvas.text(x(t) - textWidth(label) / 2, bottom + 6, label, AXIS);
  }
  canvas.line(left, top, left, bottom, AXIS);
  canvas.line(left, bottom, right, bottom, AXIS);
  if (opts.title) {
    canvas.text((width - textWidth(opts.title)) / 2, 10, opts.title, AXIS);
  }
  return { canvas, left, top, right, bottom, x, y };
}

function drawLegend(f: Frame, labels: string[], colors: Color[]): void {
  let yy = f.bottom + 6 + GLYPH_H + 6;
  let xx = f.left;
  labels.forEach((label, i) => {
    const w = 18 + textWidth(label) + 16;
    if (xx + w > f.right) {
      xx = f.left;
      yy += GLYPH_H + 4;
    }
    f.canvas.fillRect(xx, yy + 2, 12, 3, colors[i % colors.length]);
    f.canvas.text(xx + 16, yy, label, AXIS);
    xx += w;
  });
}

function polyline(f: Frame, xs: number[], ys: number[], color: Color): void {
  for (let i = 1; i < xs.length; i++) {
    f.canvas.line(f.x(xs[i - 1]), f.y(ys[i - 1]), f.x(xs[i]), f.y(ys[i]), color);
  }
  if (xs.length === 1) {
    f.canvas.set(f.x(xs[0]), f.y(ys[0]), color);
  }
}

/** Smoothed in/out-of-stream metric curves (one color per series). */
export function renderCurves(seriesList: Series[], opts: FigureOptions = {}): Canvas {
  if (seriesList.length === 0) {
    throw new Error("no series to plot");
  }
  const alpha = opts.alpha ?? 1e-3;
  const smoothed = seriesList.map((s) => ({
    ...s,
    values: ewmSmooth(s.values, alpha),
  }));
  const xlo = Math.min(...smoothed.map((s) => s.steps[0]));
  const xhi = Math.max(...smoothed.map((s) => s.steps[s.steps.length - 1]));
  const ylo = Math.min(...smoothed.map((s) => Math.min(...s.values)));
  const yhi = Math.max(...smoothed.map((s) => Math.max(...s.values)));
  const labels = smoothed.map((s) =>
    [s.label, s.metric, s.split].filter(Boolean).join(" "),
  );
  const rows = Math.max(1, Math.ceil(labels.length / 3));
  const f = frame(opts, xlo, xhi, ylo, yhi, rows);
  smoothed.forEach((s, i) => {
    polyline(f, s.steps, s.values, PALETTE[i % PALETTE.length]);
  });
  drawLegend(f, labels, PALETTE);
  return f.canvas;
}

export function histogramCounts(
  values: readonly number[],
  bins: number,
): { counts: number[]; edges: number[] } {
  if (values.length === 0) {
    throw new Error("empty series");
  }
  if (bins < 1) {
    throw new Error("bins must be >= 1");
  }
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const counts = new Array<number>(bins).fill(0);
  for (const v of values) {
    const idx = Math.min(bins - 1, Math.floor(((v - lo) / (hi - lo)) * bins));
    counts[idx]++;
  }
  const edges = Array.from({ length: bins + 1 }, (_, i) => lo + ((hi - lo) * i) / bins);
  return { counts, edges };
}

/** Value histogram (e.g. the gradient cosine-similarity distribution). */
export function renderHistogram(
  seriesList: Series[],
  opts: FigureOptions = {},
): Canvas {
  if (seriesList.length === 0) {
    throw new Error("no series to plot");
  }
  const bins = opts.bins ?? 40;
  const hists = seriesList.map((s) => histogramCounts(s.values, bins));
  const xlo = Math.min(...hists.map((h) => h.edges[0]));
  const xhi = Math.max(...hists.map((h) => h.edges[h.edges.length - 1]));
  const yhi = Math.max(...hists.map((h) => Math.max(...h.counts)));
  const labels = seriesList.map((s) =>
    [s.label, s.metric, s.split].filter(Boolean).join(" "),
  );
  const rows = Math.max(1, Math.ceil(labels.length / 3));
  const f = frame(opts, xlo, xhi, 0, yhi, rows);
  hists.forEach((h, i) => {
    const color = PALETTE[i % PALETTE.length];
    for (let b = 0; b < bins; b++) {
      const x0 = f.x(h.edges[b]);
      const x1 = f.x(h.edges[b + 1]);
      const y0 = f.y(h.counts[b]);
      if (seriesList.length === 1) {
        f.canvas.fillRect(x0 + 1, y0, Math.max(1, x1 - x0 - 2), f.bottom - y0, color);
      } else {
        // outline only so overlaid histograms stay readable
        f.canvas.line(x0, f.y(h.counts[b]), x1, f.y(h.counts[b]), color);
        f.canvas.line(x0, f.y(b > 0 ? h.counts[b - 1] : 0), x0, y0, color);
      }
    }
  });
  drawLegend(f, labels, PALETTE);
  return f.canvas;
}

/** One metric overlaid across several runs (CSV files). */
export function renderSweep(
  runs: { label: string; series: Series }[],
  opts: FigureOptions = {},
): Canvas {
  if (runs.length === 0) {
    throw new Error("no runs to plot");
  }
  const seriesList = runs.map((r) => ({ ...r.series, label: r.label }));
  return renderCurves(seriesList, opts);
}
