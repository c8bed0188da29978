/**
 * Backend-neutral figure description.
 *
 * Figure builders emit a flat list of marks in pixel coordinates; the
 * SVG and PNG writers only have to walk that list. Keeping the mark
 * vocabulary tiny is what makes the PNG rasterizer tractable.
 */

import { Scale, linearScale, ticks, decadeTicks, formatTick } from "./scale.js";

export type Mark =
  | { kind: "polyline"; points: [number, number][]; stroke: string; width: number; dash?: number[] }
  | { kind: "rect"; x: number; y: number; w: number; h: number; fill: string }
  | { kind: "circle"; cx: number; cy: number; r: number; fill: string }
  | { kind: "polygon"; points: [number, number][]; fill: string }
  | {
      kind: "text";
      x: number;
      y: number;
      text: string;
      size: number;
      fill: string;
      anchor: "start" | "middle" | "end";
    };

export interface Figure {
  width: number;
  height: number;
  marks: Mark[];
}

export const COLORS = {
  frame: "#444444",
  grid: "#dddddd",
  text: "#222222",
  faint: "#888888",
  line: "#1f5fa8",
  second: "#c96a1b",
  band: "#bcd4ea",
  accent: "#b03030",
  good: "#2e7d46",
};

export interface FrameOptions {
  title: string;
  caption: string;
  xDomain: [number, number];
  yDomain: [number, number];
  xLabel: string;
  yLabel: string;
  /** When true, y values are log10 and ticks label the decades. */
  logY?: boolean;
  width?: number;
  height?: number;
}

export interface Frame {
  fig: Figure;
  sx: Scale;
  sy: Scale;
  /** Plot area bounds in pixels. */
  area: { x0: number; x1: number; y0: number; y1: number };
}

const MARGIN = { left: 64, right: 16, top: 34, bottom: 64 };

function pad(lo: number, hi: number): [number, number] {
  if (hi > lo) {
    const p = (hi - lo) * 0.04;
    return [lo - p, hi + p];
  }
  const p = Math.max(1, Math.abs(lo)) * 0.1;
  return [lo - p, hi + p];
}

/**
 * Lays out axes, ticks, grid lines, title and caption, and returns the
 * data-to-pixel scales the caller uses for its own marks.
 */
export function buildFrame(opts: FrameOptions): Frame {
  const width = opts.width ?? 720;
  const height = opts.height ?? 440;
  const x0 = MARGIN.left;
  const x1 = width - MARGIN.right;
  const y0 = MARGIN.top;
  const y1 = height - MARGIN.bottom;

  const [dx0, dx1] = pad(opts.xDomain[0], opts.xDomain[1]);
  const [dy0, dy1] = pad(opts.yDomain[0], opts.yDomain[1]);
  const sx = linearScale(dx0, dx1, x0, x1);
  const sy = linearScale(dy0, dy1, y1, y0);

  const marks: Mark[] = [];
  marks.push({ kind: "rect", x: 0, y: 0, w: width, h: height, fill: "#ffffff" });

  const xTicks = ticks(dx0, dx1, 7);
  const yTicks = opts.logY ? decadeTicks(dy0, dy1) : ticks(dy0, dy1, 6);
  for (const t of xTicks) {
    const px = sx(t);
    marks.push({ kind: "polyline", points: [[px, y0], [px, y1]], stroke: COLORS.grid, width: 1 });
    marks.push({ kind: "polyline", points: [[px, y1], [px, y1 + 5]], stroke: COLORS.frame, width: 1 });
    marks.push({
      kind: "text", x: px, y: y1 + 18, text: formatTick(t),
      size: 11, fill: COLORS.text, anchor: "middle",
    });
  }
  for (const t of yTicks) {
    const py = sy(t);
    marks.push({ kind: "polyline", points: [[x0, py], [x1, py]], stroke: COLORS.grid, width: 1 });
    marks.push({ kind: "polyline", points: [[x0 - 5, py], [x0, py]], stroke: COLORS.frame, width: 1 });
    const label = opts.logY ? `1e${formatTick(t)}` : formatTick(t);
    marks.push({
      kind: "text", x: x0 - 8, y: py + 4, text: label,
      size: 11, fill: COLORS.text, anchor: "end",
    });
  }

  marks.push({
    kind: "polyline",
    points: [[x0, y0], [x0, y1], [x1, y1], [x1, y0], [x0, y0]],
    stroke: COLORS.frame,
    width: 1,
  });
  marks.push({
    kind: "text", x: (x0 + x1) / 2, y: 20, text: opts.title,
    size: 14, fill: COLORS.text, anchor: "middle",
  });
  marks.push({
    kind: "text", x: (x0 + x1) / 2, y: y1 + 34, text: opts.xLabel,
    size: 12, fill: COLORS.text, anchor: "middle",
  });
  // y label drawn horizontally above the axis; rotated text would force
  // transforms into the rasterizer for one string
  marks.push({
    kind: "text", x: 6, y: y0 - 12, text: opts.yLabel,
    size: 12, fill: COLORS.text, anchor: "start",
  });
  marks.push({
    kind: "text", x: (x0 + x1) / 2, y: y1 + 50, text: opts.caption,
    size: 10, fill: COLORS.faint, anchor: "middle",
  });

  return { fig: { width, height, marks }, sx, sy, area: { x0, x1, y0, y1 } };
}

/**
 * Splits a sampled curve into polyline marks, breaking at points where
 * `gap` returns true and at non-finite values.
 */
export function brokenPolyline(
  xs: ArrayLike<number>,
  ys: ArrayLike<number>,
  sx: Scale,
  sy: Scale,
  gap: (i: number) => boolean,
  stroke: string,
  width: number,
  dash?: number[],
): Mark[] {
  const marks: Mark[] = [];
  let run: [number, number][] = [];
  const flush = () => {
    if (run.length > 1) {
      const m: Mark = { kind: "polyline", points: run, stroke, width };
      if (dash) m.dash = dash;
      marks.push(m);
    }
    run = [];
  };
  for (let i = 0; i < xs.length; i++) {
    const x = xs[i] as number;
    const y = ys[i] as number;
    if (gap(i) || !Number.isFinite(x) || !Number.isFinite(y)) {
      flush();
      continue;
    }
    run.push([sx(x), sy(y)]);
  }
  flush();
  return marks;
}

export function finiteExtent(values: ArrayLike<number>): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (let i = 0; i < values.length; i++) {
    const v = values[i] as number;
    if (!Number.isFinite(v)) continue;
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (lo > hi) return [0, 1];
  return [lo, hi];
}
