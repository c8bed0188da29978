import { requireColumns } from "../csv.js";
import { Manifest } from "../manifest.js";
import { COLORS, Figure, buildFrame, finiteExtent } from "../figure.js";
import { formatShort } from "../scale.js";
import { join } from "node:path";
import { hashCaption, loadTable } from "./common.js";

/**
 * Sampled moment estimates with a 3 sigma band on a log axis, against
 * the theoretical ceiling. The ceiling usually sits hundreds of decades
 * above the data; when it does it is reported as an annotation instead
 * of flattening the curve.
 */
export function buildMomentFigure(dir: string, manifest: Manifest): Figure {
  const t = loadTable(dir, "moment_bound.csv");
  requireColumns(t, ["n", "estimate", "stderr", "bound"], join(dir, "moment_bound.csv"));

  const n = t.data.n!;
  const est = t.data.estimate!;
  const err = t.data.stderr!;
  const bound = t.data.bound![0] as number;

  const upper: number[] = [];
  const lower: number[] = [];
  let minPos = Infinity;
  for (let i = 0; i < t.rows; i++) {
    const e = est[i] as number;
    if (e > 0 && e < minPos) minPos = e;
  }
  const floor = (Number.isFinite(minPos) ? minPos : 1) * 1e-3;
  for (let i = 0; i < t.rows; i++) {
    const e = est[i] as number;
    const s = err[i] as number;
    upper.push(Math.log10(Math.max(e + 3 * s, floor)));
    lower.push(Math.log10(Math.max(e - 3 * s, floor)));
  }
  const logEst = Array.from(est, (e) => Math.log10(Math.max(e, floor)));

  const [bLo] = finiteExtent(lower);
  const [, bHi] = finiteExtent(upper);
  const logBound = Math.log10(bound);
  // only stretch the axis to the ceiling when it is in reach
  const boundOnAxis = Number.isFinite(logBound) && logBound <= bHi + (bHi - bLo);
  const yHi = boundOnAxis ? Math.max(bHi, logBound) : bHi;

  const frame = buildFrame({
    title: "Moment growth vs ceiling",
    caption: hashCaption(manifest, ["moment_bound.csv"]),
    xDomain: finiteExtent(n),
    yDomain: [bLo, yHi],
    xLabel: "shell count n",
    yLabel: "moment (log scale)",
    logY: true,
  });
  const { fig, sx, sy, area } = frame;

  const band: [number, number][] = [];
  for (let i = 0; i < t.rows; i++) band.push([sx(n[i] as number), sy(upper[i] as number)]);
  for (let i = t.rows - 1; i >= 0; i--) band.push([sx(n[i] as number), sy(lower[i] as number)]);
  fig.marks.push({ kind: "polygon", points: band, fill: COLORS.band });

  const line: [number, number][] = [];
  for (let i = 0; i < t.rows; i++) line.push([sx(n[i] as number), sy(logEst[i] as number)]);
  fig.marks.push({ kind: "polyline", points: line, stroke: COLORS.line, width: 2 });

  if (boundOnAxis) {
    fig.marks.push({
      kind: "polyline",
      points: [[area.x0, sy(logBound)], [area.x1, sy(logBound)]],
      stroke: COLORS.accent,
      width: 1,
      dash: [6, 4],
    });
    fig.marks.push({
      kind: "text", x: area.x1 - 4, y: sy(logBound) - 6,
      text: `ceiling ${formatShort(bound)}`, size: 10, fill: COLORS.accent, anchor: "end",
    });
  } else {
    fig.marks.push({
      kind: "text", x: area.x1 - 4, y: area.y0 + 14,
      text: `ceiling ${formatShort(bound)} (off scale)`,
      size: 10, fill: COLORS.accent, anchor: "end",
    });
  }
  return fig;
}
