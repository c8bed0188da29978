import { requireColumns } from "../csv.js";
import { Manifest } from "../manifest.js";
import { COLORS, Figure, brokenPolyline, buildFrame, finiteExtent } from "../figure.js";
import { join } from "node:path";
import { hashCaption, loadTable } from "./common.js";

/**
 * Limit trace over the energy grid with the elliptic region shaded,
 * the confirmed intervals drawn as bars along the bottom, and any
 * excluded interior points ticked on those bars.
 */
export function buildIntervalsFigure(dir: string, manifest: Manifest): Figure {
  const mask = loadTable(dir, "mask.csv");
  requireColumns(mask, ["lam", "elliptic", "trace"], join(dir, "mask.csv"));
  const bars = loadTable(dir, "intervals.csv");
  requireColumns(bars, ["lo", "hi"], join(dir, "intervals.csv"));

  const lam = mask.data.lam!;
  const trace = mask.data.trace!;
  const elliptic = mask.data.elliptic!;

  const [tLo, tHi] = finiteExtent(trace);
  const frame = buildFrame({
    title: "Elliptic energy windows",
    caption: hashCaption(manifest, ["mask.csv", "intervals.csv"]),
    xDomain: finiteExtent(lam),
    yDomain: [Math.min(tLo, -2.5), Math.max(tHi, 2.5)],
    xLabel: "energy",
    yLabel: "limit trace",
  });
  const { fig, sx, sy, area } = frame;

  // shade maximal runs where the step family stays elliptic
  let runStart = -1;
  for (let i = 0; i <= mask.rows; i++) {
    const on = i < mask.rows && (elliptic[i] as number) > 0;
    if (on && runStart < 0) runStart = i;
    if (!on && runStart >= 0) {
      const xa = sx(lam[runStart] as number);
      const xb = sx(lam[i - 1] as number);
      fig.marks.push({
        kind: "rect", x: xa, y: area.y0, w: Math.max(1, xb - xa),
        h: area.y1 - area.y0, fill: COLORS.band,
      });
      runStart = -1;
    }
  }

  for (const level of [-2, 2]) {
    fig.marks.push({
      kind: "polyline",
      points: [[area.x0, sy(level)], [area.x1, sy(level)]],
      stroke: COLORS.faint,
      width: 1,
      dash: [5, 4],
    });
  }
  fig.marks.push(...brokenPolyline(lam, trace, sx, sy, () => false, COLORS.line, 2));

  const yBar = area.y1 - 10;
  for (let i = 0; i < bars.rows; i++) {
    fig.marks.push({
      kind: "polyline",
      points: [[sx(bars.data.lo![i] as number), yBar], [sx(bars.data.hi![i] as number), yBar]],
      stroke: COLORS.good,
      width: 5,
    });
  }

  const excluded = manifest.summary["excluded_points"];
  if (Array.isArray(excluded)) {
    for (const p of excluded) {
      if (typeof p === "number") {
        fig.marks.push({ kind: "circle", cx: sx(p), cy: yBar, r: 4, fill: COLORS.accent });
      }
    }
  }
  return fig;
}
