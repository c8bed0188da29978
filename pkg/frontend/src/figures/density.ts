import { requireColumns } from "../csv.js";
import { Manifest } from "../manifest.js";
import {
  COLORS,
  Figure,
  Mark,
  brokenPolyline,
  buildFrame,
  finiteExtent,
} from "../figure.js";
import { formatShort } from "../scale.js";
import { existsSync } from "node:fs";
import { join } from "node:path";
import { hashCaption, loadTable } from "./common.js";

/**
 * Density profile with masked grid points drawn as gaps in the curve
 * and detected point masses overlaid as stems.
 *
 * Stem heights are normalized so the heaviest atom spans most of the
 * axis; each stem is labeled with its actual weight.
 */
export function buildDensityFigure(dir: string, manifest: Manifest, halfline: boolean): Figure {
  const density = loadTable(dir, "density.csv");
  requireColumns(density, ["lam", "density", "masked", "oscillation"], join(dir, "density.csv"));

  const files = ["density.csv"];
  let atoms: { lam: number; weight: number }[] = [];
  if (existsSync(join(dir, "atoms.csv"))) {
    const t = loadTable(dir, "atoms.csv");
    requireColumns(t, ["lam", "weight"], join(dir, "atoms.csv"));
    for (let i = 0; i < t.rows; i++) {
      atoms.push({ lam: t.data.lam![i] as number, weight: t.data.weight![i] as number });
    }
    files.push("atoms.csv");
  }

  const lam = density.data.lam!;
  const rho = density.data.density!;
  const masked = density.data.masked!;
  const osc = density.data.oscillation!;

  const [rLo, rHi] = finiteExtent(rho);
  const [oLo, oHi] = finiteExtent(osc);
  const yHi = Math.max(rHi, oHi, 1e-12);
  const frame = buildFrame({
    title: halfline ? "Density estimate, half-line model" : "Density estimate, full-line model",
    caption: hashCaption(manifest, files),
    xDomain: finiteExtent(lam),
    yDomain: [Math.min(0, rLo, oLo), yHi],
    xLabel: "energy",
    yLabel: "density",
  });
  const { fig, sx, sy, area } = frame;
  const isMasked = (i: number) => (masked[i] as number) > 0;

  // masked energies: dashed rules where the estimate is undefined
  for (let i = 0; i < density.rows; i++) {
    if (!isMasked(i)) continue;
    const px = sx(lam[i] as number);
    fig.marks.push({
      kind: "polyline",
      points: [[px, area.y0], [px, area.y1]],
      stroke: COLORS.accent,
      width: 1,
      dash: [3, 3],
    });
  }

  fig.marks.push(
    ...brokenPolyline(lam, osc, sx, sy, isMasked, COLORS.second, 1, [2, 3]),
  );
  fig.marks.push(...brokenPolyline(lam, rho, sx, sy, isMasked, COLORS.line, 2));

  if (atoms.length > 0) {
    const wMax = Math.max(...atoms.map((a) => a.weight));
    for (const a of atoms) {
      const px = sx(a.lam);
      const top = area.y1 - (0.8 * (area.y1 - area.y0) * a.weight) / wMax;
      const stem: Mark = {
        kind: "polyline",
        points: [[px, sy(0)], [px, top]],
        stroke: COLORS.accent,
        width: 2,
      };
      fig.marks.push(stem);
      fig.marks.push({ kind: "circle", cx: px, cy: top, r: 4, fill: COLORS.accent });
      fig.marks.push({
        kind: "text",
        x: px + 8,
        y: top - 4,
        text: `atom ${formatShort(a.weight)}`,
        size: 10,
        fill: COLORS.accent,
        anchor: "start",
      });
    }
  }
  return fig;
}
