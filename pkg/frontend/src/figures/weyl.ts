import { requireColumns } from "../csv.js";
import { Manifest } from "../manifest.js";
import { COLORS, Figure, buildFrame, finiteExtent } from "../figure.js";
import { join } from "node:path";
import { hashCaption, loadTable } from "./common.js";

/** Contraction of the nested disk radii on a log axis, both estimates. */
export function buildWeylFigure(dir: string, manifest: Manifest): Figure {
  const t = loadTable(dir, "weyl.csv");
  requireColumns(
    t,
    ["n", "radius", "radius_alt", "center_re", "center_im", "average_re", "average_im"],
    join(dir, "weyl.csv"),
  );

  const n = t.data.n!;
  const logR = Array.from(t.data.radius!, (r) => Math.log10(r));
  const logAlt = Array.from(t.data.radius_alt!, (r) => Math.log10(r));

  const [lo1, hi1] = finiteExtent(logR);
  const [lo2, hi2] = finiteExtent(logAlt);
  const frame = buildFrame({
    title: "Disk radius vs sweep depth",
    caption: hashCaption(manifest, ["weyl.csv"]),
    xDomain: finiteExtent(n),
    yDomain: [Math.min(lo1, lo2), Math.max(hi1, hi2)],
    xLabel: "depth n",
    yLabel: "radius (log scale)",
    logY: true,
  });
  const { fig, sx, sy } = frame;

  const pts = (ys: number[]): [number, number][] =>
    Array.from(n, (x, i) => [sx(x as number), sy(ys[i] as number)] as [number, number]);

  fig.marks.push({ kind: "polyline", points: pts(logAlt), stroke: COLORS.second, width: 1, dash: [5, 4] });
  fig.marks.push({ kind: "polyline", points: pts(logR), stroke: COLORS.line, width: 2 });
  for (const [px, py] of pts(logR)) {
    fig.marks.push({ kind: "circle", cx: px, cy: py, r: 3, fill: COLORS.line });
  }
  return fig;
}
