/** Affine map from a data domain onto a pixel range. */
export type Scale = (x: number) => number;

export function linearScale(d0: number, d1: number, r0: number, r1: number): Scale {
  const span = d1 - d0 || 1;
  const k = (r1 - r0) / span;
  return (x) => r0 + (x - d0) * k;
}

/** Round-number ticks covering [lo, hi], roughly `count` of them. */
export function ticks(lo: number, hi: number, count = 6): number[] {
  if (!(hi > lo)) return [lo];
  const rawStep = (hi - lo) / Math.max(1, count);
  const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
  const norm = rawStep / mag;
  let step: number;
  if (norm < 1.5) step = mag;
  else if (norm < 3.5) step = 2 * mag;
  else if (norm < 7.5) step = 5 * mag;
  else step = 10 * mag;
  const out: number[] = [];
  const first = Math.ceil(lo / step) * step;
  for (let v = first; v <= hi + step * 1e-9; v += step) {
    // snap to the grid so 0.30000000000000004 prints as 0.3
    out.push(Math.round(v / step) * step);
  }
  return out;
}

/** Decade ticks for a log10 axis given log10 domain endpoints. */
export function decadeTicks(logLo: number, logHi: number, maxCount = 8): number[] {
  const lo = Math.ceil(logLo);
  const hi = Math.floor(logHi);
  if (hi < lo) return [Math.round((logLo + logHi) / 2)];
  const stride = Math.max(1, Math.ceil((hi - lo + 1) / maxCount));
  const out: number[] = [];
  for (let e = lo; e <= hi; e += stride) out.push(e);
  return out;
}

export function formatTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e5 || a < 1e-3) return v.toExponential(0).replace("+", "");
  const s = v.toPrecision(6);
  return s.includes(".") ? s.replace(/0+$/, "").replace(/\.$/, "") : s;
}

/** Short scientific form used in annotations, e.g. 3.8e+265. */
export function formatShort(v: number): string {
  if (!Number.isFinite(v)) return String(v);
  const a = Math.abs(v);
  if (a !== 0 && (a >= 1e4 || a < 1e-2)) return v.toExponential(1);
  return formatTick(Number(v.toPrecision(3)));
}
