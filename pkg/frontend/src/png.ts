/**
 * Minimal PNG writer for figures.
 *
 * Rasterizes the mark list into an 8-bit RGB buffer and emits a
 * single-IDAT PNG. Compression and CRC come from node:zlib; the
 * geometry (lines, fills, a 5x7 bitmap font) is done here so the
 * package needs no native canvas dependency.
 */

import { deflateSync, crc32 } from "node:zlib";
import { Figure, Mark } from "./figure.js";

function parseColor(hex: string): [number, number, number] {
  const v = parseInt(hex.slice(1), 16);
  return [(v >> 16) & 0xff, (v >> 8) & 0xff, v & 0xff];
}

class Raster {
  readonly width: number;
  readonly height: number;
  readonly px: Uint8Array;

  constructor(width: number, height: number) {
    this.width = width;
    this.height = height;
    this.px = new Uint8Array(width * height * 3).fill(255);
  }

  set(x: number, y: number, c: [number, number, number]): void {
    if (x < 0 || y < 0 || x >= this.width || y >= this.height) return;
    const i = (y * this.width + x) * 3;
    this.px[i] = c[0];
    this.px[i + 1] = c[1];
    this.px[i + 2] = c[2];
  }

  hline(x0: number, x1: number, y: number, c: [number, number, number]): void {
    for (let x = Math.ceil(Math.min(x0, x1)); x <= Math.max(x0, x1); x++) this.set(x, y, c);
  }

  disc(cx: number, cy: number, r: number, c: [number, number, number]): void {
    const ri = Math.max(0, r);
    for (let dy = -Math.ceil(ri); dy <= Math.ceil(ri); dy++) {
      const w = ri * ri - dy * dy;
      if (w < 0) continue;
      const dx = Math.sqrt(w);
      this.hline(cx - dx, cx + dx, Math.round(cy + dy), c);
    }
  }

  line(x0: number, y0: number, x1: number, y1: number, width: number, c: [number, number, number]): void {
    let ax = Math.round(x0);
    let ay = Math.round(y0);
    const bx = Math.round(x1);
    const by = Math.round(y1);
    const dx = Math.abs(bx - ax);
    const dy = -Math.abs(by - ay);
    const sx = ax < bx ? 1 : -1;
    const sy = ay < by ? 1 : -1;
    let err = dx + dy;
    for (;;) {
      if (width > 1.5) this.disc(ax, ay, width / 2, c);
      else this.set(ax, ay, c);
      if (ax === bx && ay === by) break;
      const e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        ax += sx;
      }
      if (e2 <= dx) {
        err += dx;
        ay += sy;
      }
    }
  }

  rect(x: number, y: number, w: number, h: number, c: [number, number, number]): void {
    for (let yy = Math.round(y); yy < Math.round(y + h); yy++) {
      this.hline(x, x + w - 1, yy, c);
    }
  }

  polygon(points: [number, number][], c: [number, number, number]): void {
    if (points.length < 3) return;
    let lo = Infinity;
    let hi = -Infinity;
    for (const [, y] of points) {
      lo = Math.min(lo, y);
      hi = Math.max(hi, y);
    }
    for (let y = Math.ceil(lo); y <= Math.floor(hi); y++) {
      const xs: number[] = [];
      for (let i = 0; i < points.length; i++) {
        const [xa, ya] = points[i] as [number, number];
        const [xb, yb] = points[(i + 1) % points.length] as [number, number];
        // half-open rule so shared vertices are not counted twice
        if (ya <= y !== yb <= y) {
          xs.push(xa + ((y - ya) / (yb - ya)) * (xb - xa));
        }
      }
      xs.sort((a, b) => a - b);
      for (let k = 0; k + 1 < xs.length; k += 2) {
        this.hline(xs[k] as number, xs[k + 1] as number, y, c);
      }
    }
  }
}

// 5x7 glyphs, one number per row, bit 4 is the leftmost column.
const FONT: Record<string, number[]> = {
  "0": [0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e],
  "1": [0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e],
  "2": [0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f],
  "3": [0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e],
  "4": [0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02],
  "5": [0x1f, 0x10, 0x1e, 0x01, 0x01, 0x11, 0x0e],
  "6": [0x06, 0x08, 0x10, 0x1e, 0x11, 0x11, 0x0e],
  "7": [0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08],
  "8": [0x0e, 0x11, 0x11, 0x0e, 0x11, 0x11, 0x0e],
  "9": [0x0e, 0x11, 0x11, 0x0f, 0x01, 0x02, 0x0c],
  A: [0x0e, 0x11, 0x11, 0x1f, 0x11, 0x11, 0x11],
  B: [0x1e, 0x11, 0x11, 0x1e, 0x11, 0x11, 0x1e],
  C: [0x0e, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0e],
  D: [0x1c, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1c],
  E: [0x1f, 0x10, 0x10, 0x1e, 0x10, 0x10, 0x1f],
  F: [0x1f, 0x10, 0x10, 0x1e, 0x10, 0x10, 0x10],
  G: [0x0e, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0f],
  H: [0x11, 0x11, 0x11, 0x1f, 0x11, 0x11, 0x11],
  I: [0x0e, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0e],
  J: [0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0c],
  K: [0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11],
  L: [0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1f],
  M: [0x11, 0x1b, 0x15, 0x15, 0x11, 0x11, 0x11],
  N: [0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11],
  O: [0x0e, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0e],
  P: [0x1e, 0x11, 0x11, 0x1e, 0x10, 0x10, 0x10],
  Q: [0x0e, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0d],
  R: [0x1e, 0x11, 0x11, 0x1e, 0x14, 0x12, 0x11],
  S: [0x0f, 0x10, 0x10, 0x0e, 0x01, 0x01, 0x1e],
  T: [0x1f, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04],
  U: [0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0e],
  V: [0x11, 0x11, 0x11, 0x11, 0x11, 0x0a, 0x04],
  W: [0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0a],
  X: [0x11, 0x11, 0x0a, 0x04, 0x0a, 0x11, 0x11],
  Y: [0x11, 0x11, 0x0a, 0x04, 0x04, 0x04, 0x04],
  Z: [0x1f, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1f],
  a: [0x00, 0x00, 0x0e, 0x01, 0x0f, 0x11, 0x0f],
  b: [0x10, 0x10, 0x1e, 0x11, 0x11, 0x11, 0x1e],
  c: [0x00, 0x00, 0x0e, 0x10, 0x10, 0x11, 0x0e],
  d: [0x01, 0x01, 0x0f, 0x11, 0x11, 0x11, 0x0f],
  e: [0x00, 0x00, 0x0e, 0x11, 0x1f, 0x10, 0x0e],
  f: [0x06, 0x09, 0x08, 0x1c, 0x08, 0x08, 0x08],
  g: [0x00, 0x0f, 0x11, 0x11, 0x0f, 0x01, 0x0e],
  h: [0x10, 0x10, 0x16, 0x19, 0x11, 0x11, 0x11],
  i: [0x04, 0x00, 0x0c, 0x04, 0x04, 0x04, 0x0e],
  j: [0x02, 0x00, 0x06, 0x02, 0x02, 0x12, 0x0c],
  k: [0x10, 0x10, 0x12, 0x14, 0x18, 0x14, 0x12],
  l: [0x0c, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0e],
  m: [0x00, 0x00, 0x1a, 0x15, 0x15, 0x15, 0x15],
  n: [0x00, 0x00, 0x16, 0x19, 0x11, 0x11, 0x11],
  o: [0x00, 0x00, 0x0e, 0x11, 0x11, 0x11, 0x0e],
  p: [0x00, 0x00, 0x1e, 0x11, 0x1e, 0x10, 0x10],
  q: [0x00, 0x00, 0x0f, 0x11, 0x0f, 0x01, 0x01],
  r: [0x00, 0x00, 0x16, 0x19, 0x10, 0x10, 0x10],
  s: [0x00, 0x00, 0x0f, 0x10, 0x0e, 0x01, 0x1e],
  t: [0x08, 0x08, 0x1c, 0x08, 0x08, 0x09, 0x06],
  u: [0x00, 0x00, 0x11, 0x11, 0x11, 0x13, 0x0d],
  v: [0x00, 0x00, 0x11, 0x11, 0x11, 0x0a, 0x04],
  w: [0x00, 0x00, 0x11, 0x11, 0x15, 0x15, 0x0a],
  x: [0x00, 0x00, 0x11, 0x0a, 0x04, 0x0a, 0x11],
  y: [0x00, 0x00, 0x11, 0x11, 0x0f, 0x01, 0x0e],
  z: [0x00, 0x00, 0x1f, 0x02, 0x04, 0x08, 0x1f],
  " ": [0, 0, 0, 0, 0, 0, 0],
  ".": [0, 0, 0, 0, 0, 0x0c, 0x0c],
  ",": [0, 0, 0, 0, 0x0c, 0x04, 0x08],
  "-": [0, 0, 0, 0x1f, 0, 0, 0],
  "+": [0, 0x04, 0x04, 0x1f, 0x04, 0x04, 0],
  ":": [0, 0x0c, 0x0c, 0, 0x0c, 0x0c, 0],
  "/": [0x01, 0x01, 0x02, 0x04, 0x08, 0x10, 0x10],
  "(": [0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02],
  ")": [0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08],
  "[": [0x0e, 0x08, 0x08, 0x08, 0x08, 0x08, 0x0e],
  "]": [0x0e, 0x02, 0x02, 0x02, 0x02, 0x02, 0x0e],
  "=": [0, 0, 0x1f, 0, 0x1f, 0, 0],
  _: [0, 0, 0, 0, 0, 0, 0x1f],
  "%": [0x19, 0x19, 0x02, 0x04, 0x08, 0x13, 0x13],
  "'": [0x04, 0x04, 0x08, 0, 0, 0, 0],
};
const UNKNOWN_GLYPH = [0x1f, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1f];

function drawText(
  r: Raster,
  x: number,
  y: number,
  text: string,
  size: number,
  anchor: "start" | "middle" | "end",
  c: [number, number, number],
): void {
  const scale = Math.max(1, Math.round(size / 8));
  const advance = 6 * scale;
  const width = text.length * advance - scale;
  let ox = Math.round(x);
  if (anchor === "middle") ox -= Math.round(width / 2);
  if (anchor === "end") ox -= width;
  const oy = Math.round(y) - 7 * scale; // y is the baseline
  for (const ch of text) {
    const glyph = FONT[ch] ?? UNKNOWN_GLYPH;
    for (let row = 0; row < 7; row++) {
      const bits = glyph[row] as number;
      for (let col = 0; col < 5; col++) {
        if ((bits >> (4 - col)) & 1) {
          r.rect(ox + col * scale, oy + row * scale, scale, scale, c);
        }
      }
    }
    ox += advance;
  }
}

function drawDashed(
  r: Raster,
  pts: [number, number][],
  dash: number[],
  width: number,
  c: [number, number, number],
): void {
  const period = dash.reduce((a, b) => a + b, 0);
  let travelled = 0;
  for (let i = 0; i + 1 < pts.length; i++) {
    const [x0, y0] = pts[i] as [number, number];
    const [x1, y1] = pts[i + 1] as [number, number];
    const len = Math.hypot(x1 - x0, y1 - y0);
    if (len === 0) continue;
    let t = 0;
    while (t < len) {
      const phase = (travelled + t) % period;
      let acc = 0;
      let on = true;
      let remain = 0;
      for (const d of dash) {
        if (phase < acc + d) {
          remain = acc + d - phase;
          break;
        }
        acc += d;
        on = !on;
      }
      const t2 = Math.min(len, t + remain);
      if (on) {
        r.line(
          x0 + ((x1 - x0) * t) / len,
          y0 + ((y1 - y0) * t) / len,
          x0 + ((x1 - x0) * t2) / len,
          y0 + ((y1 - y0) * t2) / len,
          width,
          c,
        );
      }
      t = t2;
    }
    travelled += len;
  }
}

function drawMark(r: Raster, m: Mark): void {
  switch (m.kind) {
    case "polyline": {
      const c = parseColor(m.stroke);
      if (m.dash) {
        drawDashed(r, m.points, m.dash, m.width, c);
      } else {
        for (let i = 0; i + 1 < m.points.length; i++) {
          const [x0, y0] = m.points[i] as [number, number];
          const [x1, y1] = m.points[i + 1] as [number, number];
          r.line(x0, y0, x1, y1, m.width, c);
        }
      }
      break;
    }
    case "rect":
      r.rect(m.x, m.y, m.w, m.h, parseColor(m.fill));
      break;
    case "circle":
      r.disc(m.cx, m.cy, m.r, parseColor(m.fill));
      break;
    case "polygon":
      r.polygon(m.points, parseColor(m.fill));
      break;
    case "text":
      drawText(r, m.x, m.y, m.text, m.size, m.anchor, parseColor(m.fill));
      break;
  }
}

function chunk(type: string, data: Uint8Array): Uint8Array {
  const out = new Uint8Array(12 + data.length);
  const view = new DataView(out.buffer);
  view.setUint32(0, data.length);
  for (let i = 0; i < 4; i++) out[4 + i] = type.charCodeAt(i);
  out.set(data, 8);
  view.setUint32(8 + data.length, crc32(out.subarray(4, 8 + data.length)));
  return out;
}

export function renderPng(fig: Figure): Buffer {
  const r = new Raster(fig.width, fig.height);
  for (const m of fig.marks) drawMark(r, m);

  const ihdr = new Uint8Array(13);
  const iv = new DataView(ihdr.buffer);
  iv.setUint32(0, fig.width);
  iv.setUint32(4, fig.height);
  ihdr[8] = 8; // bit depth
  ihdr[9] = 2; // color type: truecolor
  // scanlines with filter byte 0 (None)
  const stride = fig.width * 3;
  const raw = new Uint8Array((stride + 1) * fig.height);
  for (let y = 0; y < fig.height; y++) {
    raw[y * (stride + 1)] = 0;
    raw.set(r.px.subarray(y * stride, (y + 1) * stride), y * (stride + 1) + 1);
  }
  const sig = Uint8Array.from([137, 80, 78, 71, 13, 10, 26, 10]);
  return Buffer.concat([
    sig,
    chunk("IHDR", ihdr),
    chunk("IDAT", deflateSync(raw)),
    chunk("IEND", new Uint8Array(0)),
  ]);
}
