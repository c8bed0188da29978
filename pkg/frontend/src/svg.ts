import { Figure, Mark } from "./figure.js";

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function fmt(v: number): string {
  return String(Math.round(v * 100) / 100);
}

function markSvg(m: Mark): string {
  switch (m.kind) {
    case "polyline": {
      const pts = m.points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
      const dash = m.dash ? ` stroke-dasharray="${m.dash.join(" ")}"` : "";
      return `<polyline points="${pts}" fill="none" stroke="${m.stroke}" stroke-width="${m.width}"${dash}/>`;
    }
    case "rect":
      return `<rect x="${fmt(m.x)}" y="${fmt(m.y)}" width="${fmt(m.w)}" height="${fmt(m.h)}" fill="${m.fill}"/>`;
    case "circle":
      return `<circle cx="${fmt(m.cx)}" cy="${fmt(m.cy)}" r="${fmt(m.r)}" fill="${m.fill}"/>`;
    case "polygon": {
      const pts = m.points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
      return `<polygon points="${pts}" fill="${m.fill}"/>`;
    }
    case "text":
      return (
        `<text x="${fmt(m.x)}" y="${fmt(m.y)}" font-size="${m.size}" fill="${m.fill}" ` +
        `text-anchor="${m.anchor}" font-family="monospace">${esc(m.text)}</text>`
      );
  }
}

export function renderSvg(fig: Figure): string {
  const body = fig.marks.map(markSvg).join("\n  ");
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${fig.width}" height="${fig.height}" ` +
    `viewBox="0 0 ${fig.width} ${fig.height}">\n  ${body}\n</svg>\n`
  );
}
