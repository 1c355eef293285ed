/**
 * Minimal deterministic SVG chart builder. No timestamps, no random
 * ids, fixed size and palette, so identical inputs give identical
 * bytes.
 */

export const WIDTH = 720;
export const HEIGHT = 420;
const MARGIN = { left: 64, right: 16, top: 40, bottom: 48 };

export const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#ff7f0e",
  "#9467bd",
  "#8c564b",
];

/** Canonical short float text so output bytes are stable. */
export function fmt(x: number): string {
  if (Object.is(x, -0)) x = 0;
  return Number(x.toPrecision(6)).toString();
}

export interface Series {
  label: string;
  xs: number[];
  ys: number[];
}

function span(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  return [lo, hi];
}

/** Round tick positions covering [lo, hi], 1-2-5 spacing. */
export function ticks(lo: number, hi: number, target = 6): number[] {
  const raw = (hi - lo) / target;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const norm = raw / mag;
  const step = (norm >= 5 ? 5 : norm >= 2 ? 2 : 1) * mag;
  const out: number[] = [];
  for (let t = Math.ceil(lo / step) * step; t <= hi + step * 1e-9; t += step) {
    out.push(Math.abs(t) < step * 1e-9 ? 0 : t);
  }
  return out;
}

export function lineChart(
  title: string,
  xLabel: string,
  yLabel: string,
  series: Series[],
): string {
  const [x0, x1] = span(series.flatMap((s) => s.xs));
  const [yLo, yHi] = span(series.flatMap((s) => s.ys));
  const pad = 0.05 * (yHi - yLo);
  const y0 = yLo - pad;
  const y1 = yHi + pad;

  const px = (x: number) =>
    MARGIN.left + ((x - x0) / (x1 - x0)) * (WIDTH - MARGIN.left - MARGIN.right);
  const py = (y: number) =>
    HEIGHT - MARGIN.bottom -
    ((y - y0) / (y1 - y0)) * (HEIGHT - MARGIN.top - MARGIN.bottom);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
      `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif" font-size="12">`,
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  parts.push(
    `<text x="${WIDTH / 2}" y="20" text-anchor="middle" font-size="14">` +
      `${escapeXml(title)}</text>`,
  );

  for (const t of ticks(x0, x1)) {
    const x = fmt(px(t));
    parts.push(
      `<line x1="${x}" y1="${MARGIN.top}" x2="${x}" ` +
        `y2="${HEIGHT - MARGIN.bottom}" stroke="#ddd"/>`,
    );
    parts.push(
      `<text x="${x}" y="${HEIGHT - MARGIN.bottom + 16}" ` +
        `text-anchor="middle">${fmt(t)}</text>`,
    );
  }
  for (const t of ticks(y0, y1)) {
    const y = fmt(py(t));
    parts.push(
      `<line x1="${MARGIN.left}" y1="${y}" x2="${WIDTH - MARGIN.right}" ` +
        `y2="${y}" stroke="#ddd"/>`,
    );
    parts.push(
      `<text x="${MARGIN.left - 6}" y="${y}" text-anchor="end" ` +
        `dominant-baseline="middle">${fmt(t)}</text>`,
    );
  }
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" ` +
      `width="${WIDTH - MARGIN.left - MARGIN.right}" ` +
      `height="${HEIGHT - MARGIN.top - MARGIN.bottom}" ` +
      `fill="none" stroke="#333"/>`,
  );

  series.forEach((s, k) => {
    const pts = s.xs
      .map((x, i) => `${fmt(px(x))},${fmt(py(s.ys[i]))}`)
      .join(" ");
    parts.push(
      `<polyline points="${pts}" fill="none" ` +
        `stroke="${PALETTE[k % PALETTE.length]}" stroke-width="1.5"/>`,
    );
  });

  series.forEach((s, k) => {
    const y = MARGIN.top + 14 + 16 * k;
    const x = WIDTH - MARGIN.right - 150;
    parts.push(
      `<line x1="${x}" y1="${y - 4}" x2="${x + 24}" y2="${y - 4}" ` +
        `stroke="${PALETTE[k % PALETTE.length]}" stroke-width="2"/>`,
    );
    parts.push(`<text x="${x + 30}" y="${y}">${escapeXml(s.label)}</text>`);
  });

  parts.push(
    `<text x="${WIDTH / 2}" y="${HEIGHT - 10}" text-anchor="middle">` +
      `${escapeXml(xLabel)}</text>`,
  );
  parts.push(
    `<text x="16" y="${HEIGHT / 2}" text-anchor="middle" ` +
      `transform="rotate(-90 16 ${HEIGHT / 2})">${escapeXml(yLabel)}</text>`,
  );
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

export function barChart(
  title: string,
  yLabel: string,
  labels: string[],
  values: number[],
): string {
  const hi = Math.max(1.0, ...values) * 1.1;
  const plotW = WIDTH - MARGIN.left - MARGIN.right;
  const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const slot = plotW / labels.length;
  const py = (v: number) => HEIGHT - MARGIN.bottom - (v / hi) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
      `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif" font-size="12">`,
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  parts.push(
    `<text x="${WIDTH / 2}" y="20" text-anchor="middle" font-size="14">` +
      `${escapeXml(title)}</text>`,
  );
  for (const t of ticks(0, hi)) {
    const y = fmt(py(t));
    parts.push(
      `<line x1="${MARGIN.left}" y1="${y}" x2="${WIDTH - MARGIN.right}" ` +
        `y2="${y}" stroke="#ddd"/>`,
    );
    parts.push(
      `<text x="${MARGIN.left - 6}" y="${y}" text-anchor="end" ` +
        `dominant-baseline="middle">${fmt(t)}</text>`,
    );
  }
  const base = fmt(py(1.0));
  parts.push(
    `<line x1="${MARGIN.left}" y1="${base}" x2="${WIDTH - MARGIN.right}" ` +
      `y2="${base}" stroke="#888" stroke-dasharray="4 3"/>`,
  );
  values.forEach((v, k) => {
    const x = MARGIN.left + slot * (k + 0.2);
    const w = slot * 0.6;
    const y = py(v);
    parts.push(
      `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" ` +
        `height="${fmt(HEIGHT - MARGIN.bottom - y)}" ` +
        `fill="${PALETTE[k % PALETTE.length]}"/>`,
    );
    parts.push(
      `<text x="${fmt(x + w / 2)}" y="${fmt(y - 6)}" text-anchor="middle">` +
        `${fmt(v)}</text>`,
    );
    parts.push(
      `<text x="${fmt(x + w / 2)}" y="${HEIGHT - MARGIN.bottom + 16}" ` +
        `text-anchor="middle">${escapeXml(labels[k])}</text>`,
    );
  });
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" ` +
      `height="${plotH}" fill="none" stroke="#333"/>`,
  );
  parts.push(
    `<text x="16" y="${HEIGHT / 2}" text-anchor="middle" ` +
      `transform="rotate(-90 16 ${HEIGHT / 2})">${escapeXml(yLabel)}</text>`,
  );
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

function escapeXml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}
