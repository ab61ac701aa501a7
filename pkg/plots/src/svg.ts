/** Dependency-free deterministic SVG chart primitives. */

export const WIDTH = 640;
export const HEIGHT = 400;
const MARGIN = { top: 48, right: 24, bottom: 56, left: 64 };
const PLOT_W = WIDTH - MARGIN.left - MARGIN.right;
const PLOT_H = HEIGHT - MARGIN.top - MARGIN.bottom;

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/** Fixed-precision coordinate so output bytes are stable across runs. */
function fmt(value: number): string {
  return value.toFixed(2).replace(/^-0\.00$/, "0.00");
}

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export interface Series {
  label: string;
  /** x already transformed to the axis domain (e.g. log10 of the budget). */
  xs: number[];
  ys: number[];
}

export interface AxisTick {
  value: number;
  label: string;
}

export interface LineChartSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  xTicks: AxisTick[];
  series: Series[];
}

function open(title: string): string[] {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="Helvetica, Arial, sans-serif">`,
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="#ffffff"/>`,
    `<text x="${WIDTH / 2}" y="24" font-size="16" text-anchor="middle">${esc(title)}</text>`,
  ];
}

function frame(xLabel: string, yLabel: string, xTicks: AxisTick[], xMin: number, xMax: number): string[] {
  const span = xMax - xMin || 1;
  const xPos = (v: number) => MARGIN.left + ((v - xMin) / span) * PLOT_W;
  const yPos = (v: number) => MARGIN.top + (1 - v) * PLOT_H;
  const parts: string[] = [];
  for (let i = 0; i <= 5; i += 1) {
    const v = i / 5;
    const y = yPos(v);
    parts.push(
      `<line x1="${fmt(MARGIN.left)}" y1="${fmt(y)}" x2="${fmt(MARGIN.left + PLOT_W)}" y2="${fmt(y)}" stroke="#dddddd"/>`,
      `<text x="${fmt(MARGIN.left - 8)}" y="${fmt(y + 4)}" font-size="11" text-anchor="end">${v.toFixed(1)}</text>`,
    );
  }
  for (const tick of xTicks) {
    const x = xPos(tick.value);
    parts.push(
      `<line x1="${fmt(x)}" y1="${fmt(MARGIN.top)}" x2="${fmt(x)}" y2="${fmt(MARGIN.top + PLOT_H)}" stroke="#eeeeee"/>`,
      `<text x="${fmt(x)}" y="${fmt(MARGIN.top + PLOT_H + 18)}" font-size="11" text-anchor="middle">${esc(tick.label)}</text>`,
    );
  }
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${PLOT_W}" height="${PLOT_H}" fill="none" stroke="#333333"/>`,
    `<text x="${WIDTH / 2}" y="${HEIGHT - 12}" font-size="13" text-anchor="middle">${esc(xLabel)}</text>`,
    `<text x="18" y="${MARGIN.top + PLOT_H / 2}" font-size="13" text-anchor="middle" transform="rotate(-90 18 ${MARGIN.top + PLOT_H / 2})">${esc(yLabel)}</text>`,
  );
  return parts;
}

/** Polyline chart over a [0, 1] y-domain with caller-supplied x ticks. */
export function lineChart(spec: LineChartSpec): string {
  const xsAll = spec.series.flatMap((s) => s.xs).concat(spec.xTicks.map((t) => t.value));
  const xMin = Math.min(...xsAll);
  const xMax = Math.max(...xsAll);
  const span = xMax - xMin || 1;
  const xPos = (v: number) => MARGIN.left + ((v - xMin) / span) * PLOT_W;
  const yPos = (v: number) => MARGIN.top + (1 - v) * PLOT_H;

  const parts = open(spec.title);
  parts.push(...frame(spec.xLabel, spec.yLabel, spec.xTicks, xMin, xMax));
  spec.series.forEach((series, idx) => {
    const color = PALETTE[idx % PALETTE.length]!;
    const points = series.xs
      .map((x, i) => `${fmt(xPos(x))},${fmt(yPos(series.ys[i]!))}`)
      .join(" ");
    parts.push(
      `<polyline fill="none" stroke="${color}" stroke-width="2" points="${points}"/>`,
    );
    for (let i = 0; i < series.xs.length; i += 1) {
      parts.push(
        `<circle cx="${fmt(xPos(series.xs[i]!))}" cy="${fmt(yPos(series.ys[i]!))}" r="2.5" fill="${color}"/>`,
      );
    }
    const legendY = MARGIN.top + 14 + idx * 16;
    parts.push(
      `<line x1="${MARGIN.left + 10}" y1="${legendY}" x2="${MARGIN.left + 34}" y2="${legendY}" stroke="${color}" stroke-width="2"/>`,
      `<text x="${MARGIN.left + 40}" y="${legendY + 4}" font-size="11">${esc(series.label)}</text>`,
    );
  });
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

export interface BarGroup {
  label: string;
  values: number[];
}

export interface BarChartSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  /** one legend entry per value within a group */
  seriesLabels: string[];
  groups: BarGroup[];
}

/** Grouped bars over a [0, 1] y-domain. */
export function barChart(spec: BarChartSpec): string {
  const yPos = (v: number) => MARGIN.top + (1 - v) * PLOT_H;
  const parts = open(spec.title);
  parts.push(
    ...frame(spec.xLabel, spec.yLabel, [], 0, 1).filter((p) => !p.startsWith("<line x1=")
      || p.includes("#dddddd")),
  );
  const nGroups = Math.max(spec.groups.length, 1);
  const slot = PLOT_W / nGroups;
  const barW = Math.min(36, (slot * 0.7) / Math.max(spec.seriesLabels.length, 1));
  spec.groups.forEach((group, g) => {
    const cx = MARGIN.left + slot * (g + 0.5);
    const total = barW * group.values.length;
    group.values.forEach((value, s) => {
      const color = PALETTE[s % PALETTE.length]!;
      const x = cx - total / 2 + s * barW;
      parts.push(
        `<rect x="${fmt(x)}" y="${fmt(yPos(value))}" width="${fmt(barW)}" height="${fmt(yPos(0) - yPos(value))}" fill="${color}"/>`,
        `<text x="${fmt(x + barW / 2)}" y="${fmt(yPos(value) - 4)}" font-size="9" text-anchor="middle">${value.toFixed(2)}</text>`,
      );
    });
    parts.push(
      `<text x="${fmt(cx)}" y="${fmt(MARGIN.top + PLOT_H + 18)}" font-size="11" text-anchor="middle">${esc(group.label)}</text>`,
    );
  });
  spec.seriesLabels.forEach((label, idx) => {
    const color = PALETTE[idx % PALETTE.length]!;
    const legendY = MARGIN.top + 14 + idx * 16;
    parts.push(
      `<rect x="${MARGIN.left + 10}" y="${legendY - 8}" width="12" height="12" fill="${color}"/>`,
      `<text x="${MARGIN.left + 28}" y="${legendY + 2}" font-size="11">${esc(label)}</text>`,
    );
  });
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
