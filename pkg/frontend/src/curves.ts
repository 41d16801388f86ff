/**
 * Coverage-over-time chart for a batch of missions. Reads the plot manifest
 * a batch run emits, draws one panel per seed with one curve per method,
 * and returns (optionally writes) a deterministic SVG document.
 */

import * as fs from "node:fs";

import {
  CurvePoint,
  ManifestEntry,
  assertMonotone,
  parseCurveCsv,
  parseManifest,
} from "./formats";
import { fmt, svgDocument, tag, text } from "./svg";

const PLOT_W = 180;
const PLOT_H = 110;
const PAD_LEFT = 45;
const PAD_RIGHT = 12;
const PAD_TOP = 22;
const PAD_BOTTOM = 36;
const PANEL_W = PAD_LEFT + PLOT_W + PAD_RIGHT;
const PANEL_H = PAD_TOP + PLOT_H + PAD_BOTTOM;
const COLS = 4;
const LEGEND_H = 26;
const MARGIN = 10;

const PALETTE = [
  "#1f6fb2",
  "#d1495b",
  "#2e8b57",
  "#b8860b",
  "#6a51a3",
  "#444444",
];

interface Series {
  readonly entry: ManifestEntry;
  readonly points: CurvePoint[];
}

function loadSeries(entries: ManifestEntry[]): Series[] {
  return entries.map((entry) => {
    const label = `${entry.method} seed ${entry.seed}`;
    const points = parseCurveCsv(fs.readFileSync(entry.curvePath, "utf-8"), label);
    assertMonotone(points, label);
    return { entry, points };
  });
}

function polylinePoints(
  points: CurvePoint[],
  x0: number,
  y0: number,
  tMax: number,
): string {
  return points
    .map((p) => {
      const x = x0 + (p.t / tMax) * PLOT_W;
      const y = y0 + ((100 - p.coverage) / 100) * PLOT_H;
      return `${fmt(x)},${fmt(y)}`;
    })
    .join(" ");
}

function panel(
  seed: number,
  series: Series[],
  colors: Map<string, string>,
  px: number,
  py: number,
  tMax: number,
): string[] {
  const x0 = px + PAD_LEFT;
  const y0 = py + PAD_TOP;
  const body: string[] = [];
  body.push(text(x0 + PLOT_W / 2, py + 14, `seed ${seed}`, {
    "text-anchor": "middle",
    "font-size": 12,
  }));
  body.push(tag("rect", {
    x: x0,
    y: y0,
    width: PLOT_W,
    height: PLOT_H,
    fill: "none",
    stroke: "#999",
  }));
  for (const frac of [0, 0.5, 1]) {
    const y = y0 + PLOT_H * (1 - frac);
    body.push(text(x0 - 5, y + 3, fmt(100 * frac), {
      "text-anchor": "end",
      "font-size": 9,
    }));
    const x = x0 + PLOT_W * frac;
    body.push(text(x, y0 + PLOT_H + 12, fmt(tMax * frac), {
      "text-anchor": "middle",
      "font-size": 9,
    }));
  }
  body.push(text(x0 + PLOT_W / 2, y0 + PLOT_H + 26, "time (s)", {
    "text-anchor": "middle",
    "font-size": 10,
  }));
  body.push(text(px + 12, y0 + PLOT_H / 2, "coverage (%)", {
    "text-anchor": "middle",
    "font-size": 10,
    transform: `rotate(-90 ${fmt(px + 12)} ${fmt(y0 + PLOT_H / 2)})`,
  }));
  for (const s of series) {
    const attrs: Record<string, string | number> = {
      class: "curve",
      points: polylinePoints(s.points, x0, y0, tMax),
      fill: "none",
      stroke: colors.get(s.entry.method) ?? "#000",
      "stroke-width": 1.5,
    };
    if (s.entry.status !== "complete") {
      attrs["stroke-dasharray"] = "4 3";
    }
    body.push(tag("polyline", attrs));
  }
  return body;
}

/**
 * Render the batch manifest at manifestPath into a panel chart, one panel
 * per seed and one polyline per method. Writes the SVG to outPath when
 * given and always returns it.
 */
export function plotCurves(manifestPath: string, outPath?: string): string {
  const series = loadSeries(parseManifest(manifestPath));
  const methods = [...new Set(series.map((s) => s.entry.method))].sort();
  const seeds = [...new Set(series.map((s) => s.entry.seed))].sort(
    (a, b) => a - b,
  );
  const colors = new Map(
    methods.map((m, idx) => [m, PALETTE[idx % PALETTE.length]]),
  );
  const tMax = Math.max(
    1e-9,
    ...series.map((s) => (s.points.length > 0 ? s.points[s.points.length - 1].t : 0)),
  );

  const cols = Math.min(COLS, seeds.length);
  const rows = Math.ceil(seeds.length / cols);
  const width = 2 * MARGIN + cols * PANEL_W;
  const height = 2 * MARGIN + LEGEND_H + rows * PANEL_H;

  const body: string[] = [];
  methods.forEach((method, idx) => {
    const x = MARGIN + 8 + idx * 120;
    const y = MARGIN + 12;
    body.push(tag("line", {
      class: "legend",
      x1: x,
      y1: y,
      x2: x + 22,
      y2: y,
      stroke: colors.get(method) ?? "#000",
      "stroke-width": 2,
    }));
    body.push(text(x + 27, y + 4, method, { "font-size": 11 }));
  });
  seeds.forEach((seed, idx) => {
    const px = MARGIN + (idx % cols) * PANEL_W;
    const py = MARGIN + LEGEND_H + Math.floor(idx / cols) * PANEL_H;
    const here = series
      .filter((s) => s.entry.seed === seed)
      .sort((a, b) => (a.entry.method < b.entry.method ? -1 : 1));
    body.push(tag("g", { class: "panel" },
      "\n" + panel(seed, here, colors, px, py, tMax).join("\n") + "\n"));
  });

  const svg = svgDocument(width, height, body);
  if (outPath !== undefined) {
    fs.writeFileSync(outPath, svg);
  }
  return svg;
}
