/**
 * Stage snapshot: the coverage count raster as a heat layer, wind and
 * current vectors per grid cell, and the trajectory committed up to the
 * requested stage, composed into one deterministic SVG.
 */

import * as fs from "node:fs";

import {
  FieldCell,
  Pgm,
  TraceRow,
  parseFieldsCsv,
  parsePgm,
  parseTraceCsv,
} from "./formats";
import { fmt, svgDocument, tag, text } from "./svg";

export const PX_PER_CELL = 40;
const WIND_SCALE = 3.2;
const CUR_SCALE = WIND_SCALE / 3;

function heatColor(count: number, maxval: number): string {
  if (count <= 0) {
    return "#f5f5f5";
  }
  const t = Math.min(1, count / Math.max(1, maxval));
  const tone = Math.round(210 - 150 * t);
  const hex = tone.toString(16).padStart(2, "0");
  return `#${hex}${hex}e6`;
}

function heatLayer(pgm: Pgm, rows: number, cols: number): string[] {
  const sx = (cols * PX_PER_CELL) / pgm.width;
  const sy = (rows * PX_PER_CELL) / pgm.height;
  const body: string[] = [];
  for (let py = 0; py < pgm.height; py++) {
    let runStart = 0;
    const row = pgm.data.slice(py * pgm.width, (py + 1) * pgm.width);
    for (let px = 1; px <= pgm.width; px++) {
      if (px === pgm.width || row[px] !== row[runStart]) {
        body.push(tag("rect", {
          class: "heat",
          x: runStart * sx,
          y: py * sy,
          width: (px - runStart) * sx,
          height: sy,
          fill: heatColor(row[runStart], pgm.maxval),
        }));
        runStart = px;
      }
    }
  }
  return body;
}

function gridLines(rows: number, cols: number): string[] {
  const body: string[] = [];
  for (let i = 0; i <= rows; i++) {
    body.push(tag("line", {
      class: "grid",
      x1: 0,
      y1: i * PX_PER_CELL,
      x2: cols * PX_PER_CELL,
      y2: i * PX_PER_CELL,
      stroke: "#bbb",
      "stroke-width": 0.5,
    }));
  }
  for (let j = 0; j <= cols; j++) {
    body.push(tag("line", {
      class: "grid",
      x1: j * PX_PER_CELL,
      y1: 0,
      x2: j * PX_PER_CELL,
      y2: rows * PX_PER_CELL,
      stroke: "#bbb",
      "stroke-width": 0.5,
    }));
  }
  return body;
}

function arrow(
  cls: string,
  cx: number,
  cy: number,
  dirDeg: number,
  length: number,
  stroke: string,
): string {
  const rad = (dirDeg * Math.PI) / 180;
  return tag("line", {
    class: cls,
    x1: cx,
    y1: cy,
    x2: cx + length * Math.cos(rad),
    y2: cy + length * Math.sin(rad),
    stroke,
    "stroke-width": cls === "wind" ? 1.6 : 1.1,
  });
}

function vectorLayer(cells: FieldCell[]): string[] {
  const body: string[] = [];
  for (const cell of cells) {
    const cx = (cell.j + 0.5) * PX_PER_CELL;
    const cy = (cell.i + 0.5) * PX_PER_CELL;
    const flowDir = (cell.windDir + 180) % 360;
    body.push(arrow("wind", cx, cy, flowDir, cell.windSpeed * WIND_SCALE, "#1a6d2f"));
    body.push(arrow("cur", cx, cy, cell.curDir, cell.curSpeed * CUR_SCALE, "#8a2fa8"));
  }
  return body;
}

function trajectory(rows: TraceRow[]): string[] {
  if (rows.length === 0) {
    return [];
  }
  const pts: string[] = [];
  const center = (i: number, j: number): string =>
    `${fmt((j + 0.5) * PX_PER_CELL)},${fmt((i + 0.5) * PX_PER_CELL)}`;
  pts.push(center(rows[0].fromI, rows[0].fromJ));
  for (const row of rows) {
    pts.push(center(row.toI, row.toJ));
  }
  return [tag("polyline", {
    class: "track",
    points: pts.join(" "),
    fill: "none",
    stroke: "#c23b22",
    "stroke-width": 2,
  })];
}

/**
 * Compose the snapshot for one stage from the emitted record files: the
 * count raster (cov_stage<k>.pgm), the per-stage field dump, and the
 * decision trace. Writes the SVG to outPath when given and returns it.
 */
export function plotStageSnapshot(
  pgmPath: string,
  fieldsPath: string,
  tracePath: string,
  stage: number,
  outPath?: string,
): string {
  const pgm = parsePgm(fs.readFileSync(pgmPath, "utf-8"));
  const fields = parseFieldsCsv(fs.readFileSync(fieldsPath, "utf-8"));
  const trace = parseTraceCsv(fs.readFileSync(tracePath, "utf-8"));

  const cells = fields.filter((cell) => cell.stage === stage);
  if (cells.length === 0) {
    throw new Error(`no field rows for stage ${stage}`);
  }
  const rows = Math.max(...cells.map((cell) => cell.i)) + 1;
  const cols = Math.max(...cells.map((cell) => cell.j)) + 1;
  if (pgm.height % rows !== 0 || pgm.width % cols !== 0) {
    throw new Error(
      `raster ${pgm.width}x${pgm.height} does not tile the ${rows}x${cols} grid`,
    );
  }

  const width = cols * PX_PER_CELL;
  const height = rows * PX_PER_CELL;
  const body: string[] = [
    ...heatLayer(pgm, rows, cols),
    ...gridLines(rows, cols),
    ...vectorLayer(cells),
    ...trajectory(trace.filter((row) => row.stage <= stage)),
    text(4, height - 6, `stage ${stage}`, { "font-size": 12, fill: "#333" }),
  ];

  const svg = svgDocument(width, height, body);
  if (outPath !== undefined) {
    fs.writeFileSync(outPath, svg);
  }
  return svg;
}
