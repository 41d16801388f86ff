/**
 * Parsers for the record files the mission harness emits: coverage curves,
 * the batch plot manifest, plain PGM count rasters, field dumps, and
 * decision traces. Parsing is strict: a wrong header or a truncated body is
 * an error, never a silently empty result.
 */

import * as fs from "node:fs";
import * as path from "node:path";

export interface CurvePoint {
  readonly t: number;
  readonly coverage: number;
}

export interface ManifestEntry {
  readonly method: string;
  readonly seed: number;
  readonly status: string;
  readonly curvePath: string;
}

export interface Pgm {
  readonly width: number;
  readonly height: number;
  readonly maxval: number;
  readonly data: number[];
}

export interface FieldCell {
  readonly stage: number;
  readonly i: number;
  readonly j: number;
  readonly windSpeed: number;
  readonly windDir: number;
  readonly curSpeed: number;
  readonly curDir: number;
}

export interface TraceRow {
  readonly stage: number;
  readonly decisionIdx: number;
  readonly actionId: number;
  readonly fromI: number;
  readonly fromJ: number;
  readonly toI: number;
  readonly toJ: number;
  readonly timeS: number;
  readonly cumCoverage: number;
}

const CURVE_HEADER = "t_s,coverage_pct";
const MANIFEST_HEADER = "method,seed,status,curve";
const FIELDS_HEADER = "stage,i,j,wind_speed,wind_dir,cur_speed,cur_dir";
const TRACE_HEADER =
  "stage,decision_idx,action_id,from_i,from_j,to_i,to_j,time_s,cum_coverage";

function csvLines(text: string, header: string, what: string): string[][] {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0 || lines[0] !== header) {
    throw new Error(`${what}: expected header "${header}"`);
  }
  return lines.slice(1).map((line) => line.split(","));
}

function num(field: string, what: string): number {
  const value = Number(field);
  if (!Number.isFinite(value)) {
    throw new Error(`${what}: bad numeric field "${field}"`);
  }
  return value;
}

export function parseCurveCsv(text: string, what = "curve"): CurvePoint[] {
  return csvLines(text, CURVE_HEADER, what).map((fields) => {
    if (fields.length !== 2) {
      throw new Error(`${what}: expected 2 columns, got ${fields.length}`);
    }
    return { t: num(fields[0], what), coverage: num(fields[1], what) };
  });
}

/** Both columns of a coverage curve must be non-decreasing. */
export function assertMonotone(points: CurvePoint[], what = "curve"): void {
  for (let k = 1; k < points.length; k++) {
    if (points[k].t < points[k - 1].t) {
      throw new Error(`${what}: time decreases at row ${k}`);
    }
    if (points[k].coverage < points[k - 1].coverage) {
      throw new Error(`${what}: coverage decreases at row ${k}`);
    }
  }
}

/** Curve paths in the manifest are relative to the manifest's directory. */
export function parseManifest(manifestPath: string): ManifestEntry[] {
  const text = fs.readFileSync(manifestPath, "utf-8");
  const dir = path.dirname(manifestPath);
  const entries = csvLines(text, MANIFEST_HEADER, "manifest").map((fields) => {
    if (fields.length !== 4) {
      throw new Error(`manifest: expected 4 columns, got ${fields.length}`);
    }
    return {
      method: fields[0],
      seed: num(fields[1], "manifest"),
      status: fields[2],
      curvePath: path.join(dir, fields[3]),
    };
  });
  if (entries.length === 0) {
    throw new Error("manifest lists no curves");
  }
  return entries;
}

export function parsePgm(text: string): Pgm {
  const tokens: string[] = [];
  for (let line of text.split(/\r?\n/)) {
    const hash = line.indexOf("#");
    if (hash !== -1) {
      line = line.slice(0, hash);
    }
    for (const tok of line.split(/\s+/)) {
      if (tok.length > 0) {
        tokens.push(tok);
      }
    }
  }
  if (tokens.length === 0 || tokens[0] !== "P2") {
    throw new Error("not a plain PGM file");
  }
  const width = num(tokens[1], "pgm");
  const height = num(tokens[2], "pgm");
  const maxval = num(tokens[3], "pgm");
  const data = tokens.slice(4, 4 + width * height).map((t) => num(t, "pgm"));
  if (data.length !== width * height) {
    throw new Error("truncated PGM data");
  }
  return { width, height, maxval, data };
}

export function parseFieldsCsv(text: string): FieldCell[] {
  return csvLines(text, FIELDS_HEADER, "fields").map((fields) => {
    if (fields.length !== 7) {
      throw new Error(`fields: expected 7 columns, got ${fields.length}`);
    }
    return {
      stage: num(fields[0], "fields"),
      i: num(fields[1], "fields"),
      j: num(fields[2], "fields"),
      windSpeed: num(fields[3], "fields"),
      windDir: num(fields[4], "fields"),
      curSpeed: num(fields[5], "fields"),
      curDir: num(fields[6], "fields"),
    };
  });
}

export function parseTraceCsv(text: string): TraceRow[] {
  return csvLines(text, TRACE_HEADER, "trace").map((fields) => {
    if (fields.length !== 9) {
      throw new Error(`trace: expected 9 columns, got ${fields.length}`);
    }
    return {
      stage: num(fields[0], "trace"),
      decisionIdx: num(fields[1], "trace"),
      actionId: num(fields[2], "trace"),
      fromI: num(fields[3], "trace"),
      fromJ: num(fields[4], "trace"),
      toI: num(fields[5], "trace"),
      toJ: num(fields[6], "trace"),
      timeS: num(fields[7], "trace"),
      cumCoverage: num(fields[8], "trace"),
    };
  });
}
