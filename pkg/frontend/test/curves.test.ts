import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { describe, expect, it } from "vitest";

import { plotCurves } from "../src/curves";

const METHODS = ["base", "mcts_k0", "mcts_k1"];
const SEEDS = [40, 41, 42, 43, 44, 45, 46, 47];

function writeBatch(dir: string): string {
  const lines = ["method,seed,status,curve"];
  for (const method of METHODS) {
    for (const seed of SEEDS) {
      const name = `curve_${method}_${seed}.csv`;
      const step = 100 + seed + 10 * METHODS.indexOf(method);
      const rows = ["t_s,coverage_pct"];
      for (let k = 0; k <= 10; k++) {
        rows.push(`${k * step},${10 * k}`);
      }
      fs.writeFileSync(path.join(dir, name), rows.join("\n") + "\n");
      lines.push(`${method},${seed},complete,${name}`);
    }
  }
  const manifest = path.join(dir, "manifest.csv");
  fs.writeFileSync(manifest, lines.join("\n") + "\n");
  return manifest;
}

function count(haystack: string, needle: string): number {
  return haystack.split(needle).length - 1;
}

function tmpdir(): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), "plots-curves-"));
}

describe("batch curve chart", () => {
  it("draws one panel per seed and one curve per method", () => {
    const manifest = writeBatch(tmpdir());
    const svg = plotCurves(manifest);
    expect(count(svg, 'class="panel"')).toBe(SEEDS.length);
    expect(count(svg, 'class="curve"')).toBe(SEEDS.length * METHODS.length);
    expect(count(svg, 'class="legend"')).toBe(METHODS.length);
    for (const method of METHODS) {
      expect(svg).toContain(`>${method}</text>`);
    }
    expect(count(svg, "time (s)")).toBe(SEEDS.length);
    expect(count(svg, "coverage (%)")).toBe(SEEDS.length);
  });

  it("writes the file it returns, byte for byte, twice", () => {
    const dir = tmpdir();
    const manifest = writeBatch(dir);
    const out1 = path.join(dir, "a.svg");
    const out2 = path.join(dir, "b.svg");
    const first = plotCurves(manifest, out1);
    const second = plotCurves(manifest, out2);
    expect(second).toBe(first);
    expect(fs.readFileSync(out1, "utf-8")).toBe(first);
    expect(fs.readFileSync(out2, "utf-8")).toBe(first);
    expect(first.startsWith("<svg ")).toBe(true);
    expect(first.endsWith("</svg>\n")).toBe(true);
  });

  it("rejects an empty manifest", () => {
    const manifest = path.join(tmpdir(), "manifest.csv");
    fs.writeFileSync(manifest, "method,seed,status,curve\n");
    expect(() => plotCurves(manifest)).toThrow(/lists no curves/);
  });

  it("rejects a curve whose coverage drops", () => {
    const dir = tmpdir();
    fs.writeFileSync(
      path.join(dir, "manifest.csv"),
      "method,seed,status,curve\nbase,40,complete,bad.csv\n",
    );
    fs.writeFileSync(
      path.join(dir, "bad.csv"),
      "t_s,coverage_pct\n0,10\n5,9\n",
    );
    expect(() => plotCurves(path.join(dir, "manifest.csv"))).toThrow(
      /base seed 40: coverage decreases/,
    );
  });

  it("dashes curves whose status is not complete", () => {
    const dir = tmpdir();
    fs.writeFileSync(
      path.join(dir, "manifest.csv"),
      "method,seed,status,curve\nbase,40,aborted,c.csv\n",
    );
    fs.writeFileSync(path.join(dir, "c.csv"), "t_s,coverage_pct\n0,0\n5,9\n");
    const svg = plotCurves(path.join(dir, "manifest.csv"));
    expect(count(svg, "stroke-dasharray")).toBe(1);
  });
});
