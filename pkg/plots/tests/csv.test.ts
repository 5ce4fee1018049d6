import { readFileSync } from "node:fs";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { groupSeries, parseCsv, selectSeries } from "../src/csv.js";

const FIXTURE = join(__dirname, "fixtures", "metrics_small.csv");

describe("parseCsv", () => {
  it("parses the harness schema", () => {
    const rows = parseCsv("step,metric,split,value\n10,miou,in_stream,0.5\n");
    expect(rows).toEqual([
      { step: 10, metric: "miou", split: "in_stream", value: 0.5 },
    ]);
  });

  it("rejects a foreign header", () => {
    expect(() => parseCsv("time,loss\n1,2\n")).toThrow(/header/);
  });

  it("rejects malformed rows", () => {
    expect(() => parseCsv("step,metric,split,value\n1,miou,in_stream\n")).toThrow();
    expect(() =>
      parseCsv("step,metric,split,value\nx,miou,in_stream,1\n"),
    ).toThrow(/non-numeric/);
  });

  it("reads real harness output", () => {
    const rows = parseCsv(readFileSync(FIXTURE, "utf8"));
    expect(rows.length).toBeGreaterThan(10);
    const splits = new Set(rows.map((r) => r.split));
    expect(splits.has("in_stream")).toBe(true);
    expect(splits.has("out_of_stream")).toBe(true);
  });
});

describe("groupSeries / selectSeries", () => {
  const rows = parseCsv(readFileSync(FIXTURE, "utf8"));
  const all = groupSeries(rows);

  it("groups by metric and split with increasing steps", () => {
    for (const s of all) {
      for (let i = 1; i < s.steps.length; i++) {
        expect(s.steps[i]).toBeGreaterThan(s.steps[i - 1]);
      }
    }
    const keys = new Set(all.map((s) => `${s.metric}/${s.split}`));
    expect(keys.has("miou/in_stream")).toBe(true);
  });

  it("filters by metric and split", () => {
    const miou = selectSeries(all, "miou", "in_stream");
    expect(miou).toHaveLength(1);
    expect(selectSeries(all, "miou", "both").length).toBe(2);
  });

  it("errors on absent metrics", () => {
    expect(() => selectSeries(all, "psnr")).toThrow(/not present/);
  });
});
