/** CLI: regenerate figures from harness CSV outputs.
 *
 *   render --kind curves    --csv run/metrics.csv [--metric miou]
 *          [--split in_stream|out_of_stream|both] [--alpha 1e-3] --out fig.png
 *   render --kind histogram --csv run/diagnostics.csv --metric grad_cosine
 *          [--bins 40] --out fig.png
 *   render --kind sweep     --csv a.csv b.csv ... --metric miou
 *          [--split ...] [--alpha 1e-3] --out fig.png
 */
import { writeFileSync } from "node:fs";
import { basename } from "node:path";
import process from "node:process";

import { groupSeries, readCsv, selectSeries, Series } from "./csv.js";
import { renderCurves, renderHistogram, renderSweep } from "./figures.js";
import { encodePng } from "./png.js";

interface Args {
  kind: string;
  csv: string[];
  out: string;
  metric?: string;
  split?: string;
  alpha: number;
  bins: number;
  title?: string;
}

export function parseArgs(argv: string[]): Args {
  if (argv[0] !== "render") {
    throw new Error("usage: render --kind <curves|histogram|sweep> --csv <path>... --out <fig.png>");
  }
  const args: Args = { kind: "curves", csv: [], out: "", alpha: 1e-3, bins: 40 };
  let i = 1;
  const next = (flag: string): string => {
    if (i >= argv.length) {
      throw new Error(`missing value for ${flag}`);
    }
    return argv[i++];
  };
  while (i < argv.length) {
    const flag = argv[i++];
    switch (flag) {
      case "--kind":
        args.kind = next(flag);
        break;
      case "--csv":
        args.csv.push(next(flag));
        while (i < argv.length && !argv[i].startsWith("--")) {
          args.csv.push(argv[i++]);
        }
        break;
      case "--out":
        args.out = next(flag);
        break;
      case "--metric":
        args.metric = next(flag);
        break;
      case "--split":
        args.split = next(flag);
        break;
      case "--alpha":
        args.alpha = Number(next(flag));
        break;
      case "--bins":
        args.bins = Number(next(flag));
        break;
      case "--title":
        args.title = next(flag);
        break;
      default:
        throw new Error(`unknown flag ${flag}`);
    }
  }
  if (!["curves", "histogram", "sweep"].includes(args.kind)) {
    throw new Error(`unknown figure kind '${args.kind}'`);
  }
  if (args.csv.length === 0) {
    throw new Error("at least one --csv input is required");
  }
  if (!args.out) {
    throw new Error("--out is required");
  }
  return args;
}

export function run(argv: string[]): void {
  const args = parseArgs(argv);
  const opts = {
    alpha: args.alpha,
    bins: args.bins,
    title: args.title,
  };
  let canvas;
  if (args.kind === "sweep") {
    if (args.metric === undefined) {
      throw new Error("sweep requires --metric");
    }
    const runs: { label: string; series: Series }[] = [];
    for (const path of args.csv) {
      const all = groupSeries(readCsv(path));
      const matches = selectSeries(all, args.metric, args.split ?? "in_stream");
      for (const series of matches) {
        runs.push({ label: basename(path, ".csv"), series });
      }
    }
    canvas = renderSweep(runs, opts);
  } else {
    const all = args.csv.flatMap((path) =>
      groupSeries(readCsv(path), args.csv.length > 1 ? basename(path, ".csv") : ""),
    );
    const selected = selectSeries(all, args.metric, args.split);
    canvas =
      args.kind === "curves"
        ? renderCurves(selected, opts)
        : renderHistogram(selected, opts);
  }
  writeFileSync(args.out, encodePng(canvas.width, canvas.height, canvas.pixels));
  console.log(`wrote ${args.out}`);
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${process.argv[1]}`).href;

if (invokedDirectly) {
  try {
    run(process.argv.slice(2));
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    process.exit(1);
  }
}
