/** Command line: textprop-plots --curves curves.csv [--summary summary.csv] --out dir */
import { readFileSync } from "node:fs";
import { parseArgs } from "node:util";
import { pathToFileURL } from "node:url";

import { CsvError, parseCurvesCsv, parseSummaryCsv, type Summary } from "./csv.js";
import { renderAll } from "./render.js";

export const EXIT_OK = 0;
export const EXIT_USAGE = 1;
export const EXIT_IO = 2;
export const EXIT_DATA = 3;

const USAGE =
  "usage: textprop-plots --curves curves.csv [--summary summary.csv] --out outdir";

function readText(path: string): string {
  return readFileSync(path, { encoding: "utf-8" });
}

export function main(argv: string[]): number {
  let values;
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        curves: { type: "string" },
        summary: { type: "string" },
        out: { type: "string" },
        help: { type: "boolean", short: "h" },
      },
      allowPositionals: false,
    }));
  } catch (err) {
    console.error(`textprop-plots: error: ${(err as Error).message}`);
    console.error(USAGE);
    return EXIT_USAGE;
  }
  if (values.help) {
    console.log(USAGE);
    return EXIT_OK;
  }
  if (values.curves === undefined || values.out === undefined) {
    console.error("textprop-plots: error: --curves and --out are required");
    console.error(USAGE);
    return EXIT_USAGE;
  }

  let curvesText: string;
  let summaryText: string | null = null;
  try {
    curvesText = readText(values.curves);
    if (values.summary !== undefined) {
      summaryText = readText(values.summary);
    }
  } catch (err) {
    console.error(`textprop-plots: io error: ${(err as Error).message}`);
    return EXIT_IO;
  }

  let curves;
  try {
    curves = parseCurvesCsv(curvesText);
  } catch (err) {
    return reportDataError(values.curves, err);
  }
  let summary: Summary | null = null;
  if (summaryText !== null) {
    try {
      summary = parseSummaryCsv(summaryText);
    } catch (err) {
      return reportDataError(values.summary!, err);
    }
  }

  try {
    const written = renderAll(curves, summary, values.out);
    console.log(`wrote ${written.length} figures to ${values.out}`);
    return EXIT_OK;
  } catch (err) {
    console.error(`textprop-plots: io error: ${(err as Error).message}`);
    return EXIT_IO;
  }
}

function reportDataError(path: string, err: unknown): number {
  if (err instanceof CsvError) {
    console.error(`textprop-plots: data error: ${path}: ${err.message}`);
  } else {
    console.error(`textprop-plots: data error: ${path}: ${(err as Error).message}`);
  }
  return EXIT_DATA;
}

if (process.argv[1] !== undefined && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(process.argv.slice(2)));
}
