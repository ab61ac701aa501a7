/** Figure composition: which charts get drawn from which CSV columns. */
import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import type { Curve, Summary } from "./csv.js";
import { lineChart, barChart, type AxisTick } from "./svg.js";

/** Fixed proposal budgets for the recall-vs-IoU figures. */
export const FIXED_BUDGETS = [100, 1000, 10000];

/** Recall at the largest tabulated budget not above `budget` (0 if none). */
export function recallAtBudget(curve: Curve, budget: number): number {
  let best = 0;
  for (const point of curve.points) {
    if (point.n <= budget) best = point.recall;
    else break;
  }
  return best;
}

function logTicks(maxN: number): AxisTick[] {
  const ticks: AxisTick[] = [];
  for (let p = 0; Math.pow(10, p) <= maxN * 1.0001; p += 1) {
    ticks.push({ value: p, label: Math.pow(10, p).toLocaleString("en-US") });
  }
  return ticks.length > 0 ? ticks : [{ value: 0, label: "1" }];
}

function curveName(iou: number): string {
  return `recall_vs_n_iou_${String(iou)}.svg`;
}

function budgetName(budget: number): string {
  return `recall_vs_iou_n_${budget}.svg`;
}

/**
 * Render every figure into `outDir` (created if missing) and return the
 * written paths: one budget-sweep per IoU threshold (log-10 x axis), one
 * IoU-sweep per fixed budget, and — when a summary is supplied — a grouped
 * bar chart of its recall columns. Reruns overwrite the same filenames.
 */
export function renderAll(curves: Curve[], summary: Summary | null, outDir: string): string[] {
  if (curves.length === 0) {
    throw new Error("nothing to render: no curves");
  }
  mkdirSync(outDir, { recursive: true });
  const written: string[] = [];
  const write = (name: string, content: string) => {
    const path = join(outDir, name);
    writeFileSync(path, content, { encoding: "utf-8" });
    written.push(path);
  };

  const maxN = Math.max(...curves.flatMap((c) => c.points.map((p) => p.n)));
  const ticks = logTicks(maxN);
  for (const curve of curves) {
    write(
      curveName(curve.iou),
      lineChart({
        title: `Detection rate vs number of proposals (IoU ${curve.iou})`,
        xLabel: "proposals considered (log scale)",
        yLabel: "recall",
        xTicks: ticks,
        series: [
          {
            label: `IoU ${curve.iou}`,
            xs: curve.points.map((p) => Math.log10(p.n)),
            ys: curve.points.map((p) => p.recall),
          },
        ],
      }),
    );
  }

  const thresholds = curves.map((c) => c.iou);
  for (const budget of FIXED_BUDGETS) {
    write(
      budgetName(budget),
      lineChart({
        title: `Detection rate vs IoU threshold (top ${budget.toLocaleString("en-US")} proposals)`,
        xLabel: "IoU threshold",
        yLabel: "recall",
        xTicks: thresholds.map((t) => ({ value: t, label: String(t) })),
        series: [
          {
            label: `top ${budget.toLocaleString("en-US")}`,
            xs: thresholds,
            ys: curves.map((c) => recallAtBudget(c, budget)),
          },
        ],
      }),
    );
  }

  if (summary !== null) {
    write(
      "summary_recall_bars.svg",
      barChart({
        title: "Final recall per IoU threshold",
        xLabel: "IoU threshold",
        yLabel: "recall",
        seriesLabels: summary.rows.map((r) => r.aggregation),
        groups: summary.thresholds.map((t, i) => ({
          label: String(t),
          values: summary.rows.map((r) => r.recalls[i] ?? 0),
        })),
      }),
    );
  }
  return written;
}
