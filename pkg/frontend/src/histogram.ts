/**
 * Cost histogram with Mean/VaR/CVaR marker lines. Accepts one or more cost
 * series; multiple series are overlaid translucently. The annotated
 * statistics are recomputed from the raw costs and rendered to six
 * significant digits so they can be checked against the harness summary.
 */

import { riskStats, sig6, RiskStats } from "./stats.js";
import { DEFAULT_MARGINS, LinearScale, Svg, drawAxes } from "./svg.js";

export interface CostSeries {
  label: string;
  costs: number[];
}

export interface HistogramFigure {
  svg: string;
  stats: RiskStats[];
}

const SERIES_COLORS = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd"];
const MARKER_STYLES: Array<{ key: keyof RiskStats; label: string; dash: string }> = [
  { key: "mean", label: "Mean", dash: "" },
  { key: "var", label: "VaR", dash: "6,3" },
  { key: "cvar", label: "CVaR", dash: "2,3" },
];

export function binCounts(
  values: number[],
  min: number,
  max: number,
  bins: number,
): number[] {
  const counts = new Array(bins).fill(0);
  const span = max - min;
  for (const v of values) {
    const idx = span === 0 ? 0 : Math.min(Math.floor(((v - min) / span) * bins), bins - 1);
    counts[idx] += 1;
  }
  return counts;
}

export function plotCostHistogram(
  series: CostSeries[],
  gamma: number,
  width = 640,
  height = 420,
  bins = 30,
): HistogramFigure {
  if (series.length === 0) {
    throw new Error("need at least one cost series");
  }
  const allStats = series.map((s) => riskStats(s.costs, gamma));
  const all = series.flatMap((s) => s.costs);
  let min = Math.min(...all);
  let max = Math.max(...all);
  if (min === max) {
    // degenerate single-value histogram still needs a finite axis
    min -= 0.5;
    max += 0.5;
  }
  const margins = DEFAULT_MARGINS;
  const counts = series.map((s) => binCounts(s.costs, min, max, bins));
  const peak = Math.max(...counts.flat());

  const xScale = new LinearScale(min, max, margins.left, width - margins.right);
  const yScale = new LinearScale(0, peak, height - margins.bottom, margins.top);
  const svg = new Svg(width, height);
  drawAxes(svg, xScale, yScale, margins, "total cost", "episodes");

  const binWidth = (xScale.apply(max) - xScale.apply(min)) / bins;
  series.forEach((s, si) => {
    const color = SERIES_COLORS[si % SERIES_COLORS.length];
    counts[si].forEach((count, bi) => {
      if (count === 0) return;
      const x = xScale.apply(min + ((max - min) * bi) / bins);
      const y = yScale.apply(count);
      svg.rect(x, y, binWidth, yScale.apply(0) - y, color, series.length > 1 ? 0.45 : 0.8);
    });
    svg.text(width - margins.right, margins.top - 24 + 12 * si, s.label, 11, "end", color);
  });

  allStats.forEach((stats, si) => {
    const color = SERIES_COLORS[si % SERIES_COLORS.length];
    MARKER_STYLES.forEach(({ key, label, dash }, mi) => {
      const x = xScale.apply(stats[key]);
      svg.line(x, margins.top, x, height - margins.bottom, color, 1.2, dash);
      svg.text(x + 3, margins.top + 12 + 12 * mi, `${label}=${sig6(stats[key])}`, 10, "start", color);
    });
  });

  return { svg: svg.render(), stats: allStats };
}
