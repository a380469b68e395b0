/**
 * Trajectory figure: one panel per belief dimension with the true state as a
 * solid line (where the dimension is a state), the belief mean dotted, and a
 * translucent plus/minus 3 sigma band.
 */

import { Trajectory } from "./csv.js";
import { DEFAULT_MARGINS, LinearScale, Svg, drawAxes } from "./svg.js";

const TRUTH_COLOR = "#1f77b4";
const BELIEF_COLOR = "#d62728";

export function plotTrajectoryBand(
  traj: Trajectory,
  width = 640,
  panelHeight = 220,
): string {
  const panels = traj.beliefMean.length;
  const height = panels * panelHeight;
  const svg = new Svg(width, height);
  const margins = DEFAULT_MARGINS;
  const steps = traj.steps;

  for (let p = 0; p < panels; p++) {
    const top = p * panelHeight;
    const mean = traj.beliefMean[p];
    const band = traj.belief3Sigma[p];
    const truth = p < traj.states.length ? traj.states[p] : null;
    const lows = mean.map((v, i) => v - band[i]);
    const highs = mean.map((v, i) => v + band[i]);
    const values = [...lows, ...highs, ...(truth ?? [])];
    let lo = Math.min(...values);
    let hi = Math.max(...values);
    if (lo === hi) {
      lo -= 0.5;
      hi += 0.5;
    }

    const xScale = new LinearScale(steps[0], steps[steps.length - 1], margins.left, width - margins.right);
    const yScale = new LinearScale(lo, hi, top + panelHeight - margins.bottom, top + margins.top);
    drawPanelAxes(svg, xScale, yScale, margins, top, panelHeight, p === panels - 1 ? "step" : "", traj.beliefNames[p]);

    const bandPoints: Array<[number, number]> = [
      ...steps.map((s, i): [number, number] => [xScale.apply(s), yScale.apply(highs[i])]),
      ...steps
        .slice()
        .reverse()
        .map((s, i): [number, number] => [xScale.apply(s), yScale.apply(lows[steps.length - 1 - i])]),
    ];
    svg.polygon(bandPoints, BELIEF_COLOR, 0.18);
    if (truth) {
      svg.polyline(
        steps.map((s, i): [number, number] => [xScale.apply(s), yScale.apply(truth[i])]),
        TRUTH_COLOR,
        1.8,
      );
    }
    svg.polyline(
      steps.map((s, i): [number, number] => [xScale.apply(s), yScale.apply(mean[i])]),
      BELIEF_COLOR,
      1.5,
      "4,3",
    );
  }
  return svg.render();
}

function drawPanelAxes(
  svg: Svg,
  xScale: LinearScale,
  yScale: LinearScale,
  margins: typeof DEFAULT_MARGINS,
  top: number,
  panelHeight: number,
  xLabel: string,
  yLabel: string,
): void {
  const bottom = top + panelHeight - margins.bottom;
  svg.line(margins.left, bottom, svg.width - margins.right, bottom, "#000");
  svg.line(margins.left, top + margins.top, margins.left, bottom, "#000");
  for (const t of xScale.ticks()) {
    const x = xScale.apply(t);
    svg.line(x, bottom, x, bottom + 4, "#000");
    svg.text(x, bottom + 16, String(t), 10, "middle");
  }
  for (const t of yScale.ticks()) {
    const y = yScale.apply(t);
    svg.line(margins.left - 4, y, margins.left, y, "#000");
    svg.text(margins.left - 6, y + 3, String(t), 10, "end");
  }
  if (xLabel) {
    svg.text((margins.left + svg.width - margins.right) / 2, top + panelHeight - 8, xLabel, 12, "middle");
  }
  svg.text(margins.left + 6, top + margins.top + 12, yLabel, 11, "start");
}
