/**
 * Risk statistics over a list of episode costs, recomputed independently of
 * the Python harness so figures can cross-check the summary JSON.
 */

export interface RiskStats {
  mean: number;
  var: number;
  cvar: number;
}

/** 1-based order-statistic index of the gamma-quantile among m samples. */
export function varOrderIndex(gamma: number, m: number): number {
  if (!(gamma > 0 && gamma < 1)) {
    throw new Error(`gamma must lie in (0, 1), got ${gamma}`);
  }
  if (m < 1) {
    throw new Error("need at least one sample");
  }
  // the small subtraction keeps an exactly-integer gamma*m from being
  // pushed to the next ceiling by float noise
  const k = Math.ceil(gamma * m - 1e-9);
  return Math.min(Math.max(k, 1), m);
}

export function riskStats(costs: number[], gamma: number): RiskStats {
  if (costs.length === 0) {
    throw new Error("no samples");
  }
  const m = costs.length;
  const sorted = [...costs].sort((a, b) => a - b);
  const mean = costs.reduce((s, v) => s + v, 0) / m;
  const varHat = sorted[varOrderIndex(gamma, m) - 1];
  let excess = 0;
  for (const v of costs) {
    excess += Math.max(v - varHat, 0);
  }
  const cvar = varHat + excess / (m * (1 - gamma));
  return { mean, var: varHat, cvar };
}

/** Format to 6 significant digits, the precision used for figure annotations. */
export function sig6(value: number): string {
  return Number(value.toPrecision(6)).toString();
}
