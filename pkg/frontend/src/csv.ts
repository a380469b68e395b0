/**
 * Readers for the harness output files: cost lists (one value per line, no
 * header) and trajectory CSVs (fixed schema with a mandatory header).
 */

import * as fs from "node:fs";
import Papa from "papaparse";

export interface Trajectory {
  steps: number[];
  /** state columns x0..x{n-1}, each a full column */
  states: number[][];
  /** control columns u0..; terminal row is absent (empty cells) */
  controls: number[][];
  beliefMean: number[][];
  belief3Sigma: number[][];
  stageCosts: number[];
  stateNames: string[];
  beliefNames: string[];
}

export function readCosts(path: string): number[] {
  const text = fs.readFileSync(path, "utf8");
  const values: number[] = [];
  for (const line of text.split(/\r?\n/)) {
    const trimmed = line.trim();
    if (trimmed === "") continue;
    const v = Number(trimmed);
    if (!Number.isFinite(v)) {
      throw new Error(`cost file ${path} has a non-numeric line: ${trimmed}`);
    }
    values.push(v);
  }
  if (values.length === 0) {
    throw new Error(`cost file ${path} is empty`);
  }
  return values;
}

function column(rows: string[][], index: number): number[] {
  const out: number[] = [];
  for (const row of rows) {
    const cell = row[index];
    if (cell === undefined || cell === "") continue;
    out.push(Number(cell));
  }
  return out;
}

export function readTrajectory(path: string): Trajectory {
  const text = fs.readFileSync(path, "utf8");
  const parsed = Papa.parse<string[]>(text.trim(), { delimiter: "," });
  if (parsed.errors.length > 0) {
    throw new Error(`failed to parse ${path}: ${parsed.errors[0].message}`);
  }
  const [header, ...rows] = parsed.data;
  const need = ["step", "stage_cost"];
  for (const name of need) {
    if (!header.includes(name)) {
      throw new Error(`trajectory file ${path} is missing column '${name}'`);
    }
  }
  const pick = (prefix: string) =>
    header
      .map((name, i) => ({ name, i }))
      .filter(({ name }) => new RegExp(`^${prefix}\\d+$`).test(name));

  const stateCols = pick("x");
  const controlCols = pick("u");
  const meanCols = pick("belief_mean");
  const sigmaCols = pick("belief_3sigma");
  if (stateCols.length === 0) {
    throw new Error(`trajectory file ${path} has no state columns`);
  }
  if (meanCols.length === 0 || sigmaCols.length === 0) {
    throw new Error(`trajectory file ${path} has no belief columns`);
  }
  return {
    steps: column(rows, header.indexOf("step")),
    states: stateCols.map(({ i }) => column(rows, i)),
    controls: controlCols.map(({ i }) => column(rows, i)),
    beliefMean: meanCols.map(({ i }) => column(rows, i)),
    belief3Sigma: sigmaCols.map(({ i }) => column(rows, i)),
    stageCosts: column(rows, header.indexOf("stage_cost")),
    stateNames: stateCols.map(({ name }) => name),
    beliefNames: meanCols.map(({ name }) => name),
  };
}
