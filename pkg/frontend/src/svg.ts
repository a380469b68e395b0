/** Small SVG builder: enough for axes, lines, bands, bars and labels. */

export interface Margins {
  top: number;
  right: number;
  bottom: number;
  left: number;
}

export const DEFAULT_MARGINS: Margins = { top: 40, right: 20, bottom: 40, left: 60 };

export class LinearScale {
  constructor(
    readonly domainMin: number,
    readonly domainMax: number,
    readonly rangeMin: number,
    readonly rangeMax: number,
  ) {}

  apply(value: number): number {
    const span = this.domainMax - this.domainMin;
    const t = span === 0 ? 0.5 : (value - this.domainMin) / span;
    return this.rangeMin + t * (this.rangeMax - this.rangeMin);
  }

  ticks(count = 5): number[] {
    const span = this.domainMax - this.domainMin;
    if (span === 0) return [this.domainMin];
    const step = Math.pow(10, Math.floor(Math.log10(span / count)));
    const err = (span / count) / step;
    const unit = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
    const inc = unit * step;
    const out: number[] = [];
    for (let v = Math.ceil(this.domainMin / inc) * inc; v <= this.domainMax + 1e-12; v += inc) {
      out.push(Number(v.toPrecision(12)));
    }
    return out;
  }
}

const escape = (s: string) =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");

export class Svg {
  private parts: string[] = [];

  constructor(
    readonly width: number,
    readonly height: number,
  ) {}

  rect(x: number, y: number, w: number, h: number, fill: string, opacity = 1): void {
    this.parts.push(
      `<rect x="${x.toFixed(2)}" y="${y.toFixed(2)}" width="${w.toFixed(2)}" height="${h.toFixed(2)}" fill="${fill}" fill-opacity="${opacity}"/>`,
    );
  }

  line(x1: number, y1: number, x2: number, y2: number, stroke: string, width = 1, dash = ""): void {
    const dashAttr = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(
      `<line x1="${x1.toFixed(2)}" y1="${y1.toFixed(2)}" x2="${x2.toFixed(2)}" y2="${y2.toFixed(2)}" stroke="${stroke}" stroke-width="${width}"${dashAttr}/>`,
    );
  }

  polyline(points: Array<[number, number]>, stroke: string, width = 1.5, dash = ""): void {
    const attr = points.map(([x, y]) => `${x.toFixed(2)},${y.toFixed(2)}`).join(" ");
    const dashAttr = dash ? ` stroke-dasharray="${dash}"` : "";
    this.parts.push(
      `<polyline points="${attr}" fill="none" stroke="${stroke}" stroke-width="${width}"${dashAttr}/>`,
    );
  }

  polygon(points: Array<[number, number]>, fill: string, opacity = 0.25): void {
    const attr = points.map(([x, y]) => `${x.toFixed(2)},${y.toFixed(2)}`).join(" ");
    this.parts.push(`<polygon points="${attr}" fill="${fill}" fill-opacity="${opacity}"/>`);
  }

  text(x: number, y: number, content: string, size = 12, anchor = "start", fill = "#000"): void {
    this.parts.push(
      `<text x="${x.toFixed(2)}" y="${y.toFixed(2)}" font-size="${size}" text-anchor="${anchor}" fill="${fill}" font-family="sans-serif">${escape(content)}</text>`,
    );
  }

  render(): string {
    return [
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">`,
      `<rect width="${this.width}" height="${this.height}" fill="#fff"/>`,
      ...this.parts,
      "</svg>",
    ].join("\n");
  }
}

export function drawAxes(
  svg: Svg,
  xScale: LinearScale,
  yScale: LinearScale,
  margins: Margins,
  xLabel: string,
  yLabel: string,
): void {
  const bottom = svg.height - margins.bottom;
  svg.line(margins.left, bottom, svg.width - margins.right, bottom, "#000");
  svg.line(margins.left, margins.top, margins.left, bottom, "#000");
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
  svg.text((margins.left + svg.width - margins.right) / 2, svg.height - 8, xLabel, 12, "middle");
  svg.text(14, (margins.top + bottom) / 2, yLabel, 12, "middle");
}
