/** Dependency-free SVG line chart for the per-iteration cost series. */

export interface Series {
  label: string;
  values: number[];
  color: string;
}

export interface ChartGeometry {
  width: number;
  height: number;
  pad: number;
}

export const DEFAULT_GEOMETRY: ChartGeometry = { width: 560, height: 180, pad: 24 };

/** Map values to "x,y" pairs inside the padded plot area. */
export function polylinePoints(
  values: number[],
  maxValue: number,
  geometry: ChartGeometry = DEFAULT_GEOMETRY
): string {
  if (values.length === 0) return "";
  const { width, height, pad } = geometry;
  const innerW = width - 2 * pad;
  const innerH = height - 2 * pad;
  const top = maxValue > 0 ? maxValue : 1;
  const step = values.length > 1 ? innerW / (values.length - 1) : 0;
  return values
    .map((v, i) => {
      const x = pad + i * step;
      const y = pad + innerH * (1 - v / top);
      return `${x.toFixed(1)},${y.toFixed(1)}`;
    })
    .join(" ");
}

export function chartSvg(
  series: Series[],
  geometry: ChartGeometry = DEFAULT_GEOMETRY
): string {
  const { width, height, pad } = geometry;
  const maxValue = Math.max(0, ...series.flatMap((s) => s.values));
  const axes =
    `<line class="axis" x1="${pad}" y1="${height - pad}" x2="${width - pad}" y2="${height - pad}"/>` +
    `<line class="axis" x1="${pad}" y1="${pad}" x2="${pad}" y2="${height - pad}"/>` +
    `<text class="axis-label" x="${pad}" y="${pad - 8}">${maxValue.toFixed(1)}</text>`;
  const lines = series
    .filter((s) => s.values.length > 0)
    .map(
      (s) =>
        `<polyline fill="none" stroke="${s.color}" stroke-width="1.5" ` +
        `points="${polylinePoints(s.values, maxValue, geometry)}"><title>${s.label}</title></polyline>`
    )
    .join("");
  const legend = series
    .map(
      (s, i) =>
        `<text class="legend" x="${pad + 8 + i * 130}" y="${height - 6}" fill="${s.color}">${s.label}</text>`
    )
    .join("");
  return `<svg class="chart" viewBox="0 0 ${width} ${height}">${axes}${lines}${legend}</svg>`;
}
