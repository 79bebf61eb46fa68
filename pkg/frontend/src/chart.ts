import type { Mart } from "./types.js";

// Year-like dimensions the mart sources can carry.
const YEAR_DIMS = ["year", "access-year"];

export interface ChartSeries {
  label: string;
  /** [year, value] sorted by year; years the series lacks are absent. */
  points: [number, number][];
}

export interface ChartData {
  yearDim: string;
  years: number[];
  series: ChartSeries[];
}

/**
 * Shape mart cells into one series per non-year key across the year
 * dimension.  Pure regrouping of server numbers: values are never summed or
 * derived here, so a mart with one cell per (label, year), which is what the
 * group-by guarantees, maps 1:1 onto chart points.  Returns null when the
 * mart has no year dimension; "(missing)" year buckets are not plottable and
 * are left to the table.
 */
export function chartData(mart: Mart): ChartData | null {
  const yearIdx = mart.dimensions.findIndex((d) => YEAR_DIMS.includes(d));
  if (yearIdx < 0) return null;
  const yearDim = mart.dimensions[yearIdx]!;

  const byLabel = new Map<string, [number, number][]>();
  const yearSet = new Set<number>();
  for (const cell of mart.cells) {
    const rawYear = cell.key[yearIdx];
    if (rawYear === undefined) continue;
    const year = Number(rawYear);
    if (!Number.isFinite(year)) continue; // "(missing)" bucket
    const label =
      cell.key.filter((_, i) => i !== yearIdx).join(" / ") || mart.measure;
    yearSet.add(year);
    const points = byLabel.get(label) ?? [];
    points.push([year, cell.value]);
    byLabel.set(label, points);
  }
  if (yearSet.size === 0) return null;

  const series = [...byLabel.entries()]
    .map(([label, points]) => ({
      label,
      points: points.sort((a, b) => a[0] - b[0]),
    }))
    .sort((a, b) => a.label.localeCompare(b.label));
  return { yearDim, years: [...yearSet].sort((a, b) => a - b), series };
}

const PALETTE = ["#2563eb", "#dc2626", "#059669", "#d97706", "#7c3aed", "#0891b2"];
const W = 520;
const H = 240;
const PAD = { left: 44, right: 12, top: 16, bottom: 30 };

function svgEl<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string | number>,
): SVGElementTagNameMap[K] {
  const el = document.createElementNS("http://www.w3.org/2000/svg", tag);
  for (const [k, v] of Object.entries(attrs)) el.setAttribute(k, String(v));
  return el;
}

/** Line chart, one polyline per series, dots on the data points. */
export function renderChart(data: ChartData): SVGSVGElement {
  const svg = svgEl("svg", {
    viewBox: `0 0 ${W} ${H}`,
    width: W,
    height: H,
    role: "img",
  });
  svg.dataset["chart"] = "mart";

  const years = data.years;
  const maxValue = Math.max(1, ...data.series.flatMap((s) => s.points.map((p) => p[1])));
  const spanX = Math.max(1, years.length - 1);
  const x = (year: number) =>
    PAD.left + ((W - PAD.left - PAD.right) * years.indexOf(year)) / spanX;
  const y = (value: number) =>
    H - PAD.bottom - ((H - PAD.top - PAD.bottom) * value) / maxValue;

  // axes
  svg.append(
    svgEl("line", { x1: PAD.left, y1: H - PAD.bottom, x2: W - PAD.right, y2: H - PAD.bottom, stroke: "#888" }),
    svgEl("line", { x1: PAD.left, y1: PAD.top, x2: PAD.left, y2: H - PAD.bottom, stroke: "#888" }),
  );
  for (const year of years) {
    const label = svgEl("text", {
      x: x(year), y: H - PAD.bottom + 18, "text-anchor": "middle", "font-size": 12,
    });
    label.textContent = String(year);
    svg.append(label);
  }
  for (const v of [0, maxValue]) {
    const label = svgEl("text", {
      x: PAD.left - 6, y: y(v) + 4, "text-anchor": "end", "font-size": 12,
    });
    label.textContent = String(v);
    svg.append(label);
  }

  data.series.forEach((series, i) => {
    const color = PALETTE[i % PALETTE.length]!;
    const group = svgEl("g", { "data-series": series.label, fill: color, stroke: color });
    if (series.points.length > 1) {
      group.append(svgEl("polyline", {
        points: series.points.map(([yr, v]) => `${x(yr)},${y(v)}`).join(" "),
        fill: "none",
        "stroke-width": 2,
      }));
    }
    for (const [yr, v] of series.points) {
      const dot = svgEl("circle", { cx: x(yr), cy: y(v), r: 3.5 });
      dot.dataset["year"] = String(yr);
      dot.dataset["value"] = String(v);
      group.append(dot);
    }
    const legend = svgEl("text", {
      x: W - PAD.right, y: PAD.top + 14 * (i + 1) - 4,
      "text-anchor": "end", "font-size": 12, stroke: "none",
    });
    legend.textContent = series.label;
    group.append(legend);
    svg.append(group);
  });

  return svg;
}
