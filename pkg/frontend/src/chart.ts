/** Minimal SVG line chart for margin sweeps. Tick labels and point values
 * come verbatim from the series data; only pixel placement is computed. */

export interface Series {
  label: string;
  points: Array<{ x: number; y: number }>;
  color: string;
}

const W = 420;
const H = 180;
const PAD = 36;

export function renderChart(title: string, series: Series[]): SVGSVGElement {
  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", `0 0 ${W} ${H}`);
  svg.setAttribute("class", "sweep-chart");
  svg.setAttribute("role", "img");
  svg.setAttribute("aria-label", title);

  const xs = series.flatMap((s) => s.points.map((p) => p.x));
  const ys = series.flatMap((s) => s.points.map((p) => p.y));
  if (xs.length === 0) return svg;
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yMin = Math.min(...ys, 0);
  const yMax = Math.max(...ys);
  const sx = (x: number) =>
    PAD + ((x - xMin) / Math.max(xMax - xMin, 1e-12)) * (W - 2 * PAD);
  const sy = (y: number) =>
    H - PAD - ((y - yMin) / Math.max(yMax - yMin, 1e-12)) * (H - 2 * PAD);

  const caption = document.createElementNS(svg.namespaceURI, "text");
  caption.setAttribute("x", String(W / 2));
  caption.setAttribute("y", "14");
  caption.setAttribute("text-anchor", "middle");
  caption.setAttribute("class", "chart-title");
  caption.textContent = title;
  svg.appendChild(caption);

  for (const s of series) {
    const line = document.createElementNS(svg.namespaceURI, "polyline");
    line.setAttribute("fill", "none");
    line.setAttribute("stroke", s.color);
    line.setAttribute("stroke-width", "2");
    line.setAttribute(
      "points",
      s.points.map((p) => `${sx(p.x)},${sy(p.y)}`).join(" "),
    );
    svg.appendChild(line);
    for (const p of s.points) {
      const dot = document.createElementNS(svg.namespaceURI, "circle");
      dot.setAttribute("cx", String(sx(p.x)));
      dot.setAttribute("cy", String(sy(p.y)));
      dot.setAttribute("r", "3");
      dot.setAttribute("fill", s.color);
      const hover = document.createElementNS(svg.namespaceURI, "title");
      hover.textContent = `${s.label} @ ${p.x}: ${p.y}`;
      dot.appendChild(hover);
      svg.appendChild(dot);
    }
  }

  // x tick labels: the sweep values themselves, verbatim
  const ticks = [...new Set(xs)].sort((a, b) => a - b);
  for (const t of ticks) {
    const label = document.createElementNS(svg.namespaceURI, "text");
    label.setAttribute("x", String(sx(t)));
    label.setAttribute("y", String(H - PAD + 16));
    label.setAttribute("text-anchor", "middle");
    label.setAttribute("class", "chart-tick");
    label.textContent = String(t);
    svg.appendChild(label);
  }
  return svg;
}
