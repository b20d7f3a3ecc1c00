/** Analysis metrics panel: one horizontal bar per pooled metric with a
 * mean +/- std whisker. Bars share one scale so magnitudes compare visually;
 * negative means extend left of the baseline.
 */

import type { ReportView, SummaryView } from "./types.js";

const CHART_WIDTH = 420;
const ROW_HEIGHT = 34;
const BASELINE_X = 150;
const LABEL_X = 8;

export function formatSummary(s: SummaryView): string {
  return `${s.mean.toFixed(2)} +/- ${s.std.toFixed(2)}`;
}

export function buildMetricsPanel(report: ReportView, doc: Document = document): HTMLElement {
  const panel = doc.createElement("section");
  panel.className = "metrics-panel";

  const heading = doc.createElement("h2");
  heading.textContent = `Analysis: ${report.variant}`;
  panel.appendChild(heading);

  const note = doc.createElement("p");
  note.className = "metrics-note";
  note.textContent = `${report.note} (n=${report.pooled[0]?.n ?? 0})`;
  panel.appendChild(note);

  const extent = Math.max(1, ...report.pooled.map((s) => Math.abs(s.mean) + s.std));
  const span = CHART_WIDTH - BASELINE_X - 10;
  const toX = (value: number) => BASELINE_X + (value / extent) * span;

  const svg = doc.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("class", "metrics-chart");
  svg.setAttribute("width", String(CHART_WIDTH));
  svg.setAttribute("height", String(report.pooled.length * ROW_HEIGHT));

  report.pooled.forEach((summary, index) => {
    const yMid = index * ROW_HEIGHT + ROW_HEIGHT / 2;

    const label = doc.createElementNS("http://www.w3.org/2000/svg", "text");
    label.setAttribute("class", "metric-name");
    label.setAttribute("x", String(LABEL_X));
    label.setAttribute("y", String(yMid + 4));
    label.textContent = summary.metric;
    svg.appendChild(label);

    const tip = toX(summary.mean);
    const bar = doc.createElementNS("http://www.w3.org/2000/svg", "rect");
    bar.setAttribute("class", "metric-bar");
    bar.setAttribute("data-metric", summary.metric);
    bar.setAttribute("x", String(Math.min(BASELINE_X, tip)));
    bar.setAttribute("y", String(yMid - 9));
    bar.setAttribute("width", String(Math.max(Math.abs(tip - BASELINE_X), 1)));
    bar.setAttribute("height", "18");
    svg.appendChild(bar);

    const whisker = doc.createElementNS("http://www.w3.org/2000/svg", "line");
    whisker.setAttribute("class", "metric-whisker");
    whisker.setAttribute("data-metric", summary.metric);
    whisker.setAttribute("x1", String(toX(summary.mean - summary.std)));
    whisker.setAttribute("x2", String(toX(summary.mean + summary.std)));
    whisker.setAttribute("y1", String(yMid));
    whisker.setAttribute("y2", String(yMid));
    svg.appendChild(whisker);

    const value = doc.createElementNS("http://www.w3.org/2000/svg", "text");
    value.setAttribute("class", "metric-value");
    value.setAttribute("x", String(CHART_WIDTH - 4));
    value.setAttribute("y", String(yMid - 12));
    value.setAttribute("text-anchor", "end");
    value.textContent = formatSummary(summary);
    svg.appendChild(value);
  });

  panel.appendChild(svg);
  return panel;
}
