import type { ForecastDoc } from './api.js';

// Line chart of graduation probability by incubation month. Turning points
// from the payload shade the month they land on: downturns red, upturns
// green. The current selection (month or range) is marked with a band.

const SVG_NS = 'http://www.w3.org/2000/svg';
const PAD_LEFT = 36;
const PAD_BOTTOM = 22;
const PAD_TOP = 8;

export interface ChartOptions {
  width?: number;
  height?: number;
}

export function renderForecastChart(
  container: HTMLElement, doc: ForecastDoc, window: [number, number],
  options: ChartOptions = {},
): SVGSVGElement {
  const width = options.width ?? 560;
  const height = options.height ?? 200;
  container.textContent = '';

  const svg = document.createElementNS(SVG_NS, 'svg');
  svg.setAttribute('class', 'forecast-chart');
  svg.setAttribute('viewBox', `0 0 ${width} ${height}`);
  svg.setAttribute('width', String(width));
  svg.setAttribute('height', String(height));
  container.appendChild(svg);

  const months = doc.probabilities.length;
  if (months === 0) {
    return svg;
  }
  const plotW = width - PAD_LEFT - 8;
  const plotH = height - PAD_TOP - PAD_BOTTOM;
  // Month m sits at the center of its column so shading can span a column.
  const colW = plotW / months;
  const xAt = (month: number) => PAD_LEFT + (month - 0.5) * colW;
  const yAt = (p: number) => PAD_TOP + (1 - p) * plotH;

  for (const grid of [0, 0.5, 1]) {
    const line = document.createElementNS(SVG_NS, 'line');
    line.setAttribute('class', 'grid');
    line.setAttribute('x1', String(PAD_LEFT));
    line.setAttribute('x2', String(width - 8));
    line.setAttribute('y1', String(yAt(grid)));
    line.setAttribute('y2', String(yAt(grid)));
    svg.appendChild(line);
    const tick = document.createElementNS(SVG_NS, 'text');
    tick.setAttribute('class', 'tick');
    tick.setAttribute('x', String(PAD_LEFT - 6));
    tick.setAttribute('y', String(yAt(grid) + 3));
    tick.setAttribute('text-anchor', 'end');
    tick.textContent = grid.toFixed(1);
    svg.appendChild(tick);
  }

  const [from, to] = window;
  const selection = document.createElementNS(SVG_NS, 'rect');
  selection.setAttribute('class', 'selection');
  selection.setAttribute('x', String(xAt(from) - colW / 2));
  selection.setAttribute('y', String(PAD_TOP));
  selection.setAttribute('width', String((to - from + 1) * colW));
  selection.setAttribute('height', String(plotH));
  selection.dataset.from = String(from);
  selection.dataset.to = String(to);
  svg.appendChild(selection);

  for (const turn of doc.turns) {
    const shade = document.createElementNS(SVG_NS, 'rect');
    shade.setAttribute('class', `turn turn-${turn.kind}`);
    shade.setAttribute('x', String(xAt(turn.month) - colW / 2));
    shade.setAttribute('y', String(PAD_TOP));
    shade.setAttribute('width', String(colW));
    shade.setAttribute('height', String(plotH));
    shade.dataset.month = String(turn.month);
    shade.dataset.delta = String(turn.delta);
    const title = document.createElementNS(SVG_NS, 'title');
    title.textContent = `${turn.kind} at month ${turn.month} (${turn.delta})`;
    shade.appendChild(title);
    svg.appendChild(shade);
  }

  const points = doc.probabilities
    .map((p, i) => `${xAt(i + 1)},${yAt(p)}`)
    .join(' ');
  const line = document.createElementNS(SVG_NS, 'polyline');
  line.setAttribute('class', 'prob-line');
  line.setAttribute('points', points);
  line.setAttribute('fill', 'none');
  svg.appendChild(line);

  doc.probabilities.forEach((p, i) => {
    const dot = document.createElementNS(SVG_NS, 'circle');
    dot.setAttribute('class', 'prob-dot');
    dot.setAttribute('cx', String(xAt(i + 1)));
    dot.setAttribute('cy', String(yAt(p)));
    dot.setAttribute('r', '2.5');
    dot.dataset.month = String(i + 1);
    dot.dataset.probability = String(p);
    const title = document.createElementNS(SVG_NS, 'title');
    title.textContent = `month ${i + 1}: ${p}`;
    dot.appendChild(title);
    svg.appendChild(dot);
  });

  for (const month of [1, months]) {
    const tick = document.createElementNS(SVG_NS, 'text');
    tick.setAttribute('class', 'tick');
    tick.setAttribute('x', String(xAt(month)));
    tick.setAttribute('y', String(height - 6));
    tick.setAttribute('text-anchor', 'middle');
    tick.textContent = String(month);
    svg.appendChild(tick);
  }
  return svg;
}
