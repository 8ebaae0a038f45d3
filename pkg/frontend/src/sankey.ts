import type { NetworkDoc, NetworkNode } from './api.js';
import type { PinnedDev } from './state.js';

// Hand-rolled Sankey: two flush-stacked columns of node rectangles whose
// heights follow the payload percentages, joined by cubic bands whose
// thickness at each anchor fills the node in proportion to link weight.
// All geometry is plain attributes so tests can assert on it.

const SVG_NS = 'http://www.w3.org/2000/svg';
const NODE_W = 14;
const LABEL_PAD = 170;

export interface SankeyOptions {
  width?: number;
  height?: number;
  onPin?: (pin: PinnedDev) => void;
}

interface Placed {
  node: NetworkNode;
  x: number;
  y: number;
  height: number;
  rect: SVGRectElement;
  label: SVGTextElement;
}

export function bandPath(
  x0: number, y0: number, h0: number,
  x1: number, y1: number, h1: number,
): string {
  const cp = (x1 - x0) * 0.4;
  return (
    `M ${x0},${y0} C ${x0 + cp},${y0} ${x1 - cp},${y1} ${x1},${y1} ` +
    `L ${x1},${y1 + h1} C ${x1 - cp},${y1 + h1} ${x0 + cp},${y0 + h0} ${x0},${y0 + h0} Z`
  );
}

// Thickness at the left anchor of a band path, read back from its d string.
export function pathThickness(d: string): number {
  const first = /M [-\d.]+,([-\d.]+)/.exec(d);
  const last = /([-\d.]+) Z$/.exec(d.replace(/,/g, ' '));
  if (!first || !last) return NaN;
  return parseFloat(last[1]) - parseFloat(first[1]);
}

function placeColumn(
  nodes: NetworkNode[], x: number, totalHeight: number,
): Map<string, Placed> {
  const placed = new Map<string, Placed>();
  let y = 0;
  for (const node of nodes) {
    const height = (node.pct / 100) * totalHeight;
    const rect = document.createElementNS(SVG_NS, 'rect');
    rect.setAttribute('class', 'node');
    rect.setAttribute('x', String(x));
    rect.setAttribute('y', String(y));
    rect.setAttribute('width', String(NODE_W));
    rect.setAttribute('height', String(height));
    rect.dataset.id = node.id;
    rect.dataset.side = node.side;
    rect.dataset.pct = String(node.pct);
    const label = document.createElementNS(SVG_NS, 'text');
    label.setAttribute('class', 'node-label');
    label.setAttribute('y', String(y + height / 2));
    label.dataset.for = node.id;
    label.textContent = node.label;
    placed.set(node.id, { node, x, y, height, rect, label });
    y += height;
  }
  return placed;
}

export function renderSankeyInto(
  container: HTMLElement, doc: NetworkDoc, options: SankeyOptions = {},
): SVGSVGElement {
  const width = options.width ?? 560;
  const height = options.height ?? 360;
  container.textContent = '';

  const svg = document.createElementNS(SVG_NS, 'svg');
  svg.setAttribute('class', 'sankey');
  svg.setAttribute('viewBox', `0 0 ${width} ${height}`);
  svg.setAttribute('width', String(width));
  svg.setAttribute('height', String(height));
  container.appendChild(svg);

  if (doc.links.length === 0) {
    const note = document.createElement('div');
    note.className = 'placeholder';
    note.textContent = 'no activity';
    container.appendChild(note);
    return svg;
  }

  const leftX = LABEL_PAD;
  const rightX = width - LABEL_PAD - NODE_W;
  const left = placeColumn(doc.nodes.filter((n) => n.side === 'L'), leftX, height);
  const right = placeColumn(doc.nodes.filter((n) => n.side === 'R'), rightX, height);

  // Per-node incident weight, to share the node's height among its flows.
  const outWeight = new Map<string, number>();
  const inWeight = new Map<string, number>();
  for (const link of doc.links) {
    outWeight.set(link.source, (outWeight.get(link.source) ?? 0) + link.weight);
    inWeight.set(link.target, (inWeight.get(link.target) ?? 0) + link.weight);
  }

  const flowGroup = document.createElementNS(SVG_NS, 'g');
  flowGroup.setAttribute('class', 'flows');
  svg.appendChild(flowGroup);

  const sourceOffset = new Map<string, number>();
  const targetOffset = new Map<string, number>();
  for (const link of doc.links) {
    const from = left.get(link.source);
    const to = right.get(link.target);
    if (!from || !to) continue;
    const h0 = (link.weight / (outWeight.get(link.source) ?? 1)) * from.height;
    const h1 = (link.weight / (inWeight.get(link.target) ?? 1)) * to.height;
    const y0 = from.y + (sourceOffset.get(link.source) ?? 0);
    const y1 = to.y + (targetOffset.get(link.target) ?? 0);
    sourceOffset.set(link.source, y0 + h0 - from.y);
    targetOffset.set(link.target, y1 + h1 - to.y);

    const path = document.createElementNS(SVG_NS, 'path');
    path.setAttribute('class', 'flow');
    path.setAttribute('d', bandPath(leftX + NODE_W, y0, h0, rightX, y1, h1));
    path.dataset.source = link.source;
    path.dataset.target = link.target;
    path.dataset.weight = String(link.weight);
    flowGroup.appendChild(path);
  }

  const nodeGroup = document.createElementNS(SVG_NS, 'g');
  nodeGroup.setAttribute('class', 'nodes');
  svg.appendChild(nodeGroup);
  const labelGroup = document.createElementNS(SVG_NS, 'g');
  labelGroup.setAttribute('class', 'labels');
  svg.appendChild(labelGroup);

  for (const placed of [...left.values(), ...right.values()]) {
    const isLeft = placed.node.side === 'L';
    placed.label.setAttribute('x', String(isLeft ? leftX - 6 : rightX + NODE_W + 6));
    placed.label.setAttribute('text-anchor', isLeft ? 'end' : 'start');
    nodeGroup.appendChild(placed.rect);
    labelGroup.appendChild(placed.label);
    wireNode(svg, container, doc, placed, options);
  }
  return svg;
}

function incidentIds(doc: NetworkDoc, id: string): Set<string> {
  const ids = new Set<string>([id]);
  for (const link of doc.links) {
    if (link.source === id) ids.add(link.target);
    if (link.target === id) ids.add(link.source);
  }
  return ids;
}

function wireNode(
  svg: SVGSVGElement, container: HTMLElement, doc: NetworkDoc,
  placed: Placed, options: SankeyOptions,
): void {
  const id = placed.node.id;
  placed.rect.addEventListener('mouseenter', () => {
    const keep = incidentIds(doc, id);
    for (const el of svg.querySelectorAll<SVGElement>('.node, .node-label')) {
      const own = el.dataset.id ?? el.dataset.for ?? '';
      el.classList.add(keep.has(own) ? 'emph' : 'dim');
    }
    for (const el of svg.querySelectorAll<SVGElement>('.flow')) {
      const touches = el.dataset.source === id || el.dataset.target === id;
      el.classList.add(touches ? 'emph' : 'dim');
    }
    if (doc.flavor === 'tech' && placed.node.side === 'R') {
      showContributors(container, doc, placed.node);
    }
  });
  placed.rect.addEventListener('mouseleave', () => {
    for (const el of svg.querySelectorAll<SVGElement>('.emph, .dim')) {
      el.classList.remove('emph', 'dim');
    }
    container.querySelector('.sankey-tip')?.remove();
  });

  // Developers are pinnable; technical right-side nodes are file types.
  const pinnable = doc.flavor === 'social' || placed.node.side === 'L';
  if (pinnable && options.onPin) {
    placed.rect.classList.add('pinnable');
    placed.rect.addEventListener('click', () => {
      options.onPin!({
        dev: id,
        label: placed.node.label,
        kind: doc.flavor === 'social' ? 'emails' : 'commits',
      });
    });
  }
}

// Hovering a file type lists who touched it, with their payload percentage.
function showContributors(
  container: HTMLElement, doc: NetworkDoc, node: NetworkNode,
): void {
  container.querySelector('.sankey-tip')?.remove();
  const tip = document.createElement('div');
  tip.className = 'sankey-tip';
  const title = document.createElement('strong');
  title.textContent = node.label;
  tip.appendChild(title);
  const byId = new Map(doc.nodes.map((n) => [n.id, n]));
  const list = document.createElement('ul');
  for (const link of doc.links) {
    if (link.target !== node.id) continue;
    const dev = byId.get(link.source);
    if (!dev) continue;
    const item = document.createElement('li');
    item.textContent = `${dev.label} (${dev.pct}%)`;
    list.appendChild(item);
  }
  tip.appendChild(list);
  container.appendChild(tip);
}
