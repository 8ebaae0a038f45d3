import type { MetricsDoc, ProjectInfo, ReportDoc, SideMetrics } from './api.js';

// Small pane renderers. Every value shown is the payload value, stringified
// as-is; formatting beyond layout would drift from the API's truth.

export function renderError(container: HTMLElement, message: string): void {
  container.textContent = '';
  const banner = document.createElement('div');
  banner.className = 'error-banner';
  banner.textContent = message;
  container.appendChild(banner);
}

export function renderInfoCard(container: HTMLElement, info: ProjectInfo): void {
  container.textContent = '';
  const name = document.createElement('h2');
  name.textContent = info.name;
  container.appendChild(name);

  const link = document.createElement('a');
  link.href = info.homepage_url;
  link.textContent = info.homepage_url;
  link.target = '_blank';
  container.appendChild(link);

  const dl = document.createElement('dl');
  const rows: [string, string][] = [
    ['status', info.status],
    ['sponsor', info.sponsor],
    ['incubation start', info.incubation_start],
    ['months', String(info.months)],
  ];
  for (const [key, value] of rows) {
    const dt = document.createElement('dt');
    dt.textContent = key;
    const dd = document.createElement('dd');
    dd.textContent = value;
    dd.dataset.field = key;
    dl.appendChild(dt);
    dl.appendChild(dd);
  }
  container.appendChild(dl);

  const blurb = document.createElement('p');
  blurb.className = 'description';
  blurb.textContent = info.description;
  container.appendChild(blurb);
}

export function renderReport(container: HTMLElement, report: ReportDoc): void {
  container.textContent = '';
  if (report.text === '') {
    const note = document.createElement('p');
    note.className = 'placeholder';
    note.textContent = `no report filed for month ${report.month}`;
    container.appendChild(note);
    return;
  }
  const text = document.createElement('p');
  text.className = 'report-text';
  text.textContent = report.text;
  container.appendChild(text);
}

const METRIC_ROWS: [keyof SideMetrics, string][] = [
  ['nodes', 'nodes'],
  ['left', 'left nodes'],
  ['right', 'right nodes'],
  ['edges', 'edges'],
  ['mean_degree', 'mean degree'],
  ['clustering', 'clustering'],
];

function metricsTable(side: SideMetrics): HTMLTableElement {
  const table = document.createElement('table');
  table.className = 'metrics';
  for (const [key, label] of METRIC_ROWS) {
    const row = document.createElement('tr');
    const name = document.createElement('th');
    name.textContent = label;
    const value = document.createElement('td');
    value.textContent = String(side[key]);
    value.dataset.metric = key;
    row.appendChild(name);
    row.appendChild(value);
    table.appendChild(row);
  }
  return table;
}

export function renderMetrics(
  socialPane: HTMLElement, techPane: HTMLElement, doc: MetricsDoc,
): void {
  socialPane.textContent = '';
  socialPane.appendChild(metricsTable(doc.social));
  techPane.textContent = '';
  techPane.appendChild(metricsTable(doc.tech));
}
