import type { Api, CommitRecord, DrilldownDoc, EmailRecord } from './api.js';
import type { PinnedDev, ViewState } from './state.js';
import { visibleWindow } from './state.js';

// Pinned developers get a button under their network pane; clicking it opens
// a popup window listing that developer's emails or commits for the months
// currently on screen, straight from the drilldown endpoint.

export type WindowOpener = (
  url: string, target: string, features: string,
) => Window | null;

function recordRow(doc: DrilldownDoc, record: EmailRecord | CommitRecord): string {
  if (doc.kind === 'emails') {
    const email = record as EmailRecord;
    return `<tr><td>${escapeHtml(email.ts)}</td>` +
      `<td>${escapeHtml(email.subject)}</td>` +
      `<td>${escapeHtml(email.message_id)}</td></tr>`;
  }
  const commit = record as CommitRecord;
  return `<tr><td>${escapeHtml(commit.ts)}</td>` +
    `<td>${escapeHtml(commit.files.join(', '))}</td>` +
    `<td>${escapeHtml(commit.commit_id)}</td></tr>`;
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

export function popupHtml(doc: DrilldownDoc, from: number, to: number): string {
  const span = from === to ? `month ${from}` : `months ${from}-${to}`;
  const head = `<h3>${escapeHtml(doc.developer)}: ${doc.kind}, ${span}</h3>`;
  if (doc.records.length === 0) {
    return `${head}<p>no records</p>`;
  }
  const rows = doc.records.map((r) => recordRow(doc, r)).join('');
  return `${head}<table>${rows}</table>`;
}

export async function openDrilldown(
  api: Api, state: ViewState, pin: PinnedDev, opener: WindowOpener,
): Promise<void> {
  const [from, to] = visibleWindow(state);
  const doc = await api.drilldown(state.project, pin.dev, pin.kind, from, to);
  const popup = opener('', '_blank', 'width=520,height=640');
  if (!popup) return;
  popup.document.write(
    `<!doctype html><title>${escapeHtml(pin.label)}</title>` +
    `<body>${popupHtml(doc, from, to)}</body>`,
  );
  popup.document.close();
}

export function renderPinButtons(
  container: HTMLElement, state: ViewState, kind: PinnedDev['kind'],
  onOpen: (pin: PinnedDev) => void,
): void {
  container.textContent = '';
  for (const pin of state.pinned) {
    if (pin.kind !== kind) continue;
    const button = document.createElement('button');
    button.className = 'drill-button';
    button.dataset.dev = pin.dev;
    button.textContent = `${pin.kind} of ${pin.label}`;
    button.addEventListener('click', () => onOpen(pin));
    container.appendChild(button);
  }
}
