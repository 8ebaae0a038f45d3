import type { Api, ProjectListing } from './api.js';
import { api as liveApi } from './api.js';
import { openDrilldown, renderPinButtons } from './drilldown.js';
import { renderForecastChart } from './forecast_chart.js';
import { renderError, renderInfoCard, renderMetrics, renderReport } from './render.js';
import { renderSankeyInto } from './sankey.js';
import type { PinnedDev, ViewState } from './state.js';
import {
  clampState, enableRange, initialState, selectProject, togglePin, visibleWindow,
} from './state.js';

export interface Panes {
  forecast: HTMLElement;
  info: HTMLElement;
  report: HTMLElement;
  socialNet: HTMLElement;
  techNet: HTMLElement;
  socialPins: HTMLElement;
  techPins: HTMLElement;
  socialMetrics: HTMLElement;
  techMetrics: HTMLElement;
}

export function collectPanes(root: ParentNode): Panes {
  const pane = (id: string) => {
    const el = root.querySelector<HTMLElement>(`#${id}`);
    if (!el) throw new Error(`missing pane #${id}`);
    return el;
  };
  return {
    forecast: pane('forecast-pane'),
    info: pane('info-pane'),
    report: pane('report-pane'),
    socialNet: pane('social-net'),
    techNet: pane('tech-net'),
    socialPins: pane('social-pins'),
    techPins: pane('tech-pins'),
    socialMetrics: pane('social-metrics'),
    techMetrics: pane('tech-metrics'),
  };
}

let fetchTicket = 0;

// Re-render panes B-H for the current state. Each pane fails independently;
// a stale response (state changed mid-flight) is dropped, latest wins.
export async function refreshPanes(
  api: Api, state: ViewState, panes: Panes,
  opener: (url: string, target: string, features: string) => Window | null,
): Promise<void> {
  const ticket = ++fetchTicket;
  const fresh = () => ticket === fetchTicket;
  const [from, to] = visibleWindow(state);
  const pid = state.project;

  const jobs: Promise<void>[] = [
    api.forecast(pid)
      .then((doc) => { if (fresh()) renderForecastChart(panes.forecast, doc, [from, to]); })
      .catch((err) => { if (fresh()) renderError(panes.forecast, String(err.message ?? err)); }),
    api.info(pid)
      .then((doc) => { if (fresh()) renderInfoCard(panes.info, doc); })
      .catch((err) => { if (fresh()) renderError(panes.info, String(err.message ?? err)); }),
    api.report(pid, to)
      .then((doc) => { if (fresh()) renderReport(panes.report, doc); })
      .catch((err) => { if (fresh()) renderError(panes.report, String(err.message ?? err)); }),
    api.metrics(pid, from, to)
      .then((doc) => { if (fresh()) renderMetrics(panes.socialMetrics, panes.techMetrics, doc); })
      .catch((err) => {
        if (!fresh()) return;
        renderError(panes.socialMetrics, String(err.message ?? err));
        renderError(panes.techMetrics, String(err.message ?? err));
      }),
  ];
  const onPin = (pin: PinnedDev) => {
    togglePin(state, pin);
    drawPins(api, state, panes, opener);
  };
  for (const [flavor, net] of [
    ['social', panes.socialNet], ['tech', panes.techNet],
  ] as const) {
    jobs.push(
      api.network(pid, flavor, from, to)
        .then((doc) => { if (fresh()) renderSankeyInto(net, doc, { onPin }); })
        .catch((err) => { if (fresh()) renderError(net, String(err.message ?? err)); }),
    );
  }
  drawPins(api, state, panes, opener);
  await Promise.all(jobs);
}

function drawPins(
  api: Api, state: ViewState, panes: Panes,
  opener: (url: string, target: string, features: string) => Window | null,
): void {
  const open = (pin: PinnedDev) => {
    void openDrilldown(api, state, pin, opener).catch(() => undefined);
  };
  renderPinButtons(panes.socialPins, state, 'emails', open);
  renderPinButtons(panes.techPins, state, 'commits', open);
}

interface Controls {
  project: HTMLSelectElement;
  month: HTMLInputElement;
  monthValue: HTMLElement;
  rangeToggle: HTMLInputElement;
  rangeFrom: HTMLInputElement;
  rangeTo: HTMLInputElement;
  rangeValue: HTMLElement;
  singleRow: HTMLElement;
  rangeRow: HTMLElement;
}

function collectControls(root: ParentNode): Controls {
  const grab = <T extends HTMLElement>(id: string) => {
    const el = root.querySelector<T>(`#${id}`);
    if (!el) throw new Error(`missing control #${id}`);
    return el;
  };
  return {
    project: grab<HTMLSelectElement>('project-select'),
    month: grab<HTMLInputElement>('month-slider'),
    monthValue: grab('month-value'),
    rangeToggle: grab<HTMLInputElement>('range-toggle'),
    rangeFrom: grab<HTMLInputElement>('range-from'),
    rangeTo: grab<HTMLInputElement>('range-to'),
    rangeValue: grab('range-value'),
    singleRow: grab('single-row'),
    rangeRow: grab('range-row'),
  };
}

function syncControls(controls: Controls, state: ViewState): void {
  for (const slider of [controls.month, controls.rangeFrom, controls.rangeTo]) {
    slider.min = '1';
    slider.max = String(state.months);
  }
  controls.month.value = String(state.month);
  controls.rangeFrom.value = String(state.rangeFrom);
  controls.rangeTo.value = String(state.rangeTo);
  controls.monthValue.textContent = `month ${state.month} of ${state.months}`;
  controls.rangeValue.textContent = `months ${state.rangeFrom}-${state.rangeTo}`;
  controls.singleRow.hidden = state.rangeEnabled;
  controls.rangeRow.hidden = !state.rangeEnabled;
}

export async function bootstrap(
  root: ParentNode, api: Api,
  opener: (url: string, target: string, features: string) => Window | null,
): Promise<void> {
  const panes = collectPanes(root);
  const controls = collectControls(root);
  const state = initialState();

  let projects: ProjectListing[];
  try {
    projects = await api.projects();
  } catch (err) {
    renderError(panes.info, String((err as Error).message ?? err));
    return;
  }
  controls.project.textContent = '';
  for (const project of projects) {
    const option = document.createElement('option');
    option.value = project.project_id;
    option.textContent = `${project.name} (${project.status})`;
    controls.project.appendChild(option);
  }

  const refresh = () => refreshPanes(api, state, panes, opener);

  const pickProject = async (pid: string) => {
    const info = await api.info(pid);
    selectProject(state, pid, info.months);
    syncControls(controls, state);
    await refresh();
  };

  controls.project.addEventListener('change', () => {
    void pickProject(controls.project.value).catch((err) => {
      renderError(panes.info, String(err.message ?? err));
    });
  });

  // Sliders commit on release ("change"); dragging only moves the label.
  controls.month.addEventListener('input', () => {
    controls.monthValue.textContent =
      `month ${controls.month.value} of ${state.months}`;
  });
  controls.month.addEventListener('change', () => {
    state.month = Number(controls.month.value);
    clampState(state);
    syncControls(controls, state);
    void refresh();
  });

  const rangeChanged = (which: 'from' | 'to') => {
    const from = Number(controls.rangeFrom.value);
    const to = Number(controls.rangeTo.value);
    state.rangeFrom = from;
    state.rangeTo = to;
    // Dragging one handle past the other drags the other along.
    if (from > to) {
      if (which === 'from') state.rangeTo = from;
      else state.rangeFrom = to;
    }
    clampState(state);
    syncControls(controls, state);
    void refresh();
  };
  controls.rangeFrom.addEventListener('change', () => rangeChanged('from'));
  controls.rangeTo.addEventListener('change', () => rangeChanged('to'));

  controls.rangeToggle.addEventListener('change', () => {
    enableRange(state, controls.rangeToggle.checked);
    syncControls(controls, state);
    void refresh();
  });

  if (projects.length > 0) {
    controls.project.value = projects[0].project_id;
    await pickProject(projects[0].project_id);
  }
}

const appRoot = typeof document !== 'undefined'
  ? document.getElementById('app')
  : null;
if (appRoot) {
  void bootstrap(appRoot, liveApi, (url, target, features) =>
    window.open(url, target, features));
}
