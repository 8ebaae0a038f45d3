// Typed client for the artifact service. Every pane renders these payloads
// verbatim; the client never recomputes a metric.

export interface ProjectListing {
  project_id: string;
  name: string;
  status: string;
}

export interface ProjectInfo {
  schema: number;
  project_id: string;
  name: string;
  status: string;
  homepage_url: string;
  sponsor: string;
  description: string;
  incubation_start: string;
  months: number;
}

export type Flavor = 'social' | 'tech';

export interface NetworkNode {
  id: string;
  label: string;
  pct: number;
  side: 'L' | 'R';
}

export interface NetworkLink {
  source: string;
  target: string;
  weight: number;
}

export interface NetworkDoc {
  schema: number;
  flavor: string;
  month_from: number;
  month_to: number;
  nodes: NetworkNode[];
  links: NetworkLink[];
}

export interface SideMetrics {
  nodes: number;
  left: number;
  right: number;
  edges: number;
  mean_degree: number;
  clustering: number;
}

export interface MetricsDoc {
  schema: number;
  social: SideMetrics;
  tech: SideMetrics;
}

export interface TurnEvent {
  month: number;
  kind: string;
  delta: number;
}

export interface ForecastDoc {
  schema: number;
  probabilities: number[];
  turns: TurnEvent[];
}

export interface ReportDoc {
  schema: number;
  month: number;
  text: string;
}

export interface EmailRecord {
  message_id: string;
  subject: string;
  ts: string;
}

export interface CommitRecord {
  commit_id: string;
  files: string[];
  ts: string;
}

export type DrilldownKind = 'emails' | 'commits';

export interface DrilldownDoc {
  schema: number;
  developer: string;
  kind: string;
  records: (EmailRecord | CommitRecord)[];
}

export class ApiError extends Error {
  constructor(public code: string, message: string) {
    super(message);
    this.name = 'ApiError';
  }
}

export function projectsUrl(): string {
  return '/api/projects';
}

export function infoUrl(pid: string): string {
  return `/api/projects/${encodeURIComponent(pid)}/info`;
}

export function networkUrl(pid: string, flavor: Flavor, from: number, to: number): string {
  return `/api/projects/${encodeURIComponent(pid)}/network?flavor=${flavor}&from=${from}&to=${to}`;
}

export function metricsUrl(pid: string, from: number, to: number): string {
  return `/api/projects/${encodeURIComponent(pid)}/metrics?from=${from}&to=${to}`;
}

export function forecastUrl(pid: string): string {
  return `/api/projects/${encodeURIComponent(pid)}/forecast`;
}

export function reportUrl(pid: string, month: number): string {
  return `/api/projects/${encodeURIComponent(pid)}/report?month=${month}`;
}

export function drilldownUrl(
  pid: string, dev: string, kind: DrilldownKind, from: number, to: number,
): string {
  return `/api/projects/${encodeURIComponent(pid)}/drilldown` +
    `?dev=${encodeURIComponent(dev)}&kind=${kind}&from=${from}&to=${to}`;
}

async function getJson<T>(url: string): Promise<T> {
  const resp = await fetch(url);
  const body = await resp.json();
  if (!resp.ok) {
    const err = body?.error ?? {};
    throw new ApiError(err.code ?? 'error', err.message ?? `request failed: ${url}`);
  }
  return body as T;
}

// One object so tests can swap in a stub with the same surface.
export interface Api {
  projects(): Promise<ProjectListing[]>;
  info(pid: string): Promise<ProjectInfo>;
  network(pid: string, flavor: Flavor, from: number, to: number): Promise<NetworkDoc>;
  metrics(pid: string, from: number, to: number): Promise<MetricsDoc>;
  forecast(pid: string): Promise<ForecastDoc>;
  report(pid: string, month: number): Promise<ReportDoc>;
  drilldown(pid: string, dev: string, kind: DrilldownKind, from: number, to: number): Promise<DrilldownDoc>;
}

export const api: Api = {
  projects: () => getJson(projectsUrl()),
  info: (pid) => getJson(infoUrl(pid)),
  network: (pid, flavor, from, to) => getJson(networkUrl(pid, flavor, from, to)),
  metrics: (pid, from, to) => getJson(metricsUrl(pid, from, to)),
  forecast: (pid) => getJson(forecastUrl(pid)),
  report: (pid, month) => getJson(reportUrl(pid, month)),
  drilldown: (pid, dev, kind, from, to) => getJson(drilldownUrl(pid, dev, kind, from, to)),
};
