import type { DrilldownKind } from './api.js';

// What the user is looking at. The month slider is ignored while a range is
// enabled; pinned developers carry the network pane they were pinned from.

export interface PinnedDev {
  dev: string;
  label: string;
  kind: DrilldownKind;
}

export interface ViewState {
  project: string;
  months: number;
  month: number;
  rangeEnabled: boolean;
  rangeFrom: number;
  rangeTo: number;
  pinned: PinnedDev[];
}

export function initialState(): ViewState {
  return {
    project: '',
    months: 1,
    month: 1,
    rangeEnabled: false,
    rangeFrom: 1,
    rangeTo: 1,
    pinned: [],
  };
}

// The months actually requested: [month, month] or the range.
export function visibleWindow(state: ViewState): [number, number] {
  if (state.rangeEnabled) {
    return [state.rangeFrom, state.rangeTo];
  }
  return [state.month, state.month];
}

function clampMonth(value: number, months: number): number {
  return Math.min(Math.max(1, Math.round(value)), months);
}

// Keep every month field inside the project's window and the range ordered.
export function clampState(state: ViewState): ViewState {
  state.month = clampMonth(state.month, state.months);
  state.rangeFrom = clampMonth(state.rangeFrom, state.months);
  state.rangeTo = clampMonth(state.rangeTo, state.months);
  if (state.rangeFrom > state.rangeTo) {
    state.rangeTo = state.rangeFrom;
  }
  return state;
}

export function selectProject(state: ViewState, project: string, months: number): ViewState {
  state.project = project;
  state.months = months;
  state.pinned = [];
  return clampState(state);
}

export function enableRange(state: ViewState, enabled: boolean): ViewState {
  state.rangeEnabled = enabled;
  if (enabled) {
    state.rangeFrom = state.month;
    state.rangeTo = state.month;
  } else {
    state.month = state.rangeFrom;
  }
  return clampState(state);
}

// Click toggles: pin if absent, unpin if already pinned from the same pane.
export function togglePin(state: ViewState, pin: PinnedDev): ViewState {
  const at = state.pinned.findIndex(
    (p) => p.dev === pin.dev && p.kind === pin.kind,
  );
  if (at >= 0) {
    state.pinned.splice(at, 1);
  } else {
    state.pinned.push(pin);
  }
  return state;
}
