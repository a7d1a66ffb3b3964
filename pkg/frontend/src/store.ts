/** Single client-side store; every view renders from exactly this state. */

import type { CycleTrace, ModelInfo, Snapshot } from "./api.js";

export interface TimelineStep {
  step: number;
  cycles: CycleTrace[];
}

export interface ViewState {
  sessionId: string | null;
  model: ModelInfo | null;
  snapshot: Snapshot | null;
  timeline: TimelineStep[];
  busy: boolean;
  errors: string[];
}

export const initialState: ViewState = {
  sessionId: null,
  model: null,
  snapshot: null,
  timeline: [],
  busy: false,
  errors: [],
};

export class Store {
  private state: ViewState = { ...initialState };
  private listeners: ((state: ViewState) => void)[] = [];

  get(): ViewState {
    return this.state;
  }

  set(partial: Partial<ViewState>): void {
    this.state = { ...this.state, ...partial };
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }

  subscribe(listener: (state: ViewState) => void): void {
    this.listeners.push(listener);
    listener(this.state);
  }
}
