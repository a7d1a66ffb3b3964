/** Application wiring: one in-flight request per session, poll after action.
 *
 * The rendered view always comes from the latest `GET /sessions/{id}`
 * snapshot; step responses only feed the cycle timeline.
 */

import { ApiClient, ServiceError } from "./api.js";
import { LASER_EXAMPLE } from "./example.js";
import { Store } from "./store.js";
import {
  renderBadges,
  renderDiagnostics,
  renderEventButtons,
  renderGauges,
  renderInspector,
  renderStatus,
  renderTimeline,
} from "./ui.js";

export interface AppHandles {
  store: Store;
  loadExample(): void;
  loadModel(): Promise<void>;
  raise(event: string): Promise<void>;
  step(count: number): Promise<void>;
  reorder(): Promise<void>;
}

function parseOrder(text: string): number[] | null {
  const trimmed = text.trim();
  if (!trimmed) return null;
  return trimmed.split(",").map((part) => Number.parseInt(part.trim(), 10));
}

export function initApp(doc: Document, client: ApiClient, confirmFn: (msg: string) => boolean = () => true): AppHandles {
  const store = new Store();
  const byId = (id: string): HTMLElement => {
    const node = doc.getElementById(id);
    if (!node) throw new Error(`missing element #${id}`);
    return node;
  };

  const modelText = byId("model-text") as HTMLTextAreaElement;
  const patternSelect = byId("pattern-select") as HTMLSelectElement;
  const orderInput = byId("order-input") as HTMLInputElement;
  const stepCount = byId("step-count") as HTMLInputElement;

  const render = () => {
    const state = store.get();
    renderDiagnostics(byId("diagnostics"), state);
    renderBadges(byId("badges"), state);
    renderGauges(byId("gauges"), state);
    renderEventButtons(byId("events"), state, (event) => void handles.raise(event));
    renderInspector(byId("inspector"), state);
    renderTimeline(byId("timeline"), state);
    renderStatus(byId("status"), state);
    (byId("step-button") as HTMLButtonElement).disabled = state.busy || state.sessionId === null;
    (byId("load-button") as HTMLButtonElement).disabled = state.busy;
    (byId("reorder-button") as HTMLButtonElement).disabled = state.busy || state.sessionId === null;
  };
  store.subscribe(render);

  async function refresh(): Promise<void> {
    const id = store.get().sessionId;
    if (!id) return;
    const detail = await client.getSession(id);
    store.set({ snapshot: detail.snapshot, model: detail.model });
  }

  async function guarded(action: () => Promise<void>): Promise<void> {
    if (store.get().busy) return;
    store.set({ busy: true, errors: [] });
    try {
      await action();
      store.set({ busy: false });
    } catch (err) {
      const errors = err instanceof ServiceError ? err.diagnostics : [String(err)];
      store.set({ busy: false, errors });
    }
  }

  async function createSession(order: number[] | null): Promise<void> {
    const pattern = patternSelect.value || null;
    const created = await client.createSession(modelText.value, pattern, order);
    store.set({
      sessionId: created.session_id,
      model: created.model,
      snapshot: created.snapshot,
      timeline: [],
    });
    await refresh();
  }

  const handles: AppHandles = {
    store,
    loadExample(): void {
      modelText.value = LASER_EXAMPLE;
    },
    loadModel(): Promise<void> {
      return guarded(() => createSession(parseOrder(orderInput.value)));
    },
    raise(event: string): Promise<void> {
      return guarded(async () => {
        const id = store.get().sessionId;
        if (!id) return;
        await client.injectEvent(id, event);
        await refresh();
      });
    },
    step(count: number): Promise<void> {
      return guarded(async () => {
        const id = store.get().sessionId;
        if (!id) return;
        const result = await client.step(id, count);
        const timeline = [...store.get().timeline];
        for (let i = 0; i < result.snapshots.length; i++) {
          timeline.push({ step: result.snapshots[i].clock, cycles: result.cycle_traces[i] });
        }
        store.set({ timeline });
        await refresh();
      });
    },
    reorder(): Promise<void> {
      return guarded(async () => {
        if (store.get().sessionId && !confirmFn("Start a fresh session with the new execution order?")) {
          return;
        }
        await createSession(parseOrder(orderInput.value));
      });
    },
  };

  byId("example-button").addEventListener("click", () => handles.loadExample());
  byId("load-button").addEventListener("click", () => void handles.loadModel());
  byId("step-button").addEventListener("click", () => {
    const count = Number.parseInt(stepCount.value, 10) || 1;
    void handles.step(count);
  });
  byId("reorder-button").addEventListener("click", () => void handles.reorder());
  return handles;
}

declare global {
  interface Window {
    STATEPAT_BASE?: string;
  }
}

if (typeof document !== "undefined" && document.getElementById("statepat-app")) {
  const base = window.STATEPAT_BASE ?? "";
  initApp(document, new ApiClient(base), (msg) => window.confirm(msg));
}
