/** DOM rendering: every displayed value is copied from a service snapshot.
 * The UI performs no simulation of its own. */

import type { ViewState } from "./store.js";

/** Display hints only: where to draw a threshold line on a gauge. */
export const GAUGE_THRESHOLDS: Record<string, number> = { SpO: 95 };

function el(doc: Document, tag: string, className?: string, text?: string): HTMLElement {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderBadges(container: HTMLElement, state: ViewState): void {
  container.textContent = "";
  if (!state.model || !state.snapshot) return;
  const doc = container.ownerDocument;
  for (const chart of state.model.charts) {
    if (chart.manager) continue;
    const badge = el(doc, "div", "badge");
    badge.dataset.chart = chart.name;
    badge.append(el(doc, "span", "badge-name", chart.name));
    const stateName = state.snapshot.active[chart.name] ?? "?";
    const value = el(doc, "span", "badge-state", stateName);
    value.dataset.state = stateName;
    badge.append(value);
    container.append(badge);
  }
}

export function renderGauges(container: HTMLElement, state: ViewState): void {
  container.textContent = "";
  if (!state.model || !state.snapshot) return;
  const doc = container.ownerDocument;
  for (const [name, info] of Object.entries(state.model.vars)) {
    const value = state.snapshot.vars[name];
    const gauge = el(doc, "div", "gauge");
    gauge.dataset.var = name;
    gauge.append(el(doc, "span", "gauge-name", name));
    const bar = el(doc, "div", "gauge-bar");
    const span = Math.max(1, info.max - info.min);
    const fill = el(doc, "div", "gauge-fill");
    fill.style.width = `${(100 * (value - info.min)) / span}%`;
    bar.append(fill);
    const threshold = GAUGE_THRESHOLDS[name];
    if (threshold !== undefined && threshold >= info.min && threshold <= info.max) {
      const line = el(doc, "div", "gauge-threshold");
      line.dataset.threshold = String(threshold);
      line.style.left = `${(100 * (threshold - info.min)) / span}%`;
      bar.append(line);
    }
    gauge.append(bar);
    gauge.append(el(doc, "span", "gauge-value", String(value)));
    container.append(gauge);
  }
}

export function renderEventButtons(
  container: HTMLElement,
  state: ViewState,
  onRaise: (event: string) => void,
): void {
  container.textContent = "";
  if (!state.model) return;
  const doc = container.ownerDocument;
  for (const event of state.model.in_events) {
    const button = el(doc, "button", "event-button", event) as HTMLButtonElement;
    button.dataset.event = event;
    // No double injections: buttons stay disabled between request and response.
    button.disabled = state.busy || state.sessionId === null;
    button.addEventListener("click", () => onRaise(event));
    container.append(button);
  }
}

export function renderInspector(container: HTMLElement, state: ViewState): void {
  container.textContent = "";
  const doc = container.ownerDocument;
  const details = el(doc, "details", "inspector") as HTMLDetailsElement;
  details.id = "inspector-details";
  const patterned = (state.model?.patterns.length ?? 0) > 0;
  details.open = patterned;
  details.append(el(doc, "summary", undefined, "Pattern internals (event queue, execution token)"));
  if (!state.snapshot) {
    details.append(el(doc, "p", "inspector-empty", "No session."));
    container.append(details);
    return;
  }
  if (!patterned) {
    details.append(
      el(doc, "p", "inspector-empty", "No pattern applied: events clear at cycle end and priority order is fixed."),
    );
  }
  const snap = state.snapshot;
  const queue = el(doc, "ul", "queue");
  queue.id = "queue-view";
  for (const entry of snap.queue) {
    queue.append(el(doc, "li", "queue-entry", `${entry.event} from ${entry.sender}`));
  }
  if (snap.queue.length === 0) {
    queue.append(el(doc, "li", "queue-empty", "(queue empty)"));
  }
  details.append(queue);
  const token = el(doc, "p", "token-view");
  token.id = "token-view";
  const orderText = state.model?.order ? ` O=[${state.model.order.join(",")}]` : "";
  token.textContent =
    snap.token === null
      ? "token: n/a"
      : `token: ${snap.token}${orderText} cycle: ${snap.cycle_counter} normal: ${snap.normal_exe}`;
  details.append(token);
  const pending = el(doc, "p", "pending-view", `pending: [${snap.pending.join(",")}]`);
  pending.id = "pending-view";
  details.append(pending);
  container.append(details);
}

export function renderTimeline(container: HTMLElement, state: ViewState): void {
  container.textContent = "";
  const doc = container.ownerDocument;
  for (const entry of state.timeline.slice(-60)) {
    const row = el(doc, "div", "timeline-step");
    row.dataset.step = String(entry.step);
    row.append(el(doc, "span", "timeline-label", `t=${entry.step}`));
    for (const cycle of entry.cycles) {
      const kind = cycle.kind === "normal" ? "normal" : "logic";
      const cell = el(doc, "span", `timeline-cycle ${kind}`);
      cell.dataset.kind = cycle.kind;
      const fired = Object.entries(cycle.fired)
        .filter(([chart]) => chart !== "Manager")
        .map(([chart, move]) => `${chart}:${move}`)
        .join(" ");
      cell.textContent = fired || "·";
      cell.title = cycle.kind;
      row.append(cell);
    }
    container.append(row);
  }
}

export function renderDiagnostics(container: HTMLElement, state: ViewState): void {
  container.textContent = "";
  const doc = container.ownerDocument;
  for (const message of state.errors) {
    container.append(el(doc, "div", "diagnostic", message));
  }
}

export function renderStatus(container: HTMLElement, state: ViewState): void {
  if (!state.sessionId || !state.snapshot) {
    container.textContent = "no session";
    return;
  }
  container.textContent = `session ${state.sessionId} clock=${state.snapshot.clock}${state.busy ? " …" : ""}`;
}
