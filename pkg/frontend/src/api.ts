/** Typed client for the statepat sim-service (snapshot schema v1). */

export interface QueueEntry {
  event: string;
  sender: string;
}

export interface Snapshot {
  v: number;
  clock: number;
  active: Record<string, string>;
  vars: Record<string, number>;
  timers: Record<string, number>;
  queue: QueueEntry[];
  normal_exe: boolean;
  cycle_counter: number;
  token: number | null;
  pending: string[];
}

export interface ChartInfo {
  name: string;
  states: string[];
  initial: string;
  manager: boolean;
}

export interface VarInfo {
  min: number;
  max: number;
  initial: number;
}

export interface ModelInfo {
  name: string;
  charts: ChartInfo[];
  in_events: string[];
  internal_events: string[];
  vars: Record<string, VarInfo>;
  patterns: string[];
  order: string[] | null;
}

export interface CycleTrace {
  kind: string;
  fired: Record<string, string>;
  raised: [string, string][];
  var_deltas: Record<string, [number, number]>;
}

export interface SessionResponse {
  session_id: string;
  model: ModelInfo;
  snapshot: Snapshot;
}

export interface SessionDetail extends SessionResponse {
  history: { step: number; env: string[]; cycles: CycleTrace[] }[];
}

export interface StepResponse {
  snapshots: Snapshot[];
  cycle_traces: CycleTrace[][];
}

export class ServiceError extends Error {
  constructor(
    public status: number,
    public diagnostics: string[],
  ) {
    super(diagnostics.join("; ") || `service error ${status}`);
  }
}

async function parseError(resp: Response): Promise<never> {
  let diagnostics: string[] = [`HTTP ${resp.status}`];
  try {
    const body = await resp.json();
    const detail = body?.detail;
    if (detail?.diagnostics?.length) {
      diagnostics = detail.diagnostics;
    } else if (typeof detail?.error === "string") {
      diagnostics = [detail.error];
    }
  } catch {
    // keep the generic message
  }
  throw new ServiceError(resp.status, diagnostics);
}

export class ApiClient {
  constructor(
    private base = "",
    private fetchFn: typeof fetch = globalThis.fetch.bind(globalThis),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await this.fetchFn(this.base + path, {
      method,
      headers: body === undefined ? undefined : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!resp.ok) {
      await parseError(resp);
    }
    return (await resp.json()) as T;
  }

  createSession(modelText: string, pattern: string | null, order: number[] | null): Promise<SessionResponse> {
    return this.request("POST", "/sessions", { model_text: modelText, pattern, order });
  }

  getSession(id: string): Promise<SessionDetail> {
    return this.request("GET", `/sessions/${id}`);
  }

  injectEvent(id: string, event: string): Promise<{ pending: string[] }> {
    return this.request("POST", `/sessions/${id}/events`, { event });
  }

  step(id: string, count: number): Promise<StepResponse> {
    return this.request("POST", `/sessions/${id}/step`, { count });
  }
}
