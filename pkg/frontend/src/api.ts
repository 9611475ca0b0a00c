/** Typed client for the session HTTP API. All state lives on the server. */

export interface SyntheticSpec {
  depth?: number;
  branching?: number;
  encounters_per_leaf?: number;
  dimension?: number;
  view_noise_sigma?: number;
  seed?: number;
}

export interface CreateSessionRequest {
  synthetic?: SyntheticSpec;
  embeddings?: string;
  ordering_seed?: number;
  tail_size?: number;
}

export interface CreateSessionResponse {
  session_id: string;
  queue_length: number;
}

export interface QueryEvent {
  type: "query";
  query_id: number;
  kind: "genus" | "same-object" | "shares-genus-below";
  prompt: string;
  encounter_id: string;
  visual_objects: number[][];
  node: number;
  under: number | null;
  iteration: number;
}

export interface PlacementEvent {
  type: "placement";
  iteration: number;
  encounter_id: string;
  action: string;
  placed_node: number;
  predicted_node: number;
  queries_asked: number;
  predict_cost: number;
  naive_cost: number;
  queue_remaining: number;
}

export interface DoneEvent {
  type: "done";
  iterations: number;
}

export interface PendingEvent {
  type: "pending";
}

export type SessionEvent = QueryEvent | PlacementEvent | DoneEvent | PendingEvent;

export interface HierarchyNode {
  id: number;
  parent: number | null;
  children: number[];
  encounters: string[];
  annotation: string | null;
}

export interface HierarchySnapshot {
  root: number;
  nodes: HierarchyNode[];
}

export interface CostRow {
  iteration: number;
  predict_genus: number;
  naive: number;
}

export interface Metrics {
  completed: number;
  total: number;
  costs: CostRow[];
}

/** The pending query changed under us (already answered or superseded). */
export class StaleQueryError extends Error {}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly fetchImpl: FetchLike;
  private readonly base: string;

  constructor(fetchImpl?: FetchLike, base = "") {
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
    this.base = base;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.base + path, init);
    if (!response.ok) {
      let message = `request failed with status ${response.status}`;
      try {
        const body = (await response.json()) as { error?: string };
        if (body && body.error) message = body.error;
      } catch {
        // keep the status message
      }
      if (response.status === 409) throw new StaleQueryError(message);
      throw new Error(message);
    }
    return (await response.json()) as T;
  }

  createSession(body: CreateSessionRequest): Promise<CreateSessionResponse> {
    return this.request("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  nextEvent(sessionId: string, timeoutSeconds = 0.4): Promise<SessionEvent> {
    return this.request(`/sessions/${sessionId}/query?timeout=${timeoutSeconds}`);
  }

  postAnswer(sessionId: string, queryId: number, answer: boolean): Promise<unknown> {
    return this.request(`/sessions/${sessionId}/answer`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ query_id: queryId, answer }),
    });
  }

  getHierarchy(sessionId: string): Promise<HierarchySnapshot> {
    return this.request(`/sessions/${sessionId}/hierarchy`);
  }

  getMetrics(sessionId: string): Promise<Metrics> {
    return this.request(`/sessions/${sessionId}/metrics`);
  }
}
