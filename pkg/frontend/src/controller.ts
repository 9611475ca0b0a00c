/** Session state machine. Renders nothing; main.ts reacts to onChange. */

import {
  ApiClient,
  CreateSessionRequest,
  HierarchySnapshot,
  Metrics,
  PlacementEvent,
  QueryEvent,
  StaleQueryError,
} from "./api.js";

export interface TranscriptEntry {
  label: "query" | "answer" | "placement" | "info";
  detail: string;
}

export interface ControllerState {
  sessionId: string | null;
  queueLength: number;
  pending: QueryEvent | null;
  answering: boolean;
  staleNotice: string | null;
  finished: boolean;
  lastPlacement: PlacementEvent | null;
  snapshot: HierarchySnapshot | null;
  metrics: Metrics | null;
  transcript: TranscriptEntry[];
  error: string | null;
}

function initialState(): ControllerState {
  return {
    sessionId: null,
    queueLength: 0,
    pending: null,
    answering: false,
    staleNotice: null,
    finished: false,
    lastPlacement: null,
    snapshot: null,
    metrics: null,
    transcript: [],
    error: null,
  };
}

export class SessionController {
  readonly state: ControllerState = initialState();
  private polling = false;

  constructor(
    private readonly api: ApiClient,
    private readonly onChange: (state: ControllerState) => void = () => {}
  ) {}

  private emit(): void {
    this.onChange(this.state);
  }

  private log(label: TranscriptEntry["label"], detail: string): void {
    this.state.transcript.push({ label, detail });
  }

  async createSession(request: CreateSessionRequest): Promise<void> {
    const created = await this.api.createSession(request);
    Object.assign(this.state, initialState());
    this.state.sessionId = created.session_id;
    this.state.queueLength = created.queue_length;
    this.log("info", `session ${created.session_id}: ${created.queue_length} encounters queued`);
    await this.refreshViews();
    this.emit();
  }

  private async refreshViews(): Promise<void> {
    if (!this.state.sessionId) return;
    this.state.snapshot = await this.api.getHierarchy(this.state.sessionId);
    this.state.metrics = await this.api.getMetrics(this.state.sessionId);
  }

  /** One polling step; re-entrancy safe, cheap when nothing changed. */
  async poll(): Promise<void> {
    const { sessionId } = this.state;
    if (!sessionId || this.polling || this.state.finished || this.state.answering) return;
    this.polling = true;
    try {
      const event = await this.api.nextEvent(sessionId);
      if (event.type === "pending") return;
      if (event.type === "query") {
        if (this.state.pending?.query_id !== event.query_id) {
          this.state.pending = event;
          this.state.staleNotice = null;
          this.log("query", `#${event.query_id} [${event.kind}] ${event.prompt}`);
          this.emit();
        }
        return;
      }
      if (event.type === "placement") {
        this.state.lastPlacement = event;
        this.state.pending = null;
        this.log(
          "placement",
          `${event.encounter_id}: ${event.action} at node ${event.placed_node} ` +
            `(${event.queries_asked} queries, ${event.queue_remaining} left)`
        );
        await this.refreshViews();
        this.emit();
        return;
      }
      this.state.finished = true;
      this.state.pending = null;
      this.log("info", `session complete after ${event.iterations} placements`);
      await this.refreshViews();
      this.emit();
    } catch (error) {
      this.state.error = error instanceof Error ? error.message : String(error);
      this.emit();
    } finally {
      this.polling = false;
    }
  }

  async answer(value: boolean): Promise<void> {
    const { sessionId, pending } = this.state;
    if (!sessionId || !pending || this.state.answering) return;
    this.state.answering = true;
    this.emit();
    try {
      await this.api.postAnswer(sessionId, pending.query_id, value);
      this.log("answer", `#${pending.query_id} -> ${value ? "yes" : "no"}`);
      this.state.pending = null;
    } catch (error) {
      if (error instanceof StaleQueryError) {
        this.state.staleNotice = `that question expired (${error.message}); fetching the next one`;
        this.state.pending = null;
      } else {
        this.state.error = error instanceof Error ? error.message : String(error);
      }
    } finally {
      this.state.answering = false;
      this.emit();
    }
  }

  dismissStale(): void {
    this.state.staleNotice = null;
    this.emit();
  }
}
