// Professor dashboard model: a live table of session summaries, fed by
// one snapshot and then EVENT pushes. Rows change only through those
// two paths and never hold answer contents.

import {
  GatewayClient,
  GatewayError,
  MonitorEvent,
  SessionSummary,
  WsLike,
} from "./api.js";

export type MonitorStatus =
  | "idle"
  | "connecting"
  | "live"
  | "auth-failed"
  | "closed";

const EVENT_STATE: Record<MonitorEvent["kind"], string> = {
  registered: "registered",
  started: "in_progress",
  answered: "in_progress",
  finished: "completed",
};

export class MonitorModel {
  private rows = new Map<string, SessionSummary>();

  ordered(): SessionSummary[] {
    return [...this.rows.values()].sort((a, b) =>
      a.session_id < b.session_id ? -1 : a.session_id > b.session_id ? 1 : 0,
    );
  }

  get(sessionId: string): SessionSummary | undefined {
    return this.rows.get(sessionId);
  }

  get size(): number {
    return this.rows.size;
  }

  applySessions(sessions: SessionSummary[]) {
    for (const summary of sessions) {
      this.rows.set(summary.session_id, { ...summary });
    }
  }

  applyEvent(event: MonitorEvent) {
    const row = this.rows.get(event.session_id) ?? {
      session_id: event.session_id,
      name: event.name,
      subject: event.subject,
      state: "registered",
      answered_count: 0,
    };
    row.name = event.name;
    row.subject = event.subject;
    row.state = EVENT_STATE[event.kind];
    row.answered_count = event.answered_count;
    if (event.kind === "finished" && event.percent !== undefined) {
      row.percent = event.percent; // displayed verbatim, never recomputed
    }
    this.rows.set(event.session_id, row);
  }
}

export class MonitorConnection {
  readonly model = new MonitorModel();
  status: MonitorStatus = "idle";
  lastError = "";
  private socket: WsLike | null = null;
  onchange: () => void = () => {};

  constructor(private readonly api: GatewayClient) {}

  private changed() {
    this.onchange();
  }

  // snapshot first, then subscribe; the socket re-sends a snapshot on
  // connect so nothing can fall between the two
  async connect(userId: string, password: string) {
    const auth = `${userId}:${password}`;
    this.status = "connecting";
    this.changed();
    try {
      const sessions = await this.api.sessions(auth);
      this.model.applySessions(sessions);
    } catch (error) {
      this.status =
        error instanceof GatewayError && error.code === "E_AUTH"
          ? "auth-failed"
          : "closed";
      this.lastError = error instanceof Error ? error.message : String(error);
      this.changed();
      throw error;
    }
    const socket = this.api.monitorSocket(auth);
    this.socket = socket;
    socket.onmessage = (event) => this.handleFrame(String(event.data));
    socket.onopen = () => {
      this.status = "live";
      this.changed();
    };
    socket.onclose = () => {
      if (this.status !== "auth-failed") {
        this.status = "closed";
      }
      this.changed();
    };
    socket.onerror = socket.onclose;
    this.changed();
  }

  private handleFrame(raw: string) {
    let frame: Record<string, unknown>;
    try {
      frame = JSON.parse(raw) as Record<string, unknown>;
    } catch {
      return;
    }
    if (frame.type === "SESSIONS") {
      this.model.applySessions(frame.sessions as SessionSummary[]);
    } else if (frame.type === "EVENT") {
      this.model.applyEvent(frame as unknown as MonitorEvent);
    }
    this.changed();
  }

  disconnect() {
    this.socket?.close();
    this.socket = null;
    this.status = "closed";
    this.changed();
  }
}
