// Gateway client. Talks only to the server's HTTP/WebSocket endpoints;
// transport functions are injected so tests can run under node and
// record traffic.

export type Question = {
  id: string;
  type: "single" | "multi";
  points: number;
  text: string;
  choices: { id: string; text: string }[];
};

export type SessionSummary = {
  session_id: string;
  name: string;
  subject: string;
  state: string;
  answered_count: number;
  percent?: string;
};

export type MonitorEvent = {
  type: "EVENT";
  kind: "registered" | "started" | "answered" | "finished";
  session_id: string;
  name: string;
  subject: string;
  answered_count: number;
  percent?: string;
};

export type TestResult = { points: number; max_points: number; percent: string };

export class GatewayError extends Error {
  constructor(
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "GatewayError";
  }
}

type FetchResponse = { ok: boolean; status: number; json(): Promise<unknown> };
export type FetchLike = (url: string, init?: unknown) => Promise<FetchResponse>;

// deliberately loose handler types: browser WebSocket and the node
// "ws" package both satisfy this shape
export interface WsLike {
  /* eslint-disable @typescript-eslint/no-explicit-any */
  onopen: ((event: any) => void) | null;
  onmessage: ((event: any) => void) | null;
  onclose: ((event: any) => void) | null;
  onerror: ((event: any) => void) | null;
  /* eslint-enable @typescript-eslint/no-explicit-any */
  close(): void;
}
export type WsFactory = (url: string) => WsLike;

export class GatewayClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: FetchLike,
    private readonly wsFactory: WsFactory,
  ) {}

  private async post(path: string, body: unknown): Promise<Record<string, unknown>> {
    let response: FetchResponse;
    try {
      response = await this.fetchFn(this.baseUrl + path, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      });
    } catch (error) {
      throw new GatewayError("E_UNREACHABLE", `cannot reach server: ${error}`);
    }
    const payload = (await response.json()) as Record<string, unknown>;
    if (!response.ok || payload.type === "ERROR") {
      throw new GatewayError(
        String(payload.code ?? "E_MALFORMED"),
        String(payload.message ?? `request failed (${response.status})`),
      );
    }
    return payload;
  }

  async register(name: string, yearOfStudy: number, subject: string) {
    const reply = await this.post("/api/register", {
      name,
      year_of_study: yearOfStudy,
      subject,
    });
    return { sessionId: String(reply.session_id), testId: String(reply.test_id) };
  }

  async start(sessionId: string) {
    const reply = await this.post("/api/start", { session_id: sessionId });
    return {
      testId: String(reply.test_id),
      questions: reply.questions as Question[],
    };
  }

  async answer(sessionId: string, questionId: string, selected: string[]) {
    await this.post("/api/answer", {
      session_id: sessionId,
      question_id: questionId,
      selected,
    });
  }

  async finish(sessionId: string): Promise<TestResult> {
    const reply = await this.post("/api/finish", { session_id: sessionId });
    return {
      points: Number(reply.points),
      max_points: Number(reply.max_points),
      percent: String(reply.percent),
    };
  }

  async sessions(auth: string): Promise<SessionSummary[]> {
    let response: FetchResponse;
    try {
      response = await this.fetchFn(this.baseUrl + "/api/sessions", {
        method: "GET",
        headers: { Authorization: auth },
      });
    } catch (error) {
      throw new GatewayError("E_UNREACHABLE", `cannot reach server: ${error}`);
    }
    const payload = (await response.json()) as Record<string, unknown>;
    if (!response.ok || payload.type === "ERROR") {
      throw new GatewayError(
        String(payload.code ?? "E_MALFORMED"),
        String(payload.message ?? "request failed"),
      );
    }
    return payload.sessions as SessionSummary[];
  }

  monitorSocket(auth: string): WsLike {
    const wsBase = this.baseUrl.replace(/^http/, "ws");
    return this.wsFactory(`${wsBase}/api/monitor?auth=${encodeURIComponent(auth)}`);
  }
}
