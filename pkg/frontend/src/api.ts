// Typed client for the chat service HTTP API. One request may be in flight
// per session: repeated sends while a turn is pending return the same
// promise, so a double-click can never append two turns.

export const ACT_NAMES = ["CM.S", "CM.Q", "CM.A", "CS.S", "CS.Q", "CS.A", "O"] as const;
export type ActName = (typeof ACT_NAMES)[number];

export interface BotTurn {
  text: string;
  act: ActName;
  act_probs: number[];
}

export interface Candidate {
  act: ActName;
  text: string;
  prob: number;
}

export interface TurnResponse {
  bot: BotTurn;
  candidates: Candidate[];
  terminated: boolean;
  cause?: string | null;
}

export interface OpenSessionResponse extends TurnResponse {
  session_id: string;
}

export interface TranscriptTurn {
  speaker: "bot" | "user";
  text: string;
  act: ActName;
  act_source: "model" | "override" | "classifier";
}

export interface Transcript {
  session_id: string;
  turns: TranscriptTurn[];
  terminated: boolean;
  cause: string | null;
}

export interface ActInfo {
  name: ActName;
  definition: string;
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function asJson<T>(resp: Response): Promise<T> {
  const body = await resp.text();
  let parsed: unknown = null;
  try {
    parsed = body ? JSON.parse(body) : null;
  } catch {
    throw new ApiError(resp.status, `malformed response (${resp.status})`);
  }
  if (!resp.ok) {
    const message =
      parsed && typeof parsed === "object" && "error" in parsed
        ? String((parsed as { error: unknown }).error)
        : `request failed (${resp.status})`;
    throw new ApiError(resp.status, message);
  }
  return parsed as T;
}

export class ChatClient {
  private pending = new Map<string, Promise<TurnResponse>>();
  private turnCounter = 0;

  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  async getActs(): Promise<ActInfo[]> {
    return asJson(await this.fetchImpl(`${this.baseUrl}/api/acts`));
  }

  async createSession(): Promise<OpenSessionResponse> {
    const resp = await this.fetchImpl(`${this.baseUrl}/api/sessions`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: "{}",
    });
    return asJson(resp);
  }

  async getTranscript(sessionId: string): Promise<Transcript> {
    return asJson(await this.fetchImpl(`${this.baseUrl}/api/sessions/${sessionId}`));
  }

  async deleteSession(sessionId: string): Promise<void> {
    await asJson(
      await this.fetchImpl(`${this.baseUrl}/api/sessions/${sessionId}`, {
        method: "DELETE",
      }),
    );
  }

  /** True while a turn for this session is still waiting on the server. */
  isPending(sessionId: string): boolean {
    return this.pending.has(sessionId);
  }

  /**
   * Send the user's text and, when the user picked one, the act override.
   * A cleared override is omitted from the payload entirely. While the
   * request is in flight, further sends return the same promise.
   */
  sendTurn(sessionId: string, text: string, actOverride?: ActName | null): Promise<TurnResponse> {
    const inFlight = this.pending.get(sessionId);
    if (inFlight) return inFlight;

    const payload: Record<string, string> = {
      idempotency_key: `${sessionId}-${this.turnCounter++}`,
    };
    if (text.trim()) payload.text = text;
    if (actOverride) payload.act_override = actOverride;

    const request = this.fetchImpl(`${this.baseUrl}/api/sessions/${sessionId}/turns`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    })
      .then((resp) => asJson<TurnResponse>(resp))
      .finally(() => this.pending.delete(sessionId));
    this.pending.set(sessionId, request);
    return request;
  }
}
