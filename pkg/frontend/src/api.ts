/**
 * Typed client for the side-car HTTP API.
 *
 * The client moves JSON; it never derives analysis results. Every field
 * the panel displays comes straight out of these payloads.
 */

export interface AnchorRef {
  path: string;
  decl: string;
  line: number;
}

export interface VerdictSummary {
  tier: string;
  outcome: "pass" | "fail" | "not-applicable" | "budget-exceeded";
}

export interface SpecCardData {
  id: string;
  kind: string;
  status: "proposed" | "accepted" | "rejected" | "soft" | "retired";
  explanation: string;
  anchor: AnchorRef;
  missing_members: string[];
  verdict: VerdictSummary | null;
  fix_available: boolean;
  fix_summary: string | null;
}

export interface SpecListPayload {
  records: SpecCardData[];
}

export interface FixEdit {
  path: string;
  start: number;
  end: number;
  replacement: string;
}

export interface FixPlanPayload {
  record_id: string;
  summary: string;
  edits: FixEdit[];
  creates_files: Record<string, string>;
  diff: string;
}

export interface ApplyResultPayload {
  applied: boolean;
  record_id: string;
  verdict: VerdictSummary;
  changed_files: string[];
}

export interface EventsPayload {
  counter: number;
}

export type Decision = "accepted" | "rejected" | "soft";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    readonly reason: string,
  ) {
    super(`${status} ${code}: ${reason}`);
  }
}

async function parseError(resp: Response): Promise<ApiError> {
  let code = "error";
  let reason = resp.statusText;
  try {
    const body = (await resp.json()) as { error?: string; reason?: string };
    if (body.error) code = body.error;
    if (body.reason) reason = body.reason;
  } catch {
    // non-JSON error body: keep the status text
  }
  return new ApiError(resp.status, code, reason);
}

export class ApiClient {
  constructor(readonly base: string) {}

  private async get<T>(path: string): Promise<T> {
    const resp = await fetch(this.base + path);
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as T;
  }

  private async post<T>(path: string, body?: unknown): Promise<T> {
    const resp = await fetch(this.base + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body ?? {}),
    });
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as T;
  }

  specs(): Promise<SpecListPayload> {
    return this.get("/specs");
  }

  decide(id: string, status: Decision): Promise<unknown> {
    return this.post(`/specs/${id}/decision`, { status });
  }

  fix(id: string): Promise<FixPlanPayload> {
    return this.get(`/fixes/${id}`);
  }

  applyFix(id: string): Promise<ApplyResultPayload> {
    return this.post(`/fixes/${id}/apply`);
  }

  events(since: number): Promise<EventsPayload> {
    return this.get(`/events?since=${since}`);
  }
}
