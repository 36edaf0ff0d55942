// Typed client for the knowledge-engine HTTP API.

export type Shape = "SQA" | "CondCons" | "DoubleCondCons";

export interface TeachRequest {
  shape: Shape;
  s?: string;
  q?: string;
  a: string;
  conds?: string[];
}

export interface TeachResponse {
  outcome: "Created" | "MergedInto" | "Rejected";
  rule?: number;
  reason?: string;
}

export interface Answer {
  text: string;
  article: string;
}

export interface Condition {
  slots: string[];
  combos: string[][];
}

export interface RuleSummary {
  id: number;
  shape: Shape;
  left: string[];
  right: string;
  slots: Record<string, string[]>;
  conditions: Condition[];
  samples: number;
}

export interface Proposal {
  id: string;
  slots: string[];
  shared: string[];
}

export interface ArticleSummary {
  id: string;
  sentences: string[];
}

export interface Stats {
  nodes_by_level: number[];
  total_nodes: number;
  arena_bytes: number;
  rules: number;
  articles: number;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function request<T>(base: string, method: string, path: string,
                          body?: unknown): Promise<T> {
  const init: RequestInit = { method };
  if (body !== undefined) {
    init.headers = { "Content-Type": "application/json" };
    init.body = JSON.stringify(body);
  }
  const resp = await fetch(base + path, init);
  const data = await resp.json().catch(() => ({}));
  if (!resp.ok && resp.status !== 422) {
    throw new ApiError(resp.status,
                       (data as { error?: string }).error ??
                       `HTTP ${resp.status}`);
  }
  return data as T;
}

export class Client {
  constructor(public base: string) {}

  teach(req: TeachRequest): Promise<TeachResponse> {
    return request(this.base, "POST", "/teach", req);
  }

  unteach(req: TeachRequest): Promise<{ outcome: string }> {
    return request(this.base, "POST", "/unteach", req);
  }

  answer(question: string): Promise<{ answers: Answer[] }> {
    const q = encodeURIComponent(question);
    return request(this.base, "GET", `/answer?q=${q}`);
  }

  saveArticle(id: string, text: string): Promise<{ id: string;
                                                   sentences: number }> {
    return request(this.base, "POST", "/articles", { id, text });
  }

  articles(): Promise<{ articles: ArticleSummary[] }> {
    return request(this.base, "GET", "/articles");
  }

  rules(): Promise<{ rules: RuleSummary[] }> {
    return request(this.base, "GET", "/rules");
  }

  proposals(): Promise<{ proposals: Proposal[] }> {
    return request(this.base, "GET", "/proposals");
  }

  reviewProposal(id: string, accept: boolean): Promise<{ outcome: string }> {
    return request(this.base, "POST", `/proposals/${id}`, { accept });
  }

  stats(): Promise<Stats> {
    return request(this.base, "GET", "/stats");
  }
}
