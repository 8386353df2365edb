// Thin typed client over the service contract. The fetch function is
// injectable so tests can intercept every request.

import type {
  ModelDocument,
  QuotientDocument,
  RecommendResponse,
  SessionState,
  StepResponse,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceUnavailable extends Error {}

export class ApiError extends Error {
  constructor(readonly status: number, readonly code: string, message: string) {
    super(message);
  }
}

async function parse<T>(response: Response): Promise<T> {
  const body = await response.json();
  if (!response.ok) {
    const code = body?.error?.code ?? "unknown";
    const message = body?.error?.message ?? response.statusText;
    throw new ApiError(response.status, code, message);
  }
  return body as T;
}

export class ServiceClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init)
  ) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  private post(path: string, body?: unknown): Promise<Response> {
    return this.fetchFn(this.url(path), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: body === undefined ? "{}" : JSON.stringify(body),
    });
  }

  async model(): Promise<ModelDocument> {
    const body = await parse<{ version: number; model: ModelDocument }>(
      await this.fetchFn(this.url("/model"))
    );
    return body.model;
  }

  async quotient(): Promise<QuotientDocument> {
    const body = await parse<{ version: number; quotient: QuotientDocument }>(
      await this.fetchFn(this.url("/quotient"))
    );
    return body.quotient;
  }

  async createSession(policy: string, seed: number): Promise<SessionState> {
    const body = await parse<{ version: number; session: SessionState }>(
      await this.post("/session", { policy, seed })
    );
    return body.session;
  }

  async session(id: string): Promise<SessionState> {
    const body = await parse<{ version: number; session: SessionState }>(
      await this.fetchFn(this.url(`/session/${id}`))
    );
    return body.session;
  }

  async step(
    id: string,
    cocktail: string[],
    dryRun = false
  ): Promise<StepResponse> {
    return parse<StepResponse>(
      await this.post(`/session/${id}/step`, {
        cocktail,
        dry_run: dryRun,
      })
    );
  }

  async recommend(id: string): Promise<RecommendResponse> {
    return parse<RecommendResponse>(
      await this.fetchFn(this.url(`/session/${id}/recommend`))
    );
  }

  async reset(id: string): Promise<SessionState> {
    const body = await parse<{ version: number; session: SessionState }>(
      await this.post(`/session/${id}/reset`)
    );
    return body.session;
  }
}
