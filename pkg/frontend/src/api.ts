/**
 * Client for the wallet control API.
 *
 * Deliberately narrow: list, fetch, approve, deny, history. Keys, claims,
 * and attribute values never transit these endpoints, so this client
 * cannot leak what it never sees.
 */

import { PendingRequestView, parseView, parseViewList } from "./model.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ThrottleError extends Error {
  constructor(detail: string) {
    super(detail);
    this.name = "ThrottleError";
  }
}

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
    this.name = "ApiError";
  }
}

interface ErrorBody {
  error?: string;
  detail?: string;
}

async function errorBody(response: Response): Promise<ErrorBody> {
  try {
    return (await response.json()) as ErrorBody;
  } catch {
    return {};
  }
}

function describe(body: ErrorBody, status: number): string {
  return body.detail ?? body.error ?? `http ${status}`;
}

export class WalletClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async get(path: string): Promise<unknown> {
    const response = await this.fetchImpl(this.baseUrl + path);
    if (!response.ok) {
      throw new ApiError(response.status, describe(await errorBody(response), response.status));
    }
    return response.json();
  }

  async pending(): Promise<PendingRequestView[]> {
    return parseViewList(await this.get("/v1/pending"));
  }

  async history(): Promise<PendingRequestView[]> {
    return parseViewList(await this.get("/v1/history"));
  }

  async act(id: string, decision: "approve" | "deny"): Promise<PendingRequestView> {
    const response = await this.fetchImpl(
      `${this.baseUrl}/v1/pending/${encodeURIComponent(id)}/${decision}`,
      { method: "POST" },
    );
    if (!response.ok) {
      const body = await errorBody(response);
      if (response.status === 409 && body.error === "throttle_exceeded") {
        throw new ThrottleError(describe(body, 409));
      }
      throw new ApiError(response.status, describe(body, response.status));
    }
    return parseView(await response.json());
  }
}
