// Thin typed client for the governance API. Failures throw ApiFailure with
// the machine-readable error code the server sent.

import type {
  ApiError,
  BadgesResponse,
  CouplingResponse,
  DeveloperResponse,
  LeaderboardResponse,
  NudgesResponse,
  Quest,
  QuestForm,
  QuestsResponse,
} from "./types.js";

export class ApiFailure extends Error {
  constructor(
    public status: number,
    public code: string,
    detail?: string,
  ) {
    super(detail ?? code);
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private token: string | null = null,
  ) {}

  private headers(): Record<string, string> {
    const headers: Record<string, string> = {
      "Content-Type": "application/json",
    };
    if (this.token) headers["X-Auth-Token"] = this.token;
    return headers;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`, {
      ...init,
      headers: this.headers(),
    });
    if (!response.ok) {
      let code = `HTTP${response.status}`;
      let detail: string | undefined;
      try {
        const body = (await response.json()) as ApiError;
        code = body.error ?? code;
        detail = body.detail;
      } catch {
        // non-JSON error body; keep the status code
      }
      throw new ApiFailure(response.status, code, detail);
    }
    return (await response.json()) as T;
  }

  leaderboard(scope: string): Promise<LeaderboardResponse> {
    return this.request(`/api/leaderboard?scope=${encodeURIComponent(scope)}`);
  }

  coupling(window?: number): Promise<CouplingResponse> {
    const suffix = window === undefined ? "" : `?window=${window}`;
    return this.request(`/api/coupling${suffix}`);
  }

  quests(): Promise<QuestsResponse> {
    return this.request("/api/quests");
  }

  nudges(developer?: string): Promise<NudgesResponse> {
    const suffix = developer ? `?developer=${encodeURIComponent(developer)}` : "";
    return this.request(`/api/nudges${suffix}`);
  }

  badges(developer?: string): Promise<BadgesResponse> {
    const suffix = developer ? `?developer=${encodeURIComponent(developer)}` : "";
    return this.request(`/api/badges${suffix}`);
  }

  developer(id: string): Promise<DeveloperResponse> {
    return this.request(`/api/developers/${encodeURIComponent(id)}`);
  }

  createQuest(form: QuestForm): Promise<{ window: number; quest: Quest }> {
    return this.request("/api/quests", {
      method: "POST",
      body: JSON.stringify(form),
    });
  }

  acceptQuest(id: number, developer: string): Promise<{ quest: Quest }> {
    return this.request(`/api/quests/${id}/accept`, {
      method: "POST",
      body: JSON.stringify({ developer }),
    });
  }

  setOptIn(developer: string, optIn: boolean): Promise<unknown> {
    return this.request("/api/optin", {
      method: "POST",
      body: JSON.stringify({ developer, opt_in: optIn }),
    });
  }

  ackNudge(id: number): Promise<unknown> {
    return this.request(`/api/nudges/${id}/ack`, { method: "POST" });
  }
}
