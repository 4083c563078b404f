// Documented API fixture responses used by the contract tests. The
// leaderboard and coupling payloads are exactly what the server returns
// for the canonical two-developer desk fixture.

import type {
  CouplingResponse,
  LeaderboardResponse,
  NudgesResponse,
  QuestsResponse,
} from "../src/types.js";

export const s0Leaderboard: LeaderboardResponse = {
  window: 0,
  scope: "team:t1",
  entries: [
    { rank: 1, developer: "d2", points: 100.0 },
    { rank: 2, developer: "d1", points: 69.0 },
  ],
};

export const s0Coupling: CouplingResponse = {
  window: 1,
  services: ["A", "B"],
  pairs: [{ a: "A", b: "B", value: 0.447, previous: 0.5 }],
  oc_project: 0.447,
};

export const emptyQuests: QuestsResponse = { window: 0, quests: [] };

export const mixedQuests: QuestsResponse = {
  window: 4,
  quests: [
    {
      id: 1,
      title: "Decouple carts and orders",
      scope_services: ["carts", "orders"],
      scope_developers: [],
      metric: "oc_pair",
      comparator: "<=",
      target: 0.3,
      target_kind: "absolute",
      baseline: null,
      deadline: 8,
      created_at: 1,
      status: "active",
    },
    {
      id: 2,
      title: "Stabilize payment ownership",
      scope_services: ["payment"],
      scope_developers: [],
      metric: "ownership_stability",
      comparator: ">=",
      target: 0.9,
      target_kind: "absolute",
      baseline: null,
      deadline: 3,
      created_at: 0,
      status: "completed",
    },
    {
      id: 3,
      title: "Cut front-end cross work",
      scope_services: [],
      scope_developers: ["d1"],
      metric: "cscr",
      comparator: "<=",
      target: 0.1,
      target_kind: "absolute",
      baseline: null,
      deadline: 2,
      created_at: 0,
      status: "failed",
    },
  ],
};

export const nudges: NudgesResponse = {
  window: 5,
  nudges: [
    {
      id: 1,
      developer: "d1",
      window: 3,
      trigger: "RefocusSwitching",
      message: "Cross-service switching is running above your baseline.",
      acknowledged: true,
    },
    {
      id: 2,
      developer: "d1",
      window: 5,
      trigger: "CoordinateViolations",
      message: "3 unjustified cross-service commits this window.",
      acknowledged: false,
    },
  ],
};
