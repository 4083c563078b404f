// API response shapes. Fields mirror the server JSON exactly; the UI never
// recomputes metric values, it only formats what these carry.

export interface LeaderboardEntry {
  rank: number;
  developer: string;
  points: number;
}

export interface LeaderboardResponse {
  window: number;
  scope: string;
  entries: LeaderboardEntry[];
}

export interface CouplingPair {
  a: string;
  b: string;
  value: number;
  previous: number | null;
}

export interface CouplingResponse {
  window: number;
  services: string[];
  pairs: CouplingPair[];
  oc_project: number;
}

export interface Quest {
  id: number;
  title: string;
  scope_services: string[];
  scope_developers: string[];
  metric: string;
  comparator: string;
  target: number;
  target_kind: string;
  baseline: number | null;
  deadline: number;
  created_at: number;
  status: "active" | "completed" | "failed";
}

export interface QuestsResponse {
  window: number;
  quests: Quest[];
}

export interface Nudge {
  id: number;
  developer: string;
  window: number;
  trigger: string;
  message: string;
  acknowledged: boolean;
}

export interface NudgesResponse {
  window: number;
  nudges: Nudge[];
}

export interface Badge {
  kind: string;
  developer: string;
  awarded_at: number;
}

export interface BadgesResponse {
  window: number;
  badges: Badge[];
}

export interface DeveloperResponse {
  window: number;
  developer: string;
  profile: {
    focus: number;
    cscr: number;
    switching_rate: number;
    primary: string;
    n_commits: number;
  } | null;
  scores: { window: number; points: number; penalty_applied: boolean }[];
  badges: { kind: string; awarded_at: number }[];
  team: string | null;
  opted_in: boolean;
}

export interface ApiError {
  error: string;
  detail?: string;
}

export interface QuestForm {
  title: string;
  metric: string;
  services: string[];
  developers: string[];
  comparator: string;
  target: number;
  target_kind: string;
  deadline: number;
}
