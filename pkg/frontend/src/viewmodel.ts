// Pure builders turning API responses into what the screens render.
// Values pass through verbatim; only display strings are derived here.

import { formatMetric, formatPoints, Trend, trendOf } from "./format.js";
import type {
  CouplingResponse,
  LeaderboardResponse,
  Nudge,
  NudgesResponse,
  Quest,
  QuestsResponse,
} from "./types.js";

export interface LeaderboardRow {
  rank: number;
  developer: string;
  points: number;
  display: string;
}

export function buildLeaderboardRows(
  response: LeaderboardResponse,
): LeaderboardRow[] {
  return response.entries.map((entry) => ({
    rank: entry.rank,
    developer: entry.developer,
    points: entry.points,
    display: formatPoints(entry.points),
  }));
}

export interface QuestBoard {
  active: Quest[];
  completed: Quest[];
  failed: Quest[];
}

export function buildQuestBoard(response: QuestsResponse): QuestBoard {
  const lanes: QuestBoard = { active: [], completed: [], failed: [] };
  for (const quest of response.quests) {
    lanes[quest.status].push(quest);
  }
  return lanes;
}

export interface NudgeInbox {
  unread: Nudge[];
  acknowledged: Nudge[];
}

export function buildNudgeInbox(response: NudgesResponse): NudgeInbox {
  const inbox: NudgeInbox = { unread: [], acknowledged: [] };
  for (const nudge of response.nudges) {
    (nudge.acknowledged ? inbox.acknowledged : inbox.unread).push(nudge);
  }
  // newest first within each lane
  inbox.unread.sort((x, y) => y.window - x.window);
  inbox.acknowledged.sort((x, y) => y.window - x.window);
  return inbox;
}

export interface HeatmapCell {
  a: string;
  b: string;
  value: number;
  display: string;
  trend: Trend;
}

export function buildCouplingCells(response: CouplingResponse): HeatmapCell[] {
  return response.pairs.map((pair) => ({
    a: pair.a,
    b: pair.b,
    value: pair.value,
    display: formatMetric(pair.value),
    trend: trendOf(pair.value, pair.previous),
  }));
}

export interface BannerState {
  stale: boolean;
  lastWindow: number | null;
}

/** Track API reachability; on failure the UI keeps the last good window. */
export function nextBanner(
  previous: BannerState,
  fetched: number | null,
): BannerState {
  if (fetched === null) {
    return { stale: true, lastWindow: previous.lastWindow };
  }
  return { stale: false, lastWindow: fetched };
}

export const INITIAL_BANNER: BannerState = { stale: false, lastWindow: null };
