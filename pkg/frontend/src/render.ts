// HTML renderers for the four screens. Pure string builders so they are
// testable without a DOM; app.ts injects the results.

import { TREND_ARROWS } from "./format.js";
import type { FieldError } from "./validate.js";
import type {
  BannerState,
  HeatmapCell,
  LeaderboardRow,
  NudgeInbox,
  QuestBoard,
} from "./viewmodel.js";
import type { Badge, Quest } from "./types.js";

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderBanner(banner: BannerState): string {
  if (!banner.stale) return "";
  const window = banner.lastWindow === null ? "none" : banner.lastWindow;
  return (
    `<div class="banner stale" role="alert">API unreachable; showing stale ` +
    `data from window ${window}.</div>`
  );
}

export function renderLeaderboard(
  rows: LeaderboardRow[],
  scope: string,
  globalVisible: boolean,
): string {
  const tabs =
    `<nav class="scope-tabs"><button data-scope="${esc(scope)}" class="on">` +
    `${esc(scope)}</button>` +
    (globalVisible ? `<button data-scope="global">global</button>` : "") +
    `</nav>`;
  if (rows.length === 0) {
    return `${tabs}<p class="empty">No scored developers yet.</p>`;
  }
  const body = rows
    .map(
      (row) =>
        `<tr><td>${row.rank}</td><td>${esc(row.developer)}</td>` +
        `<td class="num">${row.display}</td></tr>`,
    )
    .join("");
  return (
    `${tabs}<table class="leaderboard"><thead><tr><th>#</th><th>developer</th>` +
    `<th>points</th></tr></thead><tbody>${body}</tbody></table>`
  );
}

export function renderBadges(badges: Badge[]): string {
  if (badges.length === 0) return `<p class="empty">No badges awarded yet.</p>`;
  const items = badges
    .map(
      (badge) =>
        `<li class="badge badge-${esc(badge.kind)}">${esc(badge.kind)} — ` +
        `${esc(badge.developer)} (window ${badge.awarded_at})</li>`,
    )
    .join("");
  return `<ul class="badges">${items}</ul>`;
}

function questCard(quest: Quest): string {
  const scope = quest.scope_services.length
    ? quest.scope_services.join(", ")
    : quest.scope_developers.join(", ");
  return (
    `<article class="quest quest-${quest.status}" data-quest="${quest.id}">` +
    `<h3>${esc(quest.title)}</h3>` +
    `<p>${esc(quest.metric)} ${esc(quest.comparator)} ${quest.target}` +
    ` on ${esc(scope)} by window ${quest.deadline}</p>` +
    (quest.status === "active"
      ? `<button class="accept" data-quest="${quest.id}">accept</button>`
      : "") +
    `</article>`
  );
}

export function renderQuestBoard(board: QuestBoard): string {
  const lanes = (["active", "completed", "failed"] as const)
    .map((lane) => {
      const cards = board[lane].map(questCard).join("");
      return `<section class="lane lane-${lane}"><h2>${lane}</h2>${cards}</section>`;
    })
    .join("");
  const empty =
    board.active.length + board.completed.length + board.failed.length === 0;
  const prompt = empty
    ? `<p class="empty">No quests yet. <button id="create-quest">create quest` +
      `</button></p>`
    : "";
  return `${prompt}<div class="quest-board">${lanes}</div>`;
}

export function renderQuestFormErrors(errors: FieldError[]): string {
  if (errors.length === 0) return "";
  const items = errors
    .map(
      (e) =>
        `<li class="field-error" data-field="${esc(e.field)}">` +
        `<strong>${esc(e.code)}</strong>: ${esc(e.message)}</li>`,
    )
    .join("");
  return `<ul class="form-errors">${items}</ul>`;
}

export function renderNudges(inbox: NudgeInbox): string {
  if (inbox.unread.length + inbox.acknowledged.length === 0) {
    return `<p class="empty">No nudges. Boundaries look healthy.</p>`;
  }
  const item = (n: { id: number; message: string; window: number }, cls: string) =>
    `<li class="nudge ${cls}" data-nudge="${n.id}">` +
    `<span class="when">w${n.window}</span> ${esc(n.message)}` +
    (cls === "unread"
      ? ` <button class="ack" data-nudge="${n.id}">acknowledge</button>`
      : "") +
    `</li>`;
  return (
    `<ul class="nudges">` +
    inbox.unread.map((n) => item(n, "unread")).join("") +
    inbox.acknowledged.map((n) => item(n, "acked")).join("") +
    `</ul>`
  );
}

export function renderCouplingHeatmap(
  cells: HeatmapCell[],
  services: string[],
): string {
  if (cells.length === 0) {
    return `<p class="empty">No coupling measured in this window.</p>`;
  }
  const byPair = new Map(cells.map((c) => [`${c.a}|${c.b}`, c]));
  const header =
    `<tr><th></th>` + services.map((s) => `<th>${esc(s)}</th>`).join("") + `</tr>`;
  const rows = services
    .map((rowService) => {
      const tds = services
        .map((colService) => {
          if (rowService === colService) return `<td class="diag"></td>`;
          const key =
            rowService < colService
              ? `${rowService}|${colService}`
              : `${colService}|${rowService}`;
          const cell = byPair.get(key);
          if (!cell) return `<td class="na"></td>`;
          const heat = Math.min(9, Math.floor(cell.value * 10));
          return (
            `<td class="cell heat-${heat}" title="${esc(cell.a)}–${esc(cell.b)}">` +
            `${cell.display}<span class="trend trend-${cell.trend}">` +
            `${TREND_ARROWS[cell.trend]}</span></td>`
          );
        })
        .join("");
      return `<tr><th>${esc(rowService)}</th>${tds}</tr>`;
    })
    .join("");
  return `<table class="heatmap">${header}${rows}</table>`;
}
