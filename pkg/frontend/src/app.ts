// Dashboard wiring: tab switching, periodic polling, quest form handling.
// All numbers on screen come from one API response each; nothing is
// recomputed client-side.

import { ApiClient, ApiFailure } from "./api.js";
import {
  INITIAL_BANNER,
  buildCouplingCells,
  buildLeaderboardRows,
  buildNudgeInbox,
  buildQuestBoard,
  nextBanner,
} from "./viewmodel.js";
import {
  renderBadges,
  renderBanner,
  renderCouplingHeatmap,
  renderLeaderboard,
  renderNudges,
  renderQuestBoard,
  renderQuestFormErrors,
} from "./render.js";
import { validateQuestForm } from "./validate.js";
import type { QuestForm } from "./types.js";

const POLL_MS = 15_000;
const SCREENS = ["leaderboard", "quests", "nudges", "coupling"] as const;
type Screen = (typeof SCREENS)[number];

interface Session {
  developer: string;
  team: string | null;
  optedIn: boolean;
}

const client = new ApiClient();
let banner = INITIAL_BANNER;
let screen: Screen = "leaderboard";
let session: Session = { developer: "", team: null, optedIn: false };
let currentWindow = -1;

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

async function loadSession(): Promise<void> {
  const developer = localStorage.getItem("ocgov.developer") ?? "";
  session = { developer, team: null, optedIn: false };
  if (!developer) return;
  try {
    const info = await client.developer(developer);
    session.team = info.team;
    session.optedIn = info.opted_in;
  } catch {
    // unknown developer: keep defaults, team scope falls back to global-less view
  }
}

async function refresh(): Promise<void> {
  try {
    switch (screen) {
      case "leaderboard": {
        const scope = session.team ? `team:${session.team}` : "global";
        const response = await client.leaderboard(scope);
        currentWindow = response.window;
        const rows = buildLeaderboardRows(response);
        el("screen").innerHTML = renderLeaderboard(
          rows,
          scope,
          session.optedIn,
        );
        const badges = await client.badges();
        el("extra").innerHTML = renderBadges(badges.badges);
        break;
      }
      case "quests": {
        const response = await client.quests();
        currentWindow = response.window;
        el("screen").innerHTML = renderQuestBoard(buildQuestBoard(response));
        el("extra").innerHTML = "";
        break;
      }
      case "nudges": {
        const response = await client.nudges(session.developer || undefined);
        currentWindow = response.window;
        el("screen").innerHTML = renderNudges(buildNudgeInbox(response));
        el("extra").innerHTML = "";
        break;
      }
      case "coupling": {
        const response = await client.coupling();
        currentWindow = response.window;
        el("screen").innerHTML = renderCouplingHeatmap(
          buildCouplingCells(response),
          response.services,
        );
        el("extra").innerHTML = "";
        break;
      }
    }
    banner = nextBanner(banner, currentWindow);
  } catch {
    banner = nextBanner(banner, null);
  }
  el("banner").innerHTML = renderBanner(banner);
  el("window-indicator").textContent =
    banner.lastWindow === null ? "" : `window ${banner.lastWindow}`;
}

function readQuestForm(): QuestForm {
  const value = (id: string) => (el(id) as HTMLInputElement).value;
  const list = (id: string) =>
    value(id)
      .split(",")
      .map((s) => s.trim())
      .filter(Boolean);
  return {
    title: value("quest-title"),
    metric: value("quest-metric"),
    services: list("quest-services"),
    developers: list("quest-developers"),
    comparator: value("quest-comparator"),
    target: Number(value("quest-target")),
    target_kind: value("quest-target-kind"),
    deadline: Number(value("quest-deadline")),
  };
}

async function submitQuest(event: Event): Promise<void> {
  event.preventDefault();
  const form = readQuestForm();
  const errors = validateQuestForm(form, currentWindow);
  if (errors.length > 0) {
    el("quest-errors").innerHTML = renderQuestFormErrors(errors);
    return;
  }
  try {
    await client.createQuest(form);
    el("quest-errors").innerHTML = "";
    (el("quest-form") as HTMLFormElement).reset();
    await refresh();
  } catch (failure) {
    if (failure instanceof ApiFailure) {
      el("quest-errors").innerHTML = renderQuestFormErrors([
        { field: "form", code: failure.code, message: failure.message },
      ]);
    } else {
      banner = nextBanner(banner, null);
      el("banner").innerHTML = renderBanner(banner);
    }
  }
}

async function onScreenClick(event: Event): Promise<void> {
  const target = event.target as HTMLElement;
  if (target.matches("button.ack")) {
    await client.ackNudge(Number(target.dataset.nudge));
    await refresh();
  } else if (target.matches("button.accept") && session.developer) {
    await client.acceptQuest(Number(target.dataset.quest), session.developer);
    await refresh();
  } else if (target.matches("button[data-scope]")) {
    const scope = target.dataset.scope ?? "global";
    const response = await client.leaderboard(scope);
    el("screen").innerHTML = renderLeaderboard(
      buildLeaderboardRows(response),
      scope,
      session.optedIn,
    );
  }
}

export async function start(): Promise<void> {
  await loadSession();
  for (const name of SCREENS) {
    el(`tab-${name}`).addEventListener("click", async () => {
      screen = name;
      document
        .querySelectorAll("nav.tabs button")
        .forEach((b) => b.classList.remove("on"));
      el(`tab-${name}`).classList.add("on");
      await refresh();
    });
  }
  el("quest-form").addEventListener("submit", submitQuest);
  el("screen").addEventListener("click", onScreenClick);
  el("optin-toggle").addEventListener("click", async () => {
    if (!session.developer) return;
    await client.setOptIn(session.developer, !session.optedIn);
    session.optedIn = !session.optedIn;
    await refresh();
  });
  await refresh();
  setInterval(refresh, POLL_MS);
}

if (typeof document !== "undefined" && document.getElementById("screen")) {
  void start();
}
