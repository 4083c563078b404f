// Client-side quest-form validation. The rules mirror the server's quest
// preconditions one-to-one (same error codes), so a form that passes here
// is rejected by the API only in race conditions.

import type { QuestForm } from "./types.js";

export interface FieldError {
  field: string;
  code: string;
  message: string;
}

export const QUEST_METRICS = [
  "oc_pair",
  "cohesion",
  "ownership_stability",
  "cscr",
];

export function validateQuestForm(
  form: QuestForm,
  currentWindow: number,
): FieldError[] {
  const errors: FieldError[] = [];
  if (!form.title.trim()) {
    errors.push({
      field: "title",
      code: "InvalidScope",
      message: "Give the quest a title.",
    });
  }
  if (!QUEST_METRICS.includes(form.metric)) {
    errors.push({
      field: "metric",
      code: "InvalidScope",
      message: `Metric must be one of ${QUEST_METRICS.join(", ")}.`,
    });
  }
  if (form.metric === "oc_pair" && form.services.length !== 2) {
    errors.push({
      field: "services",
      code: "InvalidScope",
      message: "Coupling quests target exactly 2 services.",
    });
  }
  if (
    (form.metric === "cohesion" || form.metric === "ownership_stability") &&
    form.services.length !== 1
  ) {
    errors.push({
      field: "services",
      code: "InvalidScope",
      message: "This metric targets exactly 1 service.",
    });
  }
  if (form.metric === "cscr" && form.developers.length === 0) {
    errors.push({
      field: "developers",
      code: "InvalidScope",
      message: "CSCR quests need at least 1 developer.",
    });
  }
  if (form.comparator !== "<=" && form.comparator !== ">=") {
    errors.push({
      field: "comparator",
      code: "InvalidScope",
      message: "Comparator must be <= or >=.",
    });
  }
  if (form.target_kind !== "absolute" && form.target_kind !== "delta") {
    errors.push({
      field: "target_kind",
      code: "InvalidScope",
      message: "Target is either absolute or a delta from today.",
    });
  }
  if (!Number.isFinite(form.deadline) || form.deadline <= currentWindow) {
    errors.push({
      field: "deadline",
      code: "DeadlineInPast",
      message: `Deadline must be after the current window (${currentWindow}).`,
    });
  }
  return errors;
}
