// Display formatting. Values are rounded to 2 decimals, half-up, for the
// screen only; the underlying numbers are passed around untouched.

export type Trend = "up" | "down" | "flat" | "new";

export function formatMetric(value: number): string {
  return (Math.round(value * 100) / 100).toFixed(2);
}

export function formatPoints(value: number): string {
  return Number.isInteger(value) ? String(value) : formatMetric(value);
}

/** Trend of a value against the previous window; "new" when there is none. */
export function trendOf(value: number, previous: number | null): Trend {
  if (previous === null || previous === undefined) return "new";
  if (value > previous) return "up";
  if (value < previous) return "down";
  return "flat";
}

export const TREND_ARROWS: Record<Trend, string> = {
  up: "↑",
  down: "↓",
  flat: "→",
  new: "·",
};
