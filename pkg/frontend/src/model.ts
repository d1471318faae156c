/**
 * View grouping over the server's spec cards.
 *
 * Cards are grouped as Proposed / Accepted / Soft / Failing; a card in
 * the Failing group keeps its enforcement level as its style (error for
 * accepted, warning for soft). No field is recomputed client-side.
 */

import type { Decision, SpecCardData } from "./api.js";

export type GroupName = "Proposed" | "Accepted" | "Soft" | "Failing";

export const GROUP_ORDER: GroupName[] = [
  "Proposed",
  "Failing",
  "Accepted",
  "Soft",
];

export interface Grouped {
  name: GroupName;
  cards: SpecCardData[];
}

export function isFailing(card: SpecCardData): boolean {
  return card.verdict !== null && card.verdict.outcome === "fail";
}

export function groupOf(card: SpecCardData): GroupName | null {
  if (card.status === "proposed") return "Proposed";
  if (card.status === "accepted" || card.status === "soft") {
    if (isFailing(card)) return "Failing";
    return card.status === "accepted" ? "Accepted" : "Soft";
  }
  return null; // rejected/retired cards are not shown
}

export function groupCards(cards: SpecCardData[]): Grouped[] {
  const buckets = new Map<GroupName, SpecCardData[]>();
  for (const name of GROUP_ORDER) buckets.set(name, []);
  for (const card of cards) {
    const name = groupOf(card);
    if (name !== null) buckets.get(name)!.push(card);
  }
  return GROUP_ORDER.map((name) => ({ name, cards: buckets.get(name)! }));
}

/** error-styled for enforced (accepted) cards, warning-styled for soft. */
export function severityClass(card: SpecCardData): string {
  if (!isFailing(card)) return "";
  return card.status === "soft" ? "warning" : "error";
}

export function legalDecisions(card: SpecCardData): Decision[] {
  switch (card.status) {
    case "proposed":
      return ["accepted", "rejected", "soft"];
    case "accepted":
      return ["soft"];
    case "soft":
      return ["accepted"];
    default:
      return [];
  }
}
