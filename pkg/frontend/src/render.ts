/**
 * HTML renderers. Pure string-in/string-out so tests can assert that
 * every displayed fact is exactly a payload field; app.ts owns the DOM.
 */

import type { FixPlanPayload, SpecCardData } from "./api.js";
import { Grouped, legalDecisions, severityClass } from "./model.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

const DECISION_LABELS: Record<string, string> = {
  accepted: "Accept",
  rejected: "Reject",
  soft: "Soften",
};

export function renderCard(card: SpecCardData): string {
  const severity = severityClass(card);
  const verdict = card.verdict
    ? `${card.verdict.outcome} (${card.verdict.tier})`
    : "not verified yet";
  const missing = card.missing_members.length
    ? `<p class="missing">Missing: ${card.missing_members
        .map((m) => `<code>'${escapeHtml(m)}'</code>`)
        .join(", ")}</p>`
    : "";
  const decisions = legalDecisions(card)
    .map(
      (d) =>
        `<button data-action="decide" data-id="${card.id}" ` +
        `data-status="${d}">${DECISION_LABELS[d]}</button>`,
    )
    .join(" ");
  const fix = card.fix_available
    ? `<button data-action="diff" data-id="${card.id}">Show fix</button>` +
      (card.fix_summary
        ? ` <span class="fix-summary">${escapeHtml(card.fix_summary)}</span>`
        : "")
    : "";
  return [
    `<article class="card ${severity}" data-card="${card.id}">`,
    `<header><span class="kind">${escapeHtml(card.kind)}</span>`,
    `<span class="status">${escapeHtml(card.status)}</span>`,
    `<span class="verdict">${escapeHtml(verdict)}</span></header>`,
    `<p class="anchor"><code>${escapeHtml(card.anchor.path)}:` +
      `${card.anchor.line}</code> in ` +
      `<code>${escapeHtml(card.anchor.decl || "module scope")}</code></p>`,
    `<p class="explanation">${escapeHtml(card.explanation)}</p>`,
    missing,
    `<footer>${decisions} ${fix}</footer>`,
    `<div class="diff-slot" data-diff-for="${card.id}"></div>`,
    `</article>`,
  ].join("\n");
}

export function renderGroups(groups: Grouped[]): string {
  const sections = groups.map((group) => {
    const body = group.cards.length
      ? group.cards.map(renderCard).join("\n")
      : `<p class="empty">Nothing here.</p>`;
    return (
      `<section class="group" data-group="${group.name}">` +
      `<h2>${group.name} <span class="count">${group.cards.length}</span>` +
      `</h2>${body}</section>`
    );
  });
  const total = groups.reduce((n, g) => n + g.cards.length, 0);
  if (total === 0) {
    return (
      `<p class="empty-state">No specifications yet. ` +
      `Edit some TypeScript and the side-car will propose constraints ` +
      `here.</p>` + sections.join("\n")
    );
  }
  return sections.join("\n");
}

export function renderDiff(plan: FixPlanPayload): string {
  return (
    `<div class="diff">` +
    `<p class="summary">${escapeHtml(plan.summary)}</p>` +
    `<pre>${escapeHtml(plan.diff)}</pre>` +
    `<button data-action="apply" data-id="${plan.record_id}">Apply</button>` +
    `</div>`
  );
}

export function renderNoPlan(reason: string): string {
  return (
    `<div class="diff"><p class="no-plan">No fix plan available: ` +
    `${escapeHtml(reason)}</p>` +
    `<button disabled title="${escapeHtml(reason)}">Apply</button></div>`
  );
}

export function renderBanner(message: string, retry: boolean): string {
  const button = retry
    ? ` <button data-action="retry">Retry</button>`
    : "";
  return `<div class="banner">${escapeHtml(message)}${button}</div>`;
}

export function renderToast(message: string): string {
  return `<div class="toast">${escapeHtml(message)}</div>`;
}
