// Pure renderers: every function returns an HTML string, so the whole
// presentation layer is testable without a DOM.

import { AskResponse, ContextItem, StatsResponse } from "./types";

export const DEFAULT_CAUTION_THRESHOLD = 0.3;

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderScoreBadge(score: number, cautionBelow: number): string {
  const caution = score < cautionBelow ? " caution" : "";
  return `<span class="badge score-badge${caution}" title="${score}">${score.toFixed(3)}</span>`;
}

export function renderContextItem(item: ContextItem, cautionBelow: number): string {
  const badge =
    item.cosine_score === null ? "" : renderScoreBadge(item.cosine_score, cautionBelow);
  // context text goes out verbatim, only HTML-escaped
  return `<li class="context-item">${badge}<span class="context-text">${escapeHtml(item.text)}</span></li>`;
}

export function renderContextPanel(
  response: AskResponse,
  cautionBelow: number = DEFAULT_CAUTION_THRESHOLD,
): string {
  const parts: string[] = [];
  parts.push(`<details class="contexts">`);
  parts.push(
    `<summary>context (${response.contexts.length})` +
      `<span class="badge provenance-badge">${escapeHtml(response.provenance)}</span></summary>`,
  );
  if (response.generated_query !== null) {
    parts.push(`<pre class="generated-query">${escapeHtml(response.generated_query)}</pre>`);
  }
  parts.push(`<ol class="context-list">`);
  for (const item of response.contexts) {
    parts.push(renderContextItem(item, cautionBelow));
  }
  parts.push(`</ol>`);
  parts.push(`</details>`);
  return parts.join("");
}

export function renderAnswer(
  response: AskResponse,
  cautionBelow: number = DEFAULT_CAUTION_THRESHOLD,
): string {
  return (
    `<div class="message assistant">` +
    `<div class="answer-text">${escapeHtml(response.answer)}</div>` +
    renderContextPanel(response, cautionBelow) +
    `</div>`
  );
}

export function renderQuestion(text: string): string {
  return `<div class="message user">${escapeHtml(text)}</div>`;
}

export function renderNoStoreNotice(detail: string): string {
  return (
    `<div class="message notice no-store">no FMEA loaded` +
    `<span class="detail">${escapeHtml(detail)}</span></div>`
  );
}

export function renderError(detail: string): string {
  return (
    `<div class="message error">${escapeHtml(detail)}` +
    `<button class="retry" type="button">retry</button></div>`
  );
}

export function renderStatus(
  address: string,
  storeLoaded: boolean,
  stats: StatsResponse | null,
): string {
  const store =
    stats !== null
      ? `${stats.total_nodes} nodes, ${stats.total_relationships} relationships`
      : storeLoaded
        ? "store loaded"
        : "no store ingested";
  return `connected to ${escapeHtml(address)}: ${store}`;
}
