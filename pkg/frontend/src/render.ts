// Pure DOM builders: every element is derived from API payloads alone, so
// re-rendering a re-fetched transcript reproduces the page exactly.

import type { ChatTurnData, CitationReport, DocumentInfo, RetrievedContext } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function docAnchorId(citationKey: string): string {
  const slug = citationKey.replace(/[^\p{L}\p{N}]+/gu, "-").replace(/^-|-$/g, "");
  return "doc-" + slug.toLowerCase();
}

export function renderBadges(report: CitationReport): HTMLElement {
  const wrap = el("div", "badges");
  for (const key of report.grounded) {
    const badge = el("a", "badge grounded", key);
    badge.href = "#" + docAnchorId(key);
    badge.title = "cited paper is in the corpus";
    wrap.appendChild(badge);
  }
  for (const key of report.ungrounded) {
    const badge = el("span", "badge ungrounded", key);
    badge.title = "cited paper is NOT in the corpus";
    wrap.appendChild(badge);
  }
  return wrap;
}

export function renderRetrievedPanel(
  retrieved: RetrievedContext,
  standaloneQuestion: string,
): HTMLDetailsElement {
  const panel = el("details", "retrieved");
  const summary = el(
    "summary",
    undefined,
    `${retrieved.hits.length} retrieved chunk${retrieved.hits.length === 1 ? "" : "s"}, ` +
      `~${retrieved.total_token_estimate} tokens`,
  );
  panel.appendChild(summary);
  panel.appendChild(el("p", "standalone", `standalone question: ${standaloneQuestion}`));
  for (const hit of retrieved.hits) {
    const row = el("div", "hit");
    row.appendChild(el("span", "hit-score", hit.score.toFixed(4)));
    row.appendChild(el("span", "hit-key", hit.citation_key || hit.doc_id));
    row.appendChild(el("blockquote", "hit-text", hit.text));
    row.dataset.chunkId = hit.chunk_id;
    panel.appendChild(row);
  }
  return panel;
}

export function renderTurn(turn: ChatTurnData): HTMLElement {
  const article = el("article", "turn");
  article.appendChild(el("p", "user-query", turn.user_query));
  article.appendChild(el("p", "answer", turn.answer));
  article.appendChild(renderBadges(turn.citation_report));
  article.appendChild(renderRetrievedPanel(turn.retrieved, turn.standalone_question));
  return article;
}

export function renderTranscript(turns: ChatTurnData[]): HTMLElement {
  const list = el("div", "transcript");
  for (const turn of turns) list.appendChild(renderTurn(turn));
  return list;
}

export function renderDocuments(docs: DocumentInfo[]): HTMLElement {
  const box = el("div", "documents");
  const raw = docs.filter((d) => d.source_kind === "raw").length;
  const distilled = docs.filter((d) => d.source_kind === "distilled").length;
  box.appendChild(el("h2", undefined, "Corpus"));
  box.appendChild(
    el("p", "corpus-stats", `${raw} paper${raw === 1 ? "" : "s"}, ${distilled} distilled`),
  );
  const list = el("ul", "doc-list");
  for (const doc of docs) {
    const item = el("li", `doc ${doc.source_kind}`);
    if (doc.source_kind === "raw") item.id = docAnchorId(doc.citation_key);
    item.appendChild(el("span", "doc-key", doc.citation_key));
    item.appendChild(el("span", "doc-title", doc.title));
    item.appendChild(el("span", "doc-kind", doc.source_kind));
    list.appendChild(item);
  }
  box.appendChild(list);
  return box;
}
