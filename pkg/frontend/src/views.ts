// Pure view builders: every panel's markup is a function of API
// responses and nothing else, so the whole UI is testable headlessly.

import type {
  Answer,
  ArticleSummary,
  Proposal,
  RuleSummary,
  Shape,
  TeachResponse,
} from "./api.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export const NO_ANSWER = "I do not know.";

export function answersView(answers: Answer[]): string {
  if (answers.length === 0) {
    return `<p class="empty">${NO_ANSWER}</p>`;
  }
  const rows = answers
    .map(a => `<tr class="answer-row"><td>${escapeHtml(a.text)}</td>` +
              `<td class="article-id">${escapeHtml(a.article)}</td></tr>`)
    .join("");
  return `<table class="answers"><thead><tr><th>answer</th>` +
         `<th>article</th></tr></thead><tbody>${rows}</tbody></table>`;
}

export function teachBadge(resp: TeachResponse): string {
  if (resp.outcome === "Rejected") {
    const reason = resp.reason ? `: ${escapeHtml(resp.reason)}` : "";
    return `<span class="badge rejected">Rejected${reason}</span>`;
  }
  const label = resp.outcome === "Created" ? "Created"
    : `Merged into rule ${resp.rule}`;
  const cls = resp.outcome === "Created" ? "created" : "merged";
  return `<span class="badge ${cls}">${label}</span>`;
}

export function slotText(name: string, values: string[]): string {
  return `{${values.join(",")}}`;
}

export function ruleView(rule: RuleSummary): string {
  const left = rule.left.map(escapeHtml).join(" , ");
  const conds = rule.conditions
    .map(c => {
      const combos = c.combos
        .map(combo => `(${combo.map(escapeHtml).join(" ")})`)
        .join(" ");
      return `<div class="cond">| &lt;(${c.slots.map(escapeHtml)
        .join(" ")}) [${combos}]&gt;</div>`;
    })
    .join("");
  const slots = Object.entries(rule.slots)
    .map(([name, values]) =>
      `<span class="slot" title="${escapeHtml(name)}">` +
      `${escapeHtml(slotText(name, values))}</span>`)
    .join(" ");
  return `<li class="rule" data-id="${rule.id}">` +
         `<span class="shape">[${rule.shape}]</span> ` +
         `<code>${left} -&gt; ${escapeHtml(rule.right)}</code>` +
         `${conds}<div class="meta">${slots} ` +
         `<span class="samples">${rule.samples} sample(s)</span></div></li>`;
}

export function rulesView(rules: RuleSummary[]): string {
  if (rules.length === 0) {
    return `<p class="empty">no rules taught yet</p>`;
  }
  return `<ul class="rules">${rules.map(ruleView).join("")}</ul>`;
}

export function proposalsView(proposals: Proposal[]): string {
  if (proposals.length === 0) {
    return `<p class="empty">no pending proposals</p>`;
  }
  const items = proposals
    .map(p =>
      `<li class="proposal" data-id="${escapeHtml(p.id)}">` +
      `unify <code>${p.slots.map(escapeHtml).join("</code> and <code>")}` +
      `</code> (shared: ${p.shared.map(escapeHtml).join(", ")}) ` +
      `<button class="accept" data-id="${escapeHtml(p.id)}">accept` +
      `</button> <button class="reject" data-id="${escapeHtml(p.id)}">` +
      `reject</button></li>`)
    .join("");
  return `<ul class="proposals">${items}</ul>`;
}

export function articlesView(articles: ArticleSummary[]): string {
  if (articles.length === 0) {
    return `<p class="empty">no articles stored</p>`;
  }
  const items = articles
    .map(a => `<li class="article" data-id="${escapeHtml(a.id)}">` +
              `<b>${escapeHtml(a.id)}</b> ` +
              `<span>${a.sentences.map(escapeHtml).join(" ")}</span></li>`)
    .join("");
  return `<ul class="articles">${items}</ul>`;
}

export function errorView(message: string): string {
  return `<p class="error">${escapeHtml(message)}</p>`;
}

// TeachForm field requirements per shape: Save stays disabled until the
// required fields are non-empty.
export function requiredFields(shape: Shape): ("s" | "q" | "a" | "c1" | "c2")[] {
  switch (shape) {
    case "SQA":
      return ["s", "q", "a"];
    case "CondCons":
      return ["s", "a"];
    case "DoubleCondCons":
      return ["c1", "c2", "a"];
  }
}

export function saveEnabled(shape: Shape,
                            fields: Record<string, string>): boolean {
  return requiredFields(shape).every(f => (fields[f] ?? "").trim() !== "");
}

export function teachRequest(shape: Shape,
                             fields: Record<string, string>) {
  if (shape === "DoubleCondCons") {
    return { shape, a: fields.a, conds: [fields.c1, fields.c2] };
  }
  if (shape === "CondCons") {
    return { shape, s: fields.s, a: fields.a };
  }
  return { shape, s: fields.s, q: fields.q, a: fields.a };
}
