// Browser wiring: event handlers fetch through the API client and
// re-render panels from the responses. At most one mutating request is
// in flight at a time.

import { Client, Shape } from "./api.js";
import {
  answersView,
  articlesView,
  errorView,
  proposalsView,
  rulesView,
  saveEnabled,
  teachBadge,
  teachRequest,
} from "./views.js";

const client = new Client(
  (window as { SHMKB_API?: string }).SHMKB_API ?? "http://127.0.0.1:8750");

let mutating = false;

function $(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

function input(id: string): HTMLInputElement | HTMLTextAreaElement {
  return $(id) as HTMLInputElement | HTMLTextAreaElement;
}

async function mutate(run: () => Promise<void>, status: HTMLElement) {
  if (mutating) return;
  mutating = true;
  document.body.classList.add("busy");
  try {
    await run();
  } catch (e) {
    status.innerHTML = errorView(e instanceof Error ? e.message : String(e));
  } finally {
    mutating = false;
    document.body.classList.remove("busy");
  }
}

async function refreshRules() {
  try {
    const [rules, proposals] = await Promise.all([
      client.rules(), client.proposals()]);
    $("rule-browser").innerHTML = rulesView(rules.rules);
    $("proposal-list").innerHTML = proposalsView(proposals.proposals);
  } catch (e) {
    $("rule-browser").innerHTML =
      errorView(e instanceof Error ? e.message : String(e));
  }
}

async function refreshArticles() {
  try {
    const articles = await client.articles();
    $("article-list").innerHTML = articlesView(articles.articles);
  } catch (e) {
    $("article-list").innerHTML =
      errorView(e instanceof Error ? e.message : String(e));
  }
}

function teachFields(): Record<string, string> {
  return {
    s: input("teach-s").value,
    q: input("teach-q").value,
    a: input("teach-a").value,
    c1: input("teach-c1").value,
    c2: input("teach-c2").value,
  };
}

function currentShape(): Shape {
  return (input("teach-shape") as HTMLInputElement).value as Shape;
}

function syncTeachForm() {
  const shape = currentShape();
  ($("teach-save") as HTMLButtonElement).disabled =
    !saveEnabled(shape, teachFields());
  $("row-q").style.display = shape === "SQA" ? "" : "none";
  $("row-s").style.display = shape === "DoubleCondCons" ? "none" : "";
  $("row-c1").style.display = shape === "DoubleCondCons" ? "" : "none";
  $("row-c2").style.display = shape === "DoubleCondCons" ? "" : "none";
}

function wireTeachForm() {
  for (const id of ["teach-shape", "teach-s", "teach-q", "teach-a",
                    "teach-c1", "teach-c2"]) {
    $(id).addEventListener("input", syncTeachForm);
    $(id).addEventListener("change", syncTeachForm);
  }
  $("teach-save").addEventListener("click", () =>
    mutate(async () => {
      const resp = await client.teach(teachRequest(currentShape(),
                                                   teachFields()));
      $("teach-status").innerHTML = teachBadge(resp);
      await refreshRules();   // show paradigm growth after every teach
    }, $("teach-status")));
  $("teach-delete").addEventListener("click", () =>
    mutate(async () => {
      await client.unteach(teachRequest(currentShape(), teachFields()));
      $("teach-status").innerHTML =
        `<span class="badge removed">Removed</span>`;
      await refreshRules();
    }, $("teach-status")));
  syncTeachForm();
}

function wireQueryForm() {
  const run = () =>
    client.answer(input("query-q").value).then(
      resp => { $("query-results").innerHTML = answersView(resp.answers); },
      e => { $("query-results").innerHTML = errorView(String(e)); });
  $("query-go").addEventListener("click", run);
  $("query-q").addEventListener("keydown", (ev) => {
    if ((ev as KeyboardEvent).key === "Enter") run();
  });
}

function wireArticleForm() {
  $("article-save").addEventListener("click", () =>
    mutate(async () => {
      const out = await client.saveArticle(input("article-id").value,
                                           input("article-text").value);
      $("article-status").textContent =
        `saved ${out.id}: ${out.sentences} sentence(s)`;
      await refreshArticles();
    }, $("article-status")));
  $("article-delete").addEventListener("click", () =>
    mutate(async () => {
      // clearing the text removes the article's content under its key
      await client.saveArticle(input("article-id").value, "");
      $("article-status").textContent = "cleared";
      await refreshArticles();
    }, $("article-status")));
}

function wireProposals() {
  $("proposal-list").addEventListener("click", (ev) => {
    const target = ev.target as HTMLElement;
    const id = target.getAttribute("data-id");
    if (!id || target.tagName !== "BUTTON") return;
    void mutate(async () => {
      await client.reviewProposal(id, target.classList.contains("accept"));
      await refreshRules();
    }, $("rule-browser"));
  });
}

export function start(): void {
  wireTeachForm();
  wireQueryForm();
  wireArticleForm();
  wireProposals();
  void refreshRules();
  void refreshArticles();
}

if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", start);
}
