import { describe, expect, it } from "vitest";

import {
  NO_ANSWER,
  answersView,
  articlesView,
  escapeHtml,
  proposalsView,
  rulesView,
  saveEnabled,
  teachBadge,
  teachRequest,
} from "../src/views.js";
import type { RuleSummary } from "../src/api.js";

describe("answersView", () => {
  it("renders one row per answer with its article id", () => {
    const html = answersView([
      { text: "Bill is elder than Tom .", article: "N" },
      { text: "Jon is elder than Tom .", article: "N" },
    ]);
    expect(html.match(/answer-row/g)).toHaveLength(2);
    expect(html).toContain("Bill is elder than Tom .");
    expect(html).toContain(`<td class="article-id">N</td>`);
  });

  it("renders the empty state text when there are no answers", () => {
    expect(answersView([])).toContain(NO_ANSWER);
  });

  it("escapes markup in answers", () => {
    const html = answersView([{ text: "<b>x</b>", article: "1" }]);
    expect(html).not.toContain("<b>x</b>");
    expect(html).toContain("&lt;b&gt;x&lt;/b&gt;");
  });
});

describe("teachBadge", () => {
  it("labels the three outcomes", () => {
    expect(teachBadge({ outcome: "Created" })).toContain("Created");
    expect(teachBadge({ outcome: "MergedInto", rule: 7 }))
      .toContain("Merged into rule 7");
    expect(teachBadge({ outcome: "Rejected", reason: "in RuleFalse" }))
      .toContain("Rejected: in RuleFalse");
  });
});

const RULE: RuleSummary = {
  id: 42,
  shape: "SQA",
  left: ["{Tom,Bill} played fair .", "Did {Tom,Bill} play fair ?"],
  right: "{Tom,Bill} played fair .",
  slots: { "~1": ["Tom", "Bill"] },
  conditions: [{ slots: ["~2", "~3"],
                 combos: [["play", "played"], ["speak", "spoke"]] }],
  samples: 3,
};

describe("rulesView", () => {
  it("shows paradigms, conditions and sample counts", () => {
    const html = rulesView([RULE]);
    expect(html).toContain("{Tom,Bill}");
    expect(html).toContain("(play played) (speak spoke)");
    expect(html).toContain("3 sample(s)");
    expect(html).toContain("[SQA]");
  });

  it("has an empty state", () => {
    expect(rulesView([])).toContain("no rules taught yet");
  });
});

describe("proposalsView", () => {
  it("renders accept and reject buttons carrying the proposal id", () => {
    const html = proposalsView([
      { id: "p1-2", slots: ["~1", "~2"], shared: ["Tom", "Bill"] }]);
    expect(html).toContain(`class="accept" data-id="p1-2"`);
    expect(html).toContain(`class="reject" data-id="p1-2"`);
    expect(html).toContain("Tom, Bill");
  });
});

describe("articlesView", () => {
  it("lists articles with their sentences", () => {
    const html = articlesView([
      { id: "7", sentences: ["Tom read ( a book ) ."] }]);
    expect(html).toContain("<b>7</b>");
    expect(html).toContain("Tom read ( a book ) .");
  });
});

describe("saveEnabled", () => {
  it("requires s, q and a for SQA", () => {
    expect(saveEnabled("SQA", { s: "x", q: "y", a: "z" })).toBe(true);
    expect(saveEnabled("SQA", { s: "x", q: "", a: "z" })).toBe(false);
  });

  it("requires s and a for CondCons", () => {
    expect(saveEnabled("CondCons", { s: "x", a: "z" })).toBe(true);
    expect(saveEnabled("CondCons", { s: "", a: "z" })).toBe(false);
  });

  it("requires both conditions for DoubleCondCons", () => {
    expect(saveEnabled("DoubleCondCons",
                       { c1: "x", c2: "y", a: "z" })).toBe(true);
    expect(saveEnabled("DoubleCondCons",
                       { c1: "x", c2: " ", a: "z" })).toBe(false);
  });
});

describe("teachRequest", () => {
  it("maps the form fields per shape", () => {
    expect(teachRequest("SQA", { s: "s", q: "q", a: "a" }))
      .toEqual({ shape: "SQA", s: "s", q: "q", a: "a" });
    expect(teachRequest("CondCons", { s: "s", a: "a" }))
      .toEqual({ shape: "CondCons", s: "s", a: "a" });
    expect(teachRequest("DoubleCondCons", { c1: "x", c2: "y", a: "a" }))
      .toEqual({ shape: "DoubleCondCons", a: "a", conds: ["x", "y"] });
  });
});

describe("escapeHtml", () => {
  it("escapes the four special characters", () => {
    expect(escapeHtml(`<a href="x">&</a>`))
      .toBe("&lt;a href=&quot;x&quot;&gt;&amp;&lt;/a&gt;");
  });
});
