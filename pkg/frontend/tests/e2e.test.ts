// End-to-end: the console's client and view pipeline against a real
// running service (the same code path the browser executes, driven
// headlessly).

import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { spawn, ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";

import { Client } from "../src/api.js";
import { NO_ANSWER, answersView, rulesView, teachBadge } from "../src/views.js";

const REPO = resolve(__dirname, "..", "..");

let child: ChildProcess;
let client: Client;
let workdir: string;

async function waitReady(base: string, tries = 100): Promise<void> {
  for (let i = 0; i < tries; i++) {
    try {
      const resp = await fetch(base + "/stats");
      if (resp.ok) return;
    } catch {
      // not up yet
    }
    await new Promise(r => setTimeout(r, 100));
  }
  throw new Error("service did not come up");
}

beforeAll(async () => {
  workdir = mkdtempSync(join(tmpdir(), "shmkb-e2e-"));
  child = spawn(
    "python3",
    ["-m", "shmkb.api.cli", "serve",
     "--arena", join(workdir, "e2e.shm"),
     "--bind", "127.0.0.1:0"],
    {
      cwd: REPO,
      env: { ...process.env, PYTHONPATH: join(REPO, "src") },
      stdio: ["ignore", "pipe", "pipe"],
    });
  const port: number = await new Promise((resolvePort, reject) => {
    let buffer = "";
    child.stderr!.on("data", (chunk: Buffer) => {
      buffer += chunk.toString();
      const m = buffer.match(/serving on http:\/\/[^:]+:(\d+)/);
      if (m) resolvePort(Number(m[1]));
    });
    child.on("exit", code => reject(new Error(`service exited: ${code}`)));
    setTimeout(() => reject(new Error("no serve banner")), 20000);
  });
  client = new Client(`http://127.0.0.1:${port}`);
  await waitReady(client.base);
}, 30000);

afterAll(async () => {
  if (child) {
    const gone = new Promise(r => child.on("exit", r));
    child.kill("SIGINT");
    await Promise.race([gone, new Promise(r => setTimeout(r, 5000))]);
  }
  if (workdir) rmSync(workdir, { recursive: true, force: true });
});

const FIG2 = {
  shape: "SQA" as const,
  s: "Tom read ( a book ) .",
  q: "who read ( a book ) ?",
  a: "Tom read ( a book ) .",
};

describe("console against a live service", () => {
  it("renders the empty-base query as the no-answer text", async () => {
    const resp = await client.answer(FIG2.q);
    expect(answersView(resp.answers)).toContain(NO_ANSWER);
  });

  it("teaching the sample triple renders a Created badge", async () => {
    const resp = await client.teach(FIG2);
    expect(resp.outcome).toBe("Created");
    expect(teachBadge(resp)).toContain("Created");
  });

  it("the rule browser shows the taught rule", async () => {
    const rules = await client.rules();
    const html = rulesView(rules.rules);
    expect(html).toContain("[SQA]");
    expect(html).toContain("1 sample(s)");
  });

  it("asking the question renders the answer row", async () => {
    await client.saveArticle("7", "Tom read ( a book ) .");
    const resp = await client.answer(FIG2.q);
    const html = answersView(resp.answers);
    expect(html).toContain("answer-row");
    expect(html).toContain("Tom read ( a book ) .");
    expect(html).toContain(`<td class="article-id">7</td>`);
  });

  it("teaching the same triple again surfaces the merge", async () => {
    const resp = await client.teach(FIG2);
    expect(resp.outcome).toBe("MergedInto");
    expect(teachBadge(resp)).toContain("Merged into rule");
  });
});
