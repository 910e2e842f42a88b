import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import process from "node:process";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, expect, it } from "vitest";
import { App } from "../src/app";

const repoRoot = join(dirname(fileURLToPath(import.meta.url)), "..", "..");
const python = process.env["PYTHON"] ?? "python3";

let proc: ChildProcess | null = null;
let workDir = "";
let base = "";
let serverLog = "";

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = createServer();
    probe.on("error", reject);
    probe.listen(0, "127.0.0.1", () => {
      const address = probe.address();
      if (address && typeof address === "object") {
        const port = address.port;
        probe.close(() => resolve(port));
      } else {
        probe.close();
        reject(new Error("no port assigned"));
      }
    });
  });
}

async function until<T>(
  probe: () => Promise<T | null> | T | null,
  timeoutMs: number,
  what: string,
): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    const value = await probe();
    if (value !== null) return value;
    if (Date.now() > deadline) {
      throw new Error(`timed out waiting for ${what}\nserver output:\n${serverLog}`);
    }
    await new Promise((resolve) => setTimeout(resolve, 50));
  }
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "console-loop-"));
  const dataDir = join(workDir, "data");
  const made = spawnSync(
    python,
    ["-m", "sonotag.cli", "make-toyset", "--out", dataDir, "--clips", "50", "--classes", "3", "--seed", "11"],
    { cwd: repoRoot, encoding: "utf8" },
  );
  if (made.status !== 0) {
    throw new Error(`make-toyset failed: ${made.stderr || made.stdout}`);
  }

  const port = await freePort();
  base = `http://127.0.0.1:${port}`;
  proc = spawn(
    python,
    ["-m", "sonotag.cli", "serve", "--dataset-dir", dataDir, "--host", "127.0.0.1", "--port", String(port)],
    { cwd: repoRoot, stdio: ["ignore", "pipe", "pipe"] },
  );
  proc.stdout?.on("data", (chunk: Buffer) => {
    serverLog += chunk.toString();
  });
  proc.stderr?.on("data", (chunk: Buffer) => {
    serverLog += chunk.toString();
  });

  await until(
    async () => {
      try {
        const resp = await fetch(`${base}/`);
        return resp.ok ? true : null;
      } catch {
        return null;
      }
    },
    60_000,
    "the labeling service to boot",
  );
});

afterAll(async () => {
  if (proc) {
    proc.kill("SIGTERM");
    await new Promise((resolve) => {
      proc?.once("exit", resolve);
      setTimeout(resolve, 5000);
    });
  }
  if (workDir) rmSync(workDir, { recursive: true, force: true });
});

it(
  "drives a 50-clip session to finalized through the DOM",
  async () => {
    const root = document.createElement("div");
    document.body.appendChild(root);
    const app = new App(root, { base, pollMs: 200 });

    const input = (selector: string, value: string): void => {
      const el = root.querySelector<HTMLInputElement>(selector);
      if (!el) throw new Error(`missing input ${selector}`);
      el.value = value;
    };
    input("#class-names", "class0, class1, class2");
    input("#seed", "0");
    root.querySelector<HTMLButtonElement>("#start")?.click();
    await until(() => app.sessionId, 120_000, "session creation");

    // Answer every query batch through the cards, exactly as a human would.
    const clicked: Record<string, string> = {};
    const deadline = Date.now() + 180_000;
    while (Date.now() < deadline && app.phase !== "finalized") {
      await app.settle();
      const cards = [...root.querySelectorAll<HTMLElement>(".card")];
      if (app.phase === "seeding" && cards.length > 0 && !app.submitting) {
        for (const card of cards) {
          const sample = card.dataset["sample"];
          if (!sample) throw new Error("card without a sample id");
          const truth = sample.split("_")[0] as string;
          const button = card.querySelector<HTMLButtonElement>(
            `.class-btn[data-class="${truth}"]`,
          );
          if (!button) throw new Error(`no ${truth} button on ${sample}`);
          button.click();
          clicked[sample] = truth;
        }
        const submit = root.querySelector<HTMLButtonElement>("#submit");
        if (!submit || submit.disabled) {
          throw new Error("submit still disabled after labeling every card");
        }
        submit.click();
        await app.settle();
      } else {
        await new Promise((resolve) => setTimeout(resolve, 100));
      }
    }
    expect(app.phase).toBe("finalized");
    expect(Object.keys(clicked).length).toBeGreaterThan(0);

    // Completion screen exposes the export link.
    const link = root.querySelector<HTMLAnchorElement>("#export-link");
    expect(link).not.toBeNull();
    const href = link?.getAttribute("href") ?? "";
    expect(href).toBe(`${base}/sessions/${app.sessionId}/export`);

    // The report behind the link matches a direct server export byte for byte.
    const viaConsole = await (await fetch(href)).text();
    const direct = await (
      await fetch(`${base}/sessions/${app.sessionId}/export`)
    ).text();
    expect(viaConsole).toBe(direct);

    const lines = viaConsole.trimEnd().split("\n");
    expect(lines).toHaveLength(51);
    expect(lines[0]).toBe("sample_id\tlabel\tprovenance\tscore\tstage");

    // Every human-provenance row carries exactly the label clicked in the UI.
    let humanRows = 0;
    for (const line of lines.slice(1)) {
      const [sampleId, label, provenance] = line.split("\t");
      if (provenance === "human") {
        humanRows += 1;
        expect(clicked[sampleId as string]).toBe(label);
      }
    }
    expect(humanRows).toBeGreaterThan(0);

    // The progress panel reflects the finished run.
    const counts = [...root.querySelectorAll(".prov-count")].map((el) =>
      Number(el.textContent),
    );
    expect(counts.reduce((a, b) => a + b, 0)).toBe(50);
    const status = app.status;
    expect(status).not.toBeNull();
    expect(status?.budgets.human_used).toBeLessThanOrEqual(
      status?.budgets.human_cap ?? 0,
    );
    expect(root.querySelector("#accuracy")).not.toBeNull();

    app.destroy();
  },
  240_000,
);
