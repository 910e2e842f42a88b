import { ApiError, Client } from "./api";
import type { QueryEntry, Status } from "./api";

export interface AppOptions {
  base?: string;
  pollMs?: number;
  document?: Document;
  onSession?: (sessionId: string) => void;
}

export interface Banner {
  kind: "error" | "reject";
  text: string;
  buckets?: Record<string, string[]>;
  retry?: () => void;
}

const BUCKET_LABELS: Record<string, string> = {
  not_pending: "not pending",
  unknown_class: "unknown class",
  duplicate: "duplicate",
};

const PROVENANCE_ORDER = ["human", "propagated", "forced", "none"];

const escapeHtml = (value: string): string =>
  value.replace(/[&<>"']/g, (ch) => {
    switch (ch) {
      case "&":
        return "&amp;";
      case "<":
        return "&lt;";
      case ">":
        return "&gt;";
      case '"':
        return "&quot;";
      default:
        return "&#39;";
    }
  });

export class App {
  readonly client: Client;
  readonly root: HTMLElement;
  readonly pollMs: number;

  sessionId: string | null = null;
  status: Status | null = null;
  phase = "";
  queries: QueryEntry[] = [];
  picks = new Map<string, string>();
  focus = 0;
  submitting = false;
  banner: Banner | null = null;

  private readonly doc: Document;
  private readonly onSession: ((sessionId: string) => void) | undefined;
  private pollTimer: ReturnType<typeof setTimeout> | null = null;
  private op: Promise<void> | null = null;
  private readonly onKey = (event: KeyboardEvent) => this.handleKey(event);

  constructor(root: HTMLElement, options: AppOptions = {}) {
    this.root = root;
    this.client = new Client(options.base ?? "");
    this.pollMs = options.pollMs ?? 2000;
    this.doc = options.document ?? root.ownerDocument;
    this.onSession = options.onSession;
    this.doc.addEventListener("keydown", this.onKey);
    this.render();
  }

  destroy(): void {
    this.doc.removeEventListener("keydown", this.onKey);
    if (this.pollTimer !== null) clearTimeout(this.pollTimer);
    this.pollTimer = null;
  }

  /** Resolve once every action started so far has finished. */
  async settle(): Promise<void> {
    while (this.op) {
      const current = this.op;
      await current.catch(() => undefined);
      if (this.op === current) this.op = null;
    }
  }

  open(sessionId: string): void {
    this.enqueue(() => this.attach(sessionId));
  }

  // ------------------------------------------------------------------ actions

  async createSession(classNames: string[], datasetDir?: string, seed = 0): Promise<void> {
    if (this.submitting) return;
    this.submitting = true;
    this.render();
    try {
      const created = await this.client.createSession({
        class_names: classNames,
        ...(datasetDir !== undefined ? { dataset_dir: datasetDir } : {}),
        seed,
      });
      this.sessionId = created.session_id;
      this.banner = null;
      await this.pullState();
      this.onSession?.(created.session_id);
    } catch (err) {
      this.banner = this.describeError(err, () =>
        this.enqueue(() => this.createSession(classNames, datasetDir, seed)),
      );
    } finally {
      this.submitting = false;
      this.render();
      this.syncPolling();
    }
  }

  async attach(sessionId: string): Promise<void> {
    if (this.submitting) return;
    this.submitting = true;
    this.render();
    try {
      this.sessionId = sessionId.trim();
      await this.pullState();
      this.banner = null;
    } catch (err) {
      this.sessionId = null;
      this.banner = this.describeError(err, () => this.open(sessionId));
    } finally {
      this.submitting = false;
      this.render();
      this.syncPolling();
    }
  }

  pick(sampleId: string, className: string): void {
    if (this.submitting) return;
    const index = this.queries.findIndex((q) => q.sample_id === sampleId);
    if (index < 0) return;
    this.picks.set(sampleId, className);
    this.focus = this.nextUnlabeled(index);
    this.render();
  }

  async submit(): Promise<void> {
    if (this.submitting) return;
    if (!this.sessionId || this.queries.length === 0) return;
    if (this.picks.size !== this.queries.length) return;
    // Every answer comes straight from a recorded click; nothing is filled in.
    const answers: { sample_id: string; label: string }[] = [];
    for (const query of this.queries) {
      const label = this.picks.get(query.sample_id);
      if (label === undefined) return;
      answers.push({ sample_id: query.sample_id, label });
    }
    this.submitting = true;
    this.render();
    try {
      await this.client.postLabels(this.sessionId, answers);
      this.banner = null;
      this.picks.clear();
      this.focus = 0;
      await this.pullState();
    } catch (err) {
      if (err instanceof ApiError && err.rejection) {
        const rejection = err.rejection;
        this.banner = { kind: "reject", text: rejection.message, buckets: rejection.offending };
      } else if (err instanceof ApiError && err.status === 409) {
        this.banner = { kind: "error", text: err.message };
        await this.pullState().catch(() => undefined);
      } else {
        this.banner = this.describeError(err, () => this.enqueue(() => this.submit()));
      }
    } finally {
      this.submitting = false;
      this.render();
      this.syncPolling();
    }
  }

  handleKey(event: KeyboardEvent): void {
    const target = event.target as HTMLElement | null;
    if (target && ["INPUT", "TEXTAREA", "SELECT"].includes(target.tagName)) return;
    if (!this.status || this.queries.length === 0 || this.submitting) return;
    if (event.key < "0" || event.key > "9" || event.key.length !== 1) return;
    const className = this.status.class_names[Number(event.key)];
    const card = this.queries[this.focus];
    if (className === undefined || card === undefined) return;
    event.preventDefault();
    this.pick(card.sample_id, className);
  }

  // ------------------------------------------------------------------ plumbing

  private enqueue(action: () => Promise<void>): void {
    const previous = this.op;
    this.op = (async () => {
      if (previous) await previous.catch(() => undefined);
      await action();
    })();
  }

  private async pullState(): Promise<void> {
    if (!this.sessionId) return;
    const status = await this.client.status(this.sessionId);
    const batch = await this.client.queries(this.sessionId);
    this.status = status;
    this.phase = batch.phase;
    this.setQueries(batch.queries);
  }

  private async refreshOnce(): Promise<void> {
    try {
      await this.pullState();
      if (this.banner?.kind === "error") this.banner = null;
    } catch (err) {
      this.banner = this.describeError(err, () => this.enqueue(() => this.refreshOnce()));
    } finally {
      this.render();
      this.syncPolling();
    }
  }

  private setQueries(next: QueryEntry[]): void {
    const ids = new Set(next.map((q) => q.sample_id));
    // Keep picks for cards still pending so a failed submit never clears choices.
    for (const id of [...this.picks.keys()]) {
      if (!ids.has(id)) this.picks.delete(id);
    }
    this.queries = next;
    if (this.focus >= next.length) this.focus = 0;
  }

  private nextUnlabeled(from: number): number {
    const count = this.queries.length;
    for (let step = 1; step <= count; step++) {
      const index = (from + step) % count;
      const query = this.queries[index];
      if (query && !this.picks.has(query.sample_id)) return index;
    }
    return from;
  }

  private syncPolling(): void {
    const active =
      this.sessionId !== null && this.phase === "staging" && !this.status?.error;
    if (active && this.pollTimer === null) {
      this.pollTimer = setTimeout(() => {
        this.pollTimer = null;
        this.enqueue(() => this.refreshOnce());
      }, this.pollMs);
    } else if (!active && this.pollTimer !== null) {
      clearTimeout(this.pollTimer);
      this.pollTimer = null;
    }
  }

  private describeError(err: unknown, retry?: () => void): Banner {
    const text = err instanceof ApiError ? err.message : String(err);
    const banner: Banner = { kind: "error", text };
    if (retry) banner.retry = retry;
    return banner;
  }

  private inputValue(selector: string): string | null {
    return this.root.querySelector<HTMLInputElement>(selector)?.value ?? null;
  }

  private startFromForm(): void {
    const classNames = (this.inputValue("#class-names") ?? "")
      .split(",")
      .map((name) => name.trim())
      .filter((name) => name.length > 0);
    if (classNames.length < 2) {
      this.banner = { kind: "error", text: "give at least two comma-separated class names" };
      this.render();
      return;
    }
    const datasetDir = (this.inputValue("#dataset-dir") ?? "").trim();
    const seedRaw = (this.inputValue("#seed") ?? "").trim();
    const seed = seedRaw === "" ? 0 : Number(seedRaw);
    if (!Number.isInteger(seed)) {
      this.banner = { kind: "error", text: "seed must be an integer" };
      this.render();
      return;
    }
    this.enqueue(() =>
      this.createSession(classNames, datasetDir === "" ? undefined : datasetDir, seed),
    );
  }

  private attachFromForm(): void {
    const sessionId = (this.inputValue("#session-id") ?? "").trim();
    if (sessionId === "") {
      this.banner = { kind: "error", text: "give a session id to attach to" };
      this.render();
      return;
    }
    this.open(sessionId);
  }

  private retryBanner(): void {
    const retry = this.banner?.retry;
    this.banner = null;
    this.render();
    retry?.();
  }

  // ------------------------------------------------------------------ rendering

  render(): void {
    const sections: string[] = [this.renderHeader()];
    if (this.banner) sections.push(this.renderBanner(this.banner));
    if (!this.sessionId) {
      sections.push(this.renderSetup());
    } else {
      if (this.phase === "seeding" && this.queries.length > 0) {
        sections.push(this.renderBoard());
      } else if (this.phase === "staging") {
        sections.push(this.renderStaging());
      } else if (this.phase === "finalized") {
        sections.push(this.renderCompletion());
      }
      if (this.status) sections.push(this.renderProgress(this.status));
    }
    this.root.innerHTML = sections.join("\n");
    this.wire();
  }

  private renderHeader(): string {
    const chips: string[] = [];
    if (this.sessionId) {
      chips.push(
        `<span id="session-chip" class="chip">session ${escapeHtml(this.sessionId.slice(0, 8))}</span>`,
      );
    }
    if (this.phase) {
      chips.push(
        `<span id="phase-chip" class="chip phase-${escapeHtml(this.phase)}">${escapeHtml(this.phase)}</span>`,
      );
    }
    return `<header><h1>sonotag console</h1><div class="chips">${chips.join("")}</div></header>`;
  }

  private renderBanner(banner: Banner): string {
    const parts = [`<div id="banner" class="banner ${banner.kind}">`];
    parts.push(`<p>${escapeHtml(banner.text)}</p>`);
    if (banner.buckets) {
      for (const [bucket, ids] of Object.entries(banner.buckets)) {
        if (ids.length === 0) continue;
        const label = BUCKET_LABELS[bucket] ?? bucket;
        parts.push(
          `<p class="offending" data-bucket="${escapeHtml(bucket)}">${escapeHtml(label)}: ${ids
            .map(escapeHtml)
            .join(", ")}</p>`,
        );
      }
    }
    if (banner.retry) parts.push(`<button id="retry">retry</button>`);
    parts.push("</div>");
    return parts.join("");
  }

  private renderSetup(): string {
    const keep = (selector: string, fallback = ""): string =>
      escapeHtml(this.inputValue(selector) ?? fallback);
    const disabled = this.submitting ? " disabled" : "";
    return `<section id="setup" class="panel">
  <h2>start a session</h2>
  <label>class names (comma separated)
    <input id="class-names" value="${keep("#class-names")}" placeholder="siren, drilling, street_music">
  </label>
  <label>dataset directory (blank uses the server default)
    <input id="dataset-dir" value="${keep("#dataset-dir")}" placeholder="/path/to/clips">
  </label>
  <label>seed
    <input id="seed" value="${keep("#seed", "0")}" inputmode="numeric">
  </label>
  <button id="start"${disabled}>start session</button>
  <h2>or attach to an existing session</h2>
  <label>session id
    <input id="session-id" value="${keep("#session-id")}">
  </label>
  <button id="attach-btn"${disabled}>attach</button>
</section>`;
  }

  private renderBoard(): string {
    const classNames = this.status?.class_names ?? [];
    const labeled = this.picks.size;
    const total = this.queries.length;
    const ready = labeled === total && !this.submitting;
    const cards = this.queries
      .map((query, index) => this.renderCard(query, index, classNames))
      .join("");
    const submitText = this.submitting ? "submitting…" : `submit ${total} labels`;
    return `<section id="board" class="panel">
  <h2>label these clips</h2>
  <p class="hint">press 0–9 to label the highlighted card</p>
  <div class="cards">${cards}</div>
  <footer class="board-footer">
    <span id="labeled-count">${labeled} of ${total} labeled</span>
    <button id="submit"${ready ? "" : " disabled"}>${submitText}</button>
  </footer>
</section>`;
  }

  private renderCard(query: QueryEntry, index: number, classNames: string[]): string {
    const picked = this.picks.get(query.sample_id);
    const buttons = classNames
      .map((name, k) => {
        const hot = k < 10 ? `<kbd>${k}</kbd> ` : "";
        const selected = picked === name ? " selected" : "";
        return `<button class="class-btn${selected}" data-sample="${escapeHtml(query.sample_id)}" data-class="${escapeHtml(name)}">${hot}${escapeHtml(name)}</button>`;
      })
      .join("");
    const classes = ["card"];
    if (picked !== undefined) classes.push("labeled");
    if (index === this.focus) classes.push("focused");
    return `<article class="${classes.join(" ")}" data-sample="${escapeHtml(query.sample_id)}">
  <header><span class="sample-id">${escapeHtml(query.sample_id)}</span><span class="duration">${query.duration.toFixed(2)} s</span></header>
  <audio controls preload="none" src="${escapeHtml(this.client.audioUrl(query))}"></audio>
  <div class="classes">${buttons}</div>
</article>`;
  }

  private renderStaging(): string {
    const seconds = this.pollMs / 1000;
    return `<section id="staging" class="panel">
  <h2>stages running…</h2>
  <p>the annotator is propagating labels; this page refreshes every ${seconds} s.</p>
</section>`;
  }

  private renderCompletion(): string {
    const sessionId = this.sessionId ?? "";
    return `<section id="completion" class="panel">
  <h2>labeling complete</h2>
  <p>every clip now carries a label.</p>
  <a id="export-link" href="${escapeHtml(this.client.exportUrl(sessionId))}" download="labels.tsv">download the label report</a>
</section>`;
  }

  private renderProgress(status: Status): string {
    const total = status.stage_count + 1; // gated stages plus the final pass
    const dots = Array.from({ length: total }, (_, i) => {
      const done = i < status.stage ? " done" : "";
      return `<span class="stage-dot${done}"></span>`;
    }).join("");
    let stageText: string;
    if (status.phase === "finalized") {
      stageText = "all stages done";
    } else if (status.phase === "staging") {
      stageText = `stage ${status.stage} of ${total}`;
    } else {
      stageText = `stage 0 of ${total} (collecting seed labels)`;
    }
    const budgets = status.budgets;
    const pct =
      budgets.human_cap > 0
        ? Math.min(100, Math.round((100 * budgets.human_used) / budgets.human_cap))
        : 0;
    const rows = PROVENANCE_ORDER.map((key) => {
      const count = status.provenance[key] ?? 0;
      const width =
        status.sample_count > 0 ? ((100 * count) / status.sample_count).toFixed(1) : "0";
      return `<div class="prov-row" data-prov="${key}">
    <span class="prov-name">${key}</span>
    <div class="prov-bar"><div class="prov-fill prov-${key}" style="width:${width}%"></div></div>
    <span class="prov-count">${count}</span>
  </div>`;
    }).join("");
    const accuracy =
      status.accuracy !== null
        ? `<p id="accuracy">accuracy vs reference: ${(100 * status.accuracy).toFixed(1)}%</p>`
        : "";
    const workerError = status.error
      ? `<p class="worker-error">worker error: ${escapeHtml(status.error)}</p>`
      : "";
    return `<section id="progress-panel" class="panel">
  <h2>progress</h2>
  <p id="stage-indicator">${stageText} ${dots}</p>
  <div class="budget">
    <div id="budget-gauge"><div class="gauge-fill" style="width:${pct}%"></div></div>
    <span id="budget-text">${budgets.human_used} / ${budgets.human_cap} human labels (15% cap)</span>
  </div>
  <div class="histogram">${rows}</div>
  ${accuracy}
  ${workerError}
</section>`;
  }

  private wire(): void {
    this.root
      .querySelector<HTMLButtonElement>("#start")
      ?.addEventListener("click", () => this.startFromForm());
    this.root
      .querySelector<HTMLButtonElement>("#attach-btn")
      ?.addEventListener("click", () => this.attachFromForm());
    this.root
      .querySelector<HTMLButtonElement>("#submit")
      ?.addEventListener("click", () => this.enqueue(() => this.submit()));
    this.root
      .querySelector<HTMLButtonElement>("#retry")
      ?.addEventListener("click", () => this.retryBanner());
    for (const button of this.root.querySelectorAll<HTMLButtonElement>(".class-btn")) {
      button.addEventListener("click", () => {
        const sample = button.dataset["sample"];
        const className = button.dataset["class"];
        if (sample && className) this.pick(sample, className);
      });
    }
  }
}

export function mount(root: HTMLElement, options: AppOptions = {}): App {
  return new App(root, options);
}
