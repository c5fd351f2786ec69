/**
 * Browser view: renders the task queue as cards, a progress/mislabel
 * dashboard, the connectivity banner and the keyword-flag form.
 */

import { MislabelReport, ProgressReport, TaskRecord } from "./api.js";
import { ConsoleController, View } from "./console.js";

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

export class DomView implements View {
  private controller!: ConsoleController;

  constructor(private readonly root: HTMLElement) {
    root.innerHTML = `
      <div id="banner" class="banner" hidden></div>
      <nav>
        <button id="queue-clusters">Cluster queue</button>
        <button id="queue-keywords">Keyword queue</button>
        <button id="dashboard-btn">Dashboard</button>
        <button id="recompile-btn">Recompile</button>
      </nav>
      <section id="queue"></section>
      <section id="dashboard"></section>
      <form id="flag-form" hidden>
        <input id="flag-service" placeholder="service name" required />
        <input id="flag-category" placeholder="category (optional)" />
        <label><input id="flag-exclude" type="checkbox" /> exclude</label>
        <button type="submit">Flag</button>
      </form>
      <p class="help">Shortcuts: 1 Creation · 2 Verification · 3 Activity ·
        4 Update · 5 Recovery · s Skip</p>
    `;
  }

  attach(controller: ConsoleController): void {
    this.controller = controller;
    this.byId("queue-clusters").onclick = () =>
      controller.loadQueue("cluster_label");
    this.byId("queue-keywords").onclick = () =>
      controller.loadQueue("keyword_flag");
    this.byId("dashboard-btn").onclick = () => controller.refreshDashboard();
    this.byId("recompile-btn").onclick = () => controller.recompile();

    document.addEventListener("keydown", (ev) => {
      if ((ev.target as HTMLElement)?.tagName === "INPUT") return;
      controller.handleKey(ev.key);
    });

    const form = this.byId("flag-form") as HTMLFormElement;
    form.onsubmit = (ev) => {
      ev.preventDefault();
      const service = (this.byId("flag-service") as HTMLInputElement).value;
      const category =
        (this.byId("flag-category") as HTMLInputElement).value || undefined;
      const exclude = (this.byId("flag-exclude") as HTMLInputElement).checked;
      controller.submitFlag(service, category, exclude || undefined);
    };
  }

  renderQueue(tasks: TaskRecord[], current: number): void {
    const queue = this.byId("queue");
    queue.innerHTML = "";
    tasks.slice(current).forEach((task, i) => {
      const card = el("article", i === 0 ? "card current" : "card");
      card.append(el("h3", undefined, `${task.kind} · ${task.payload_id}`));
      const context = task.context as Record<string, unknown>;
      if (context.exemplar) {
        card.append(el("p", "exemplar", String(context.exemplar)));
      }
      if (context.gram) {
        card.append(
          el("p", "gram", `${context.gram} (freq ${context.frequency ?? "?"})`),
        );
      }
      if (context.member_count !== undefined) {
        card.append(el("p", "count", `${context.member_count} messages`));
      }
      queue.append(card);
    });
    const keywordMode = tasks[current]?.kind === "keyword_flag";
    (this.byId("flag-form") as HTMLFormElement).hidden = !keywordMode;
  }

  renderDashboard(progress: ProgressReport, mislabels: MislabelReport): void {
    const dash = this.byId("dashboard");
    dash.innerHTML = "";
    dash.append(
      el(
        "p",
        "progress",
        `done ${progress.done} · skipped ${progress.skipped} · ` +
          `pending ${progress.pending} (v${progress.version})`,
      ),
      el(
        "p",
        "accuracy",
        `accuracy ${(mislabels.accuracy * 100).toFixed(2)}% · ` +
          `${mislabels.false_negatives}/${mislabels.errors} errors are misses`,
      ),
    );
    const grams = el("ul", "offending");
    for (const gram of mislabels.offending_grams) {
      const item = el("li");
      const link = el("a", undefined, gram);
      link.href = "#";
      link.onclick = (ev) => {
        ev.preventDefault();
        this.controller.openGram(gram);
      };
      item.append(link);
      grams.append(item);
    }
    dash.append(grams);
  }

  prefillFlagForm(gram: string): void {
    const form = this.byId("flag-form") as HTMLFormElement;
    form.hidden = false;
    (this.byId("flag-service") as HTMLInputElement).value = "";
    (this.byId("flag-service") as HTMLInputElement).placeholder =
      `service for "${gram}"`;
  }

  showBanner(message: string): void {
    const banner = this.byId("banner");
    banner.textContent = message;
    banner.hidden = false;
  }

  clearBanner(): void {
    this.byId("banner").hidden = true;
  }

  showStalePrompt(): void {
    this.showBanner(
      "your view is stale — the server has newer state; reload the queue",
    );
  }

  private byId(id: string): HTMLElement {
    const node = this.root.querySelector<HTMLElement>(`#${id}`);
    if (!node) throw new Error(`missing element #${id}`);
    return node;
  }
}
